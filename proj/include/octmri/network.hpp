#ifndef OCTMRI_NETWORK_HPP_
#define OCTMRI_NETWORK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "octmri/autodiff.hpp"
#include "octmri/io.hpp"
#include "octmri/metrics.hpp"
#include "octmri/mri.hpp"
#include "octmri/octave.hpp"

namespace octmri {

struct NetworkConfig {
  std::size_t n_blocks = 10;
  std::size_t layers_per_block = 5;
  std::size_t feature_channels = 64;
  double alpha = 0.125;
  std::size_t kernel_size = 3;
  std::size_t coils = 4;
  double learning_rate = 1e-3;
  double lr_decay = 0.95;  // multiplicative learning-rate decay per epoch
  std::size_t batch_size = 4;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  void validate() const {
    if (layers_per_block < 2) throw Error("layers_per_block must be >= 2 (entry + exit)");
    if (alpha < 0.0 || alpha >= 1.0) throw Error("alpha must be in [0,1)");
    if (feature_channels < 1) throw Error("feature_channels must be >= 1");
    if (n_blocks < 1) throw Error("n_blocks must be >= 1");
    if (coils < 1) throw Error("coils must be >= 1");
  }
};

// Per-block layer shapes: entry (alpha_in 0), body, exit (alpha_out 0). The
// exit layer maps back to the coil channel count.
inline std::vector<OctLayerSpec> block_layer_specs(const NetworkConfig& cfg) {
  cfg.validate();
  std::vector<OctLayerSpec> specs;
  for (std::size_t l = 0; l < cfg.layers_per_block; ++l) {
    OctLayerSpec s;
    s.kernel_size = cfg.kernel_size;
    s.c_in = l == 0 ? cfg.coils : cfg.feature_channels;
    s.c_out = l + 1 == cfg.layers_per_block ? cfg.coils : cfg.feature_channels;
    s.alpha_in = l == 0 ? 0.0 : cfg.alpha;
    s.alpha_out = l + 1 == cfg.layers_per_block ? 0.0 : cfg.alpha;
    specs.push_back(s);
  }
  return specs;
}

// All learnable kernels, blocks x layers, with a deterministic enumeration
// order for serialization and optimizer state alignment.
struct ModelParams {
  std::vector<std::vector<DualOctKernel>> blocks;

  template <typename Fn>
  void for_each(Fn&& fn) {
    for (std::size_t b = 0; b < blocks.size(); ++b)
      for (std::size_t l = 0; l < blocks[b].size(); ++l)
        blocks[b][l].for_each_group([&](const char* group, ComplexTensor& t) {
          fn("b" + std::to_string(b) + "_l" + std::to_string(l) + "_" + group, t);
        });
  }

  std::size_t group_count() {
    std::size_t n = 0;
    for_each([&](const std::string&, ComplexTensor&) { ++n; });
    return n;
  }
};

inline ModelParams init_params(const NetworkConfig& cfg) {
  const auto specs = block_layer_specs(cfg);
  ModelParams p;
  p.blocks.resize(cfg.n_blocks);
  for (std::size_t b = 0; b < cfg.n_blocks; ++b)
    for (std::size_t l = 0; l < specs.size(); ++l)
      p.blocks[b].push_back(init_dual_oct_kernel(specs[l], cfg.seed + 1 + b * 1000 + l));
  return p;
}

inline ModelParams zero_params(const NetworkConfig& cfg) {
  ModelParams p = init_params(cfg);
  p.for_each([](const std::string&, ComplexTensor& t) {
    std::fill(t.real.begin(), t.real.end(), 0.0);
    std::fill(t.imag.begin(), t.imag.end(), 0.0);
  });
  return p;
}

// Kernel leaves on a tape, aligned with ModelParams::for_each enumeration.
struct ParamNodes {
  std::vector<std::vector<DualOctKernelNodes>> blocks;
  std::vector<std::pair<std::string, NodeId>> flat;
};

inline ParamNodes param_leaves(Graph& g, ModelParams& params) {
  ParamNodes pn;
  pn.blocks.resize(params.blocks.size());
  for (std::size_t b = 0; b < params.blocks.size(); ++b)
    for (std::size_t l = 0; l < params.blocks[b].size(); ++l)
      pn.blocks[b].push_back(kernel_leaves(g, params.blocks[b][l]));
  // flat view in the same order as ModelParams::for_each
  for (std::size_t b = 0; b < pn.blocks.size(); ++b)
    for (std::size_t l = 0; l < pn.blocks[b].size(); ++l) {
      const DualOctKernelNodes& kn = pn.blocks[b][l];
      auto prefix = "b" + std::to_string(b) + "_l" + std::to_string(l) + "_";
      auto put = [&](const std::optional<NodeId>& id, const char* group) {
        if (id) pn.flat.emplace_back(prefix + group, *id);
      };
      put(kn.kr_hh, "kr_hh");
      put(kn.kr_hl, "kr_hl");
      put(kn.kr_lh, "kr_lh");
      put(kn.kr_ll, "kr_ll");
      put(kn.ki_hh, "ki_hh");
      put(kn.ki_hl, "ki_hl");
      put(kn.ki_lh, "ki_lh");
      put(kn.ki_ll, "ki_ll");
    }
  return pn;
}

// Builds the Fig.-4-style reconstruction network on the tape:
// x0 = zero-filled coil images; per block, a residual dual-octave stack
// followed by a hard data-fidelity unit (including after the last block).
inline NodeId network_forward(Graph& g, const NetworkConfig& cfg, const ParamNodes& pn,
                              const KSpaceAcquisition& acq) {
  const ComplexTensor x0 = zero_filled(acq);
  if (x0.dim(1) % 2 != 0 || x0.dim(2) % 2 != 0)
    throw ShapeError("network_forward: spatial dims must be even, got " + shape_str(x0.shape));
  const ConvSpec spec(cfg.kernel_size);
  const ComplexTensor mask_t = acq.mask.to_tensor();
  NodeId x = g.leaf(x0, "zero_filled");
  for (std::size_t b = 0; b < pn.blocks.size(); ++b) {
    OctNodes h;
    h.high = x;
    const std::size_t n_layers = pn.blocks[b].size();
    for (std::size_t l = 0; l < n_layers; ++l) {
      h = dual_octconv(g, h, pn.blocks[b][l], spec);
      if (l + 1 < n_layers) {
        if (h.high) h.high = g.crelu(*h.high);
        if (h.low) h.low = g.crelu(*h.low);
      }
    }
    if (!h.high || h.low)
      throw ShapeError("network_forward: block must end with an exit layer (alpha_out = 0)");
    x = g.add(x, *h.high);
    x = g.ifft2(g.kspace_replace(g.fft2(x), mask_t, acq.y));
  }
  return x;
}

// Value-level forward pass (reconstruction).
inline ComplexTensor reconstruct(const NetworkConfig& cfg, ModelParams& params,
                                 const KSpaceAcquisition& acq) {
  Graph g;
  ParamNodes pn = param_leaves(g, params);
  return g.value(network_forward(g, cfg, pn, acq));
}

// Mean over samples of sum(|dr| + |di|). Accepts [N,c,H,W] batches or a
// single [c,H,W] sample.
inline double l1_loss(const ComplexTensor& pred, const ComplexTensor& target) {
  if (!pred.same_shape(target))
    throw ShapeError("l1_loss: shape mismatch " + shape_str(pred.shape) + " vs " +
                     shape_str(target.shape));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i)
    acc += std::abs(pred.real[i] - target.real[i]) + std::abs(pred.imag[i] - target.imag[i]);
  const double n = pred.ndim() == 4 ? static_cast<double>(pred.dim(0)) : 1.0;
  return acc / n;
}

// ---------------------------------------------------------------------------
// Adam optimizer (beta1 = 0.9, beta2 = 0.999, eps = 1e-8, bias correction)

struct AdamState {
  std::vector<ComplexTensor> m;
  std::vector<ComplexTensor> v;
  std::size_t t = 0;  // completed steps
};

inline AdamState make_adam_state(ModelParams& params) {
  AdamState st;
  params.for_each([&](const std::string&, ComplexTensor& p) {
    st.m.push_back(ComplexTensor::zeros(p.shape));
    st.v.push_back(ComplexTensor::zeros(p.shape));
  });
  return st;
}

// One Adam step over the flat parameter enumeration; t is the 1-based step
// index used for bias correction.
inline void adam_step(std::vector<ComplexTensor*>& params,
                      const std::vector<ComplexTensor>& grads, AdamState& state, std::size_t t,
                      double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error("adam_step: parameter/gradient/state misalignment (" +
                std::to_string(params.size()) + "/" + std::to_string(grads.size()) + "/" +
                std::to_string(state.m.size()) + ")");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    ComplexTensor& p = *params[pi];
    const ComplexTensor& gt = grads[pi];
    if (!p.same_shape(gt) || !p.same_shape(state.m[pi]))
      throw Error("adam_step: shape misalignment at parameter " + std::to_string(pi));
    auto upd = [&](std::vector<double>& pv, const std::vector<double>& gv, std::vector<double>& mv,
                   std::vector<double>& vv) {
      for (std::size_t i = 0; i < pv.size(); ++i) {
        mv[i] = beta1 * mv[i] + (1.0 - beta1) * gv[i];
        vv[i] = beta2 * vv[i] + (1.0 - beta2) * gv[i] * gv[i];
        const double mhat = mv[i] / bc1;
        const double vhat = vv[i] / bc2;
        pv[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    };
    upd(p.real, gt.real, state.m[pi].real, state.v[pi].real);
    upd(p.imag, gt.imag, state.m[pi].imag, state.v[pi].imag);
  }
  state.t = t;
}

// ---------------------------------------------------------------------------
// Training

struct TrainDataSpec {
  std::size_t n_train = 64;
  std::size_t n_val = 8;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t n_ellipses = 6;
  MaskPattern pattern = MaskPattern::Random2D;
  double accel = 3.0;
  std::size_t center_lines = SIZE_MAX;
  std::uint64_t mask_seed = 1;
  std::uint64_t data_seed = 1;
};

struct Sample {
  KSpaceAcquisition acq;
  ComplexTensor target;  // coil images S_i x
};

inline std::vector<Sample> make_dataset(const NetworkConfig& cfg, const TrainDataSpec& ds,
                                        const SamplingMask& mask, const CoilSet& coils,
                                        std::uint64_t seed_base, std::size_t n) {
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ComplexTensor x = make_phantom(ds.height, ds.width, ds.n_ellipses, seed_base + i);
    Sample s;
    s.acq = forward_model(x, coils, mask);
    s.target = coil_images(x, coils);
    out.push_back(std::move(s));
  }
  (void)cfg;
  return out;
}

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t iter = 0;  // cumulative iterations
  double loss = 0.0;     // epoch mean training loss
  double val_psnr = 0.0;
  double val_ssim = 0.0;
};

struct TrainResult {
  ModelParams params;
  AdamState state;
  std::vector<EpochLog> log;
  double initial_loss = 0.0;      // first mini-batch loss
  double final_epoch_loss = 0.0;  // mean loss of the last epoch
  double zero_filled_psnr = 0.0;  // mean over validation set
  std::uint64_t macs_per_iter = 0;
  std::size_t total_iters = 0;
};

// Mini-batch Adam on the L1 objective over synthetic phantom acquisitions.
// Deterministic per config seed.
inline TrainResult train(const NetworkConfig& cfg, const TrainDataSpec& ds) {
  cfg.validate();
  if (ds.n_train == 0) throw Error("train: empty dataset");
  const SamplingMask mask =
      make_mask(ds.pattern, ds.accel, ds.height, ds.width, ds.mask_seed, ds.center_lines);
  const CoilSet coils = make_sensitivities(cfg.coils, ds.height, ds.width);
  std::vector<Sample> train_set = make_dataset(cfg, ds, mask, coils, ds.data_seed, ds.n_train);
  std::vector<Sample> val_set =
      make_dataset(cfg, ds, mask, coils, ds.data_seed + 1000000, ds.n_val);

  TrainResult res;
  res.params = init_params(cfg);
  res.state = make_adam_state(res.params);

  // mean zero-filled PSNR over the validation set
  if (!val_set.empty()) {
    double acc = 0.0;
    for (const Sample& s : val_set)
      acc += psnr(rss_combine(s.target), rss_combine(zero_filled(s.acq)));
    res.zero_filled_psnr = acc / static_cast<double>(val_set.size());
  }

  const std::size_t batch = std::max<std::size_t>(1, std::min(cfg.batch_size, ds.n_train));
  const std::size_t iters_per_epoch = std::max<std::size_t>(1, ds.n_train / batch);
  Rng shuffle_rng(cfg.seed + 77);
  std::size_t global_iter = 0;
  bool first = true;

  auto validate = [&]() -> std::pair<double, double> {
    if (val_set.empty()) return {0.0, 0.0};
    double ap = 0.0, as = 0.0;
    for (const Sample& s : val_set) {
      ComplexTensor rec = reconstruct(cfg, res.params, s.acq);
      ComplexTensor ref = rss_combine(s.target);
      ComplexTensor tst = rss_combine(rec);
      ap += psnr(ref, tst);
      as += ssim(ref, tst);
    }
    return {ap / static_cast<double>(val_set.size()), as / static_cast<double>(val_set.size())};
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate * std::pow(cfg.lr_decay, static_cast<double>(epoch));
    std::vector<std::size_t> order(ds.n_train);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t it = 0; it < iters_per_epoch; ++it) {
      const bool measure = global_iter == 0;
      if (measure) mac_counter_reset();
      Graph g;
      ParamNodes pn = param_leaves(g, res.params);
      NodeId total = 0;
      bool have_total = false;
      for (std::size_t bi = 0; bi < batch; ++bi) {
        const Sample& s = train_set[order[(it * batch + bi) % ds.n_train]];
        NodeId out = network_forward(g, cfg, pn, s.acq);
        NodeId li = g.l1(out, s.target);
        total = have_total ? g.add(total, li) : li;
        have_total = true;
      }
      NodeId loss_node = g.scale(total, 1.0 / static_cast<double>(batch));
      const double loss = g.value(loss_node).real[0];
      GradientMap gm = g.backward(loss_node);
      if (measure) res.macs_per_iter = mac_counter_read();

      std::vector<ComplexTensor*> prefs;
      res.params.for_each([&](const std::string&, ComplexTensor& t) { prefs.push_back(&t); });
      std::vector<ComplexTensor> grads;
      grads.reserve(pn.flat.size());
      for (const auto& [name, id] : pn.flat)
        grads.push_back(gm.has(id) ? gm.at(id) : ComplexTensor::zeros(g.value(id).shape));
      ++global_iter;
      adam_step(prefs, grads, res.state, global_iter, lr);

      epoch_loss += loss;
      if (first) {
        res.initial_loss = loss;
        first = false;
      }
    }
    epoch_loss /= static_cast<double>(iters_per_epoch);
    auto [vp, vs] = validate();
    res.log.push_back({epoch, global_iter, epoch_loss, vp, vs});
    res.final_epoch_loss = epoch_loss;
  }
  res.total_iters = global_iter;
  return res;
}

// ---------------------------------------------------------------------------
// Checkpoints: manifest.txt (key=value config + adam step) plus one DOCT
// file per kernel group and per optimizer moment tensor.

inline void save_checkpoint(const std::string& dir, const NetworkConfig& cfg, ModelParams& params,
                            const AdamState* state = nullptr) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream mf(dir + "/manifest.txt", std::ios::trunc);
  if (!mf) throw IoError("cannot write checkpoint manifest in '" + dir + "'");
  mf << std::setprecision(17);
  mf << "n_blocks=" << cfg.n_blocks << "\n";
  mf << "layers_per_block=" << cfg.layers_per_block << "\n";
  mf << "feature_channels=" << cfg.feature_channels << "\n";
  mf << "alpha=" << cfg.alpha << "\n";
  mf << "kernel_size=" << cfg.kernel_size << "\n";
  mf << "coils=" << cfg.coils << "\n";
  mf << "learning_rate=" << cfg.learning_rate << "\n";
  mf << "lr_decay=" << cfg.lr_decay << "\n";
  mf << "batch_size=" << cfg.batch_size << "\n";
  mf << "epochs=" << cfg.epochs << "\n";
  mf << "seed=" << cfg.seed << "\n";
  mf << "adam_t=" << (state ? state->t : 0) << "\n";
  params.for_each([&](const std::string& name, ComplexTensor& t) {
    mf << "group=" << name << " shape=" << shape_str(t.shape) << "\n";
    doct::write(dir + "/" + name + ".doct", t);
  });
  if (state) {
    std::size_t i = 0;
    params.for_each([&](const std::string& name, ComplexTensor&) {
      doct::write(dir + "/" + name + ".m.doct", state->m[i]);
      doct::write(dir + "/" + name + ".v.doct", state->v[i]);
      ++i;
    });
  }
}

struct Checkpoint {
  NetworkConfig config;
  ModelParams params;
  AdamState state;
  bool has_state = false;
};

inline Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream mf(dir + "/manifest.txt");
  if (!mf) throw IoError("cannot read checkpoint manifest in '" + dir + "'");
  Checkpoint ck;
  std::string line;
  std::size_t adam_t = 0;
  while (std::getline(mf, line)) {
    if (line.empty() || line.rfind("group=", 0) == 0) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed manifest line: '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    NetworkConfig& c = ck.config;
    if (key == "n_blocks") c.n_blocks = std::stoul(val);
    else if (key == "layers_per_block") c.layers_per_block = std::stoul(val);
    else if (key == "feature_channels") c.feature_channels = std::stoul(val);
    else if (key == "alpha") c.alpha = std::stod(val);
    else if (key == "kernel_size") c.kernel_size = std::stoul(val);
    else if (key == "coils") c.coils = std::stoul(val);
    else if (key == "learning_rate") c.learning_rate = std::stod(val);
    else if (key == "lr_decay") c.lr_decay = std::stod(val);
    else if (key == "batch_size") c.batch_size = std::stoul(val);
    else if (key == "epochs") c.epochs = std::stoul(val);
    else if (key == "seed") c.seed = std::stoull(val);
    else if (key == "adam_t") adam_t = std::stoul(val);
    else throw IoError("unknown manifest key '" + key + "'");
  }
  ck.params = zero_params(ck.config);
  ck.params.for_each([&](const std::string& name, ComplexTensor& t) {
    ComplexTensor loaded = doct::read(dir + "/" + name + ".doct");
    if (!loaded.same_shape(t))
      throw IoError("checkpoint group '" + name + "' has shape " + shape_str(loaded.shape) +
                    ", expected " + shape_str(t.shape));
    t = std::move(loaded);
  });
  if (std::filesystem::exists(dir + "/" +
                              [&] {
                                std::string first;
                                ck.params.for_each([&](const std::string& n, ComplexTensor&) {
                                  if (first.empty()) first = n;
                                });
                                return first;
                              }() +
                              ".m.doct")) {
    ck.state = make_adam_state(ck.params);
    std::size_t i = 0;
    ck.params.for_each([&](const std::string& name, ComplexTensor&) {
      ck.state.m[i] = doct::read(dir + "/" + name + ".m.doct");
      ck.state.v[i] = doct::read(dir + "/" + name + ".v.doct");
      ++i;
    });
    ck.state.t = adam_t;
    ck.has_state = true;
  }
  return ck;
}

// Model-level forward FLOPs per sample (the analytical per-layer model summed
// over all layers and blocks).
inline std::uint64_t network_flops_per_sample(const NetworkConfig& cfg, std::size_t H,
                                              std::size_t W) {
  const auto specs = block_layer_specs(cfg);
  std::uint64_t total = 0;
  for (const auto& s : specs) total += flops_dual_octconv_spec(s, H, W);
  return total * cfg.n_blocks;
}

// Metric log CSV with header epoch,iter,loss,val_psnr,val_ssim.
inline void write_metric_csv(const std::string& path, const std::vector<EpochLog>& log) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "epoch,iter,loss,val_psnr,val_ssim\n";
  char buf[160];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.10g,%.10g,%.10g\n", row.epoch, row.iter, row.loss,
                  row.val_psnr, row.val_ssim);
    os << buf;
  }
}

}  // namespace octmri

#endif  // OCTMRI_NETWORK_HPP_
