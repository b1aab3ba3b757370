// Acceptance harness: runs the eight release criteria and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "octmri/autodiff.hpp"
#include "octmri/io.hpp"
#include "octmri/metrics.hpp"
#include "octmri/mri.hpp"
#include "octmri/network.hpp"
#include "octmri/octave.hpp"

using namespace octmri;
namespace fs = std::filesystem;

namespace {

// pinned tolerances
constexpr double kTolReduction = 1e-12;
constexpr double kTolOracle = 1e-10;
constexpr double kTolGradOp = 1e-5;
constexpr double kTolGradEndToEnd = 1e-4;
constexpr double kTolPhysics = 1e-10;
constexpr double kFlopsRatioAlpha125 = 0.82421875;
constexpr double kToyPsnrGainDb = 2.0;
constexpr double kToyLossRatio = 0.5;
constexpr std::size_t kToyMaxIters = 1000;
constexpr double kToyMaxSeconds = 900.0;

// ---------------------------------------------------------------------------
// reference complex dual-octave layer, written independently of the library
// kernels (std::complex arithmetic, quadruple loops)

using CImage = std::vector<std::complex<double>>;

CImage to_c(const ComplexTensor& t) {
  CImage out(t.numel());
  for (std::size_t i = 0; i < t.numel(); ++i) out[i] = {t.real[i], t.imag[i]};
  return out;
}

CImage ref_cconv(const CImage& x, std::size_t cin, std::size_t h, std::size_t w, const CImage& kr,
                 const CImage& ki, std::size_t cout, std::size_t ks) {
  const long pad = static_cast<long>((ks - 1) / 2);
  CImage out(cout * h * w, {0.0, 0.0});
  for (std::size_t co = 0; co < cout; ++co)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t xx = 0; xx < w; ++xx)
        for (std::size_t ci = 0; ci < cin; ++ci)
          for (std::size_t ky = 0; ky < ks; ++ky)
            for (std::size_t kx = 0; kx < ks; ++kx) {
              const long yy = static_cast<long>(y) + static_cast<long>(ky) - pad;
              const long xi = static_cast<long>(xx) + static_cast<long>(kx) - pad;
              if (yy < 0 || yy >= static_cast<long>(h) || xi < 0 || xi >= static_cast<long>(w))
                continue;
              const std::size_t kidx = ((co * cin + ci) * ks + ky) * ks + kx;
              out[(co * h + y) * w + xx] +=
                  std::complex<double>(kr[kidx].real(), ki[kidx].real()) *
                  x[(ci * h + static_cast<std::size_t>(yy)) * w + static_cast<std::size_t>(xi)];
            }
  return out;
}

CImage ref_pool2(const CImage& x, std::size_t c, std::size_t h, std::size_t w) {
  CImage out(c * (h / 2) * (w / 2));
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t y = 0; y < h / 2; ++y)
      for (std::size_t xx = 0; xx < w / 2; ++xx)
        out[(ci * (h / 2) + y) * (w / 2) + xx] =
            0.25 * (x[(ci * h + 2 * y) * w + 2 * xx] + x[(ci * h + 2 * y) * w + 2 * xx + 1] +
                    x[(ci * h + 2 * y + 1) * w + 2 * xx] + x[(ci * h + 2 * y + 1) * w + 2 * xx + 1]);
  return out;
}

CImage ref_up2(const CImage& x, std::size_t c, std::size_t h, std::size_t w) {
  CImage out(c * 4 * h * w);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx)
        out[(ci * 2 * h + y) * 2 * w + xx] = x[(ci * h + y / 2) * w + xx / 2];
  return out;
}

struct RefOut {
  CImage high, low;
};

RefOut ref_dual_octconv(const OctFeature& x, const DualOctKernel& k, std::size_t ks) {
  const std::size_t h = x.high->dim(1), w = x.high->dim(2);
  const std::size_t out_h = k.kr_hh->dim(0);
  RefOut y;
  y.high = ref_cconv(to_c(*x.high), x.high->dim(0), h, w, to_c(*k.kr_hh), to_c(*k.ki_hh), out_h, ks);
  {
    CImage lo = ref_cconv(to_c(*x.low), x.low->dim(0), h / 2, w / 2, to_c(*k.kr_lh),
                          to_c(*k.ki_lh), out_h, ks);
    CImage up = ref_up2(lo, out_h, h / 2, w / 2);
    for (std::size_t i = 0; i < y.high.size(); ++i) y.high[i] += up[i];
  }
  const std::size_t out_l = k.kr_ll->dim(0);
  y.low = ref_cconv(to_c(*x.low), x.low->dim(0), h / 2, w / 2, to_c(*k.kr_ll), to_c(*k.ki_ll),
                    out_l, ks);
  {
    CImage pooled = ref_pool2(to_c(*x.high), x.high->dim(0), h, w);
    CImage t = ref_cconv(pooled, x.high->dim(0), h / 2, w / 2, to_c(*k.kr_hl), to_c(*k.ki_hl),
                         out_l, ks);
    for (std::size_t i = 0; i < y.low.size(); ++i) y.low[i] += t[i];
  }
  return y;
}

double diff_c(const ComplexTensor& a, const CImage& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(a.real[i] - b[i].real()));
    m = std::max(m, std::abs(a.imag[i] - b[i].imag()));
  }
  return m;
}

DualOctKernel random_kernel(const OctLayerSpec& spec, Rng& rng) {
  auto [in_h, in_l] = split_channels(spec.c_in, spec.alpha_in);
  auto [out_h, out_l] = split_channels(spec.c_out, spec.alpha_out);
  DualOctKernel k;
  auto mk = [&](std::size_t co, std::size_t ci) {
    return random_tensor({co, ci, spec.kernel_size, spec.kernel_size}, rng);
  };
  if (out_h && in_h) { k.kr_hh = mk(out_h, in_h); k.ki_hh = mk(out_h, in_h); }
  if (out_l && in_h) { k.kr_hl = mk(out_l, in_h); k.ki_hl = mk(out_l, in_h); }
  if (out_h && in_l) { k.kr_lh = mk(out_h, in_l); k.ki_lh = mk(out_h, in_l); }
  if (out_l && in_l) { k.kr_ll = mk(out_l, in_l); k.ki_ll = mk(out_l, in_l); }
  return k;
}

// ---------------------------------------------------------------------------
// criteria

bool criterion1(std::string& detail) {
  Rng rng(101);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const std::size_t cin = 1 + rng.below(8);
    const std::size_t cout = 1 + rng.below(8);
    const std::size_t h = 2 * (2 + rng.below(7));  // 4..16
    const std::size_t w = 2 * (2 + rng.below(7));
    OctLayerSpec spec{cin, cout, 0.0, 0.0, 3};
    DualOctKernel k = random_kernel(spec, rng);
    OctFeature x;
    x.high = random_tensor({cin, h, w}, rng);
    x.alpha = 0.0;
    OctFeature y = dual_octconv(x, k, ConvSpec(3), 0.0);
    ComplexTensor want = complex_conv2d(*x.high, *k.kr_hh, *k.ki_hh, ConvSpec(3));
    worst = std::max(worst, max_abs_diff(*y.high, want));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |dual_octconv(alpha=0) - complex_conv2d| = %.3g", worst);
  detail = buf;
  return worst < kTolReduction;
}

bool criterion2(std::string& detail) {
  Rng rng(202);
  double worst = 0.0;
  const double alphas[] = {0.125, 0.25, 0.5};
  for (int inst = 0; inst < 20; ++inst) {
    const double alpha = alphas[inst % 3];
    const std::size_t c = 8;
    auto [in_h, in_l] = split_channels(c, alpha);
    OctLayerSpec spec{c, c, alpha, alpha, 3};
    DualOctKernel k = random_kernel(spec, rng);
    OctFeature x;
    x.high = random_tensor({in_h, 8, 8}, rng);
    x.low = random_tensor({in_l, 4, 4}, rng);
    x.alpha = alpha;

    // complex layer vs reference on a random input
    OctFeature got = dual_octconv(x, k, ConvSpec(3), alpha);
    RefOut want = ref_dual_octconv(x, k, 3);
    worst = std::max(worst, diff_c(*got.high, want.high));
    worst = std::max(worst, diff_c(*got.low, want.low));

    // impulse-response probe: materialize one operator column per instance
    OctFeature probe;
    probe.high = ComplexTensor::zeros({in_h, 8, 8});
    probe.low = ComplexTensor::zeros({in_l, 4, 4});
    probe.alpha = alpha;
    probe.high->real[rng.below(probe.high->numel())] = 1.0;
    probe.low->imag[rng.below(probe.low->numel())] = 1.0;
    OctFeature gp = dual_octconv(probe, k, ConvSpec(3), alpha);
    RefOut wp = ref_dual_octconv(probe, k, 3);
    worst = std::max(worst, diff_c(*gp.high, wp.high));
    worst = std::max(worst, diff_c(*gp.low, wp.low));

    // real-plane routing vs the single-part reference (imag planes zeroed)
    OctFeature xr = x;
    xr.high->imag.assign(xr.high->imag.size(), 0.0);
    xr.low->imag.assign(xr.low->imag.size(), 0.0);
    auto [hr, lr] = octave_conv_real(xr.high, xr.low, k.kr_hh, k.kr_hl, k.kr_lh, k.kr_ll,
                                     ConvSpec(3));
    DualOctKernel kr_only = k;
    auto zero_imag = [](std::optional<ComplexTensor>& t) {
      if (t) t->real.assign(t->real.size(), 0.0);
    };
    // reference with ki = 0 gives the pure K_r routing
    zero_imag(kr_only.ki_hh);
    zero_imag(kr_only.ki_hl);
    zero_imag(kr_only.ki_lh);
    zero_imag(kr_only.ki_ll);
    RefOut wr = ref_dual_octconv(xr, kr_only, 3);
    worst = std::max(worst, diff_c(*hr, wr.high));
    worst = std::max(worst, diff_c(*lr, wr.low));
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max deviation from brute-force oracle = %.3g", worst);
  detail = buf;
  return worst < kTolOracle;
}

bool criterion3(std::string& detail) {
  double worst_op = 0.0;
  for (const auto& [name, maker] : grad_check_registry()) {
    (void)maker;
    worst_op = std::max(worst_op, grad_check(name, 303));
    worst_op = std::max(worst_op, grad_check(name, 904));
  }

  // micro end-to-end network: 1 block, 2 layers, 4 channels, 8x8, 2 coils
  NetworkConfig cfg;
  cfg.n_blocks = 1;
  cfg.layers_per_block = 2;
  cfg.feature_channels = 4;
  cfg.alpha = 0.25;
  cfg.kernel_size = 3;
  cfg.coils = 2;
  cfg.seed = 303;
  ComplexTensor phantom = make_phantom(8, 8, 3, 303);
  CoilSet coils = make_sensitivities(cfg.coils, 8, 8);
  SamplingMask mask = make_mask(MaskPattern::Random2D, 3.0, 8, 8, 303);
  KSpaceAcquisition acq = forward_model(phantom, coils, mask);
  ComplexTensor target = coil_images(phantom, coils);
  ModelParams params = init_params(cfg);

  auto loss_value = [&](ModelParams& ps) {
    Graph g;
    ParamNodes pn = param_leaves(g, ps);
    return g.value(g.l1(network_forward(g, cfg, pn, acq), target)).real[0];
  };

  Graph g;
  ParamNodes pn = param_leaves(g, params);
  GradientMap gm = g.backward(g.l1(network_forward(g, cfg, pn, acq), target));

  const double eps = 1e-5;
  double worst_e2e = 0.0;
  for (const auto& [name, id] : pn.flat) {
    ComplexTensor* pt = nullptr;
    params.for_each([&, n = name](const std::string& nm, ComplexTensor& t) {
      if (nm == n) pt = &t;
    });
    const ComplexTensor& analytic = gm.at(id);
    for (int plane = 0; plane < 2; ++plane)
      for (std::size_t i = 0; i < pt->numel(); ++i) {
        auto& vec = plane == 0 ? pt->real : pt->imag;
        const double orig = vec[i];
        vec[i] = orig + eps;
        const double fp = loss_value(params);
        vec[i] = orig - eps;
        const double fm = loss_value(params);
        vec[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = plane == 0 ? analytic.real[i] : analytic.imag[i];
        worst_e2e = std::max(
            worst_e2e, std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric)));
      }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "worst op rel err = %.3g, end-to-end rel err = %.3g", worst_op,
                worst_e2e);
  detail = buf;
  return worst_op < kTolGradOp && worst_e2e < kTolGradEndToEnd;
}

bool criterion4(std::string& detail) {
  Rng rng(404);
  double worst = 0.0;

  ComplexTensor x = random_tensor({2, 12, 10}, rng);
  worst = std::max(worst, max_abs_diff(ifft2(fft2(x)), x));
  auto norm2 = [](const ComplexTensor& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.numel(); ++i)
      s += t.real[i] * t.real[i] + t.imag[i] * t.imag[i];
    return s;
  };
  worst = std::max(worst, std::abs(norm2(fft2(x)) - norm2(x)));

  ComplexTensor ph = make_phantom(16, 16, 5, 404);
  CoilSet coils = make_sensitivities(4, 16, 16);
  for (std::size_t p = 0; p < 16 * 16; ++p) {
    double ss = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const std::size_t idx = i * 256 + p;
      ss += coils.maps.real[idx] * coils.maps.real[idx] +
            coils.maps.imag[idx] * coils.maps.imag[idx];
    }
    worst = std::max(worst, std::abs(ss - 1.0));
  }

  SamplingMask mask = make_mask(MaskPattern::Random2D, 3.0, 16, 16, 404);
  KSpaceAcquisition acq = forward_model(ph, coils, mask);
  ComplexTensor guess = random_tensor({4, 16, 16}, rng);
  ComplexTensor once = data_fidelity(guess, acq);
  worst = std::max(worst, max_abs_diff(data_fidelity(once, acq), once));
  ComplexTensor k = fft2(once);
  for (std::size_t i = 0; i < k.numel(); ++i) {
    if (!acq.mask.grid[i % 256]) continue;
    worst = std::max(worst, std::abs(k.real[i] - acq.y.real[i]));
    worst = std::max(worst, std::abs(k.imag[i] - acq.y.imag[i]));
  }

  SamplingMask full = make_mask(MaskPattern::Uniform1D, 1.0, 16, 16, 0);
  KSpaceAcquisition facq = forward_model(ph, coils, full);
  worst = std::max(worst, max_abs_diff(zero_filled(facq), coil_images(ph, coils)));

  char buf[96];
  std::snprintf(buf, sizeof(buf), "max physics invariant violation = %.3g", worst);
  detail = buf;
  return worst < kTolPhysics;
}

bool criterion5(std::string& detail) {
  const auto dense = flops_dual_octconv(64, 64, 64, 64, 3, 0.0);
  const auto oct = flops_dual_octconv(64, 64, 64, 64, 3, 0.125);
  const double ratio = static_cast<double>(oct) / static_cast<double>(dense);
  bool decreasing = true;
  std::uint64_t prev = UINT64_MAX;
  for (double a : {0.0, 0.125, 0.25, 0.5, 0.75}) {
    const auto f = flops_dual_octconv(64, 64, 64, 64, 3, a);
    if (f >= prev) decreasing = false;
    prev = f;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "flops(0.125)/flops(0) = %.10g, strictly decreasing = %s", ratio,
                decreasing ? "yes" : "no");
  detail = buf;
  return ratio == kFlopsRatioAlpha125 && decreasing;
}

NetworkConfig toy_config(double alpha) {
  NetworkConfig cfg;
  cfg.n_blocks = 2;
  cfg.layers_per_block = 3;  // entry + body + exit
  cfg.feature_channels = 16;
  cfg.alpha = alpha;
  cfg.kernel_size = 3;
  cfg.coils = 4;
  cfg.learning_rate = 1e-3;
  cfg.lr_decay = 0.95;
  cfg.batch_size = 4;
  cfg.seed = 1;
  return cfg;
}

TrainDataSpec toy_data() {
  TrainDataSpec ds;
  ds.n_train = 64;
  ds.n_val = 8;
  ds.height = 64;
  ds.width = 64;
  ds.n_ellipses = 6;
  ds.pattern = MaskPattern::Random2D;
  ds.accel = 3.0;
  ds.mask_seed = 1;
  ds.data_seed = 1;
  return ds;
}

bool criterion6(std::string& detail, TrainResult& out) {
  NetworkConfig cfg = toy_config(0.125);
  cfg.epochs = 10;  // 160 iterations
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult r = train(cfg, toy_data());
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double gain = r.log.back().val_psnr - r.zero_filled_psnr;
  const double loss_ratio = r.final_epoch_loss / r.initial_loss;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "iters=%zu, val PSNR %.2f dB vs zero-filled %.2f dB (gain %.2f), "
                "loss ratio %.3f, %.0f s",
                r.total_iters, r.log.back().val_psnr, r.zero_filled_psnr, gain, loss_ratio, secs);
  detail = buf;
  const bool ok = r.total_iters <= kToyMaxIters && gain >= kToyPsnrGainDb &&
                  loss_ratio < kToyLossRatio && secs < kToyMaxSeconds;
  out = std::move(r);
  return ok;
}

bool criterion7(std::string& detail) {
  TrainDataSpec ds = toy_data();
  NetworkConfig dense = toy_config(0.0);
  NetworkConfig oct = toy_config(0.125);
  dense.epochs = 4;
  oct.epochs = 4;
  TrainResult rd = train(dense, ds);
  TrainResult ro = train(oct, ds);
  const double rdr = rd.final_epoch_loss / rd.initial_loss;
  const double ror = ro.final_epoch_loss / ro.initial_loss;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "loss ratios: alpha=0 %.3f, alpha=0.125 %.3f; MACs/iter %llu vs %llu", rdr, ror,
                static_cast<unsigned long long>(rd.macs_per_iter),
                static_cast<unsigned long long>(ro.macs_per_iter));
  detail = buf;
  // both converge (loss clearly decreasing) and the octave run is cheaper
  return rdr < 0.7 && ror < 0.7 && ro.macs_per_iter < rd.macs_per_iter;
}

bool criterion8(std::string& detail) {
  const std::string cli = OCTMRI_CLI_PATH;
  const fs::path dir = "acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& leaf) { return (dir / leaf).string(); };
  auto run = [&](const std::string& args) {
    const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  auto slurp = [](const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
  };

  bool ok = true;
  std::string failed;
  auto check_pair = [&](const std::string& what, const std::string& a, const std::string& b) {
    const std::string ca = slurp(a), cb = slurp(b);
    if (ca.empty() || ca != cb) {
      ok = false;
      if (failed.empty()) failed = what;
    }
  };

  for (const char* pat : {"uniform1d", "cartesian1d", "random2d", "radial2d"}) {
    const std::string base = std::string("mask --pattern ") + pat + " --accel 3 --size 32x32 --seed 5 --out ";
    if (!run(base + p(std::string(pat) + "_a.doct")) || !run(base + p(std::string(pat) + "_b.doct")))
      return detail = "mask command failed", false;
    check_pair(std::string("mask/") + pat, p(std::string(pat) + "_a.doct"),
               p(std::string(pat) + "_b.doct"));
  }

  const std::string phb = "phantom --size 32x32 --n 5 --seed 9 --out ";
  if (!run(phb + p("ph_a.doct")) || !run(phb + p("ph_b.doct")))
    return detail = "phantom command failed", false;
  check_pair("phantom", p("ph_a.doct"), p("ph_b.doct"));

  const std::string simb =
      "simulate --phantom " + p("ph_a.doct") + " --coils 4 --mask " + p("random2d_a.doct") + " --out ";
  if (!run(simb + p("acq_a")) || !run(simb + p("acq_b")))
    return detail = "simulate command failed", false;
  for (const char* f : {"kspace.doct", "mask.doct", "reference.doct", "zero_filled.doct"})
    check_pair(std::string("simulate/") + f, p(std::string("acq_a/") + f),
               p(std::string("acq_b/") + f));

  {
    std::ofstream cfg(p("run.cfg"));
    cfg << "n_blocks=1\nlayers_per_block=2\nfeature_channels=4\nalpha=0.25\ncoils=4\n"
        << "batch_size=2\nepochs=1\nseed=4\ntrain_phantoms=2\nval_phantoms=0\n"
        << "height=32\nwidth=32\nmask_pattern=random2d\nmask_accel=3\n";
  }
  const std::string trb = "train --config " + p("run.cfg") + " --out ";
  if (!run(trb + p("ck_a")) || !run(trb + p("ck_b")))
    return detail = "train command failed", false;
  for (const auto& entry : fs::directory_iterator(dir / "ck_a")) {
    const std::string leaf = entry.path().filename().string();
    check_pair("train/" + leaf, p("ck_a/" + leaf), p("ck_b/" + leaf));
  }

  const std::string reb = "reconstruct --ckpt " + p("ck_a") + " --acq " + p("acq_a") + " --out ";
  if (!run(reb + p("rec_a.doct")) || !run(reb + p("rec_b.doct")))
    return detail = "reconstruct command failed", false;
  check_pair("reconstruct", p("rec_a.doct"), p("rec_b.doct"));

  fs::remove_all(dir);
  detail = ok ? "all CLI outputs bitwise identical across re-runs"
              : "first mismatching output: " + failed;
  return ok;
}

}  // namespace

int main() {
  struct Result {
    int id;
    const char* name;
    bool pass;
    std::string detail;
  };
  std::vector<Result> results;
  TrainResult toy;

  auto record = [&](int id, const char* name, bool pass, const std::string& detail) {
    results.push_back({id, name, pass, detail});
    std::printf("[%s] criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
  };

  std::string d;
  record(1, "alpha=0 reduction to complex convolution", criterion1(d), d);
  record(2, "brute-force oracle equivalence", criterion2(d), d);
  record(3, "gradient suite", criterion3(d), d);
  record(4, "physics invariants", criterion4(d), d);
  record(5, "FLOPs model", criterion5(d), d);
  record(6, "toy end-to-end training", criterion6(d, toy), d);
  record(7, "ablation: octave run converges at lower cost", criterion7(d), d);
  record(8, "CLI determinism", criterion8(d), d);

  int failures = 0;
  for (const auto& r : results) failures += r.pass ? 0 : 1;
  std::printf("%d/8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
