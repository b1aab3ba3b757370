#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "octmri/network.hpp"
#include "octmri/run_config.hpp"

using namespace octmri;

namespace {

NetworkConfig micro_config() {
  NetworkConfig cfg;
  cfg.n_blocks = 1;
  cfg.layers_per_block = 2;
  cfg.feature_channels = 4;
  cfg.alpha = 0.25;
  cfg.kernel_size = 3;
  cfg.coils = 2;
  cfg.seed = 5;
  return cfg;
}

KSpaceAcquisition micro_acq(std::size_t H, std::size_t W, std::size_t coils, std::uint64_t seed) {
  ComplexTensor x = make_phantom(H, W, 4, seed);
  CoilSet cs = make_sensitivities(coils, H, W);
  SamplingMask mask = make_mask(MaskPattern::Random2D, 3.0, H, W, seed + 10);
  KSpaceAcquisition acq = forward_model(x, cs, mask);
  return acq;
}

}  // namespace

TEST_CASE("block layer specs bracket the feature body with coil-space ends") {
  NetworkConfig cfg;
  cfg.n_blocks = 2;
  cfg.layers_per_block = 3;
  cfg.feature_channels = 16;
  cfg.alpha = 0.125;
  cfg.coils = 4;
  auto specs = block_layer_specs(cfg);
  REQUIRE(specs.size() == 3);
  REQUIRE(specs[0].c_in == 4);
  REQUIRE(specs[0].c_out == 16);
  REQUIRE(specs[0].alpha_in == 0.0);
  REQUIRE(specs[0].alpha_out == 0.125);
  REQUIRE(specs[1].c_in == 16);
  REQUIRE(specs[1].c_out == 16);
  REQUIRE(specs[1].alpha_in == 0.125);
  REQUIRE(specs[1].alpha_out == 0.125);
  REQUIRE(specs[2].c_in == 16);
  REQUIRE(specs[2].c_out == 4);
  REQUIRE(specs[2].alpha_out == 0.0);
}

TEST_CASE("config validation") {
  NetworkConfig cfg = micro_config();
  cfg.layers_per_block = 1;
  REQUIRE_THROWS_AS(cfg.validate(), Error);
  cfg = micro_config();
  cfg.alpha = 1.0;
  REQUIRE_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("zero parameters leave the zero-filled input fixed") {
  NetworkConfig cfg = micro_config();
  KSpaceAcquisition acq = micro_acq(16, 16, cfg.coils, 1);
  ModelParams params = zero_params(cfg);
  ComplexTensor out = reconstruct(cfg, params, acq);
  // each block contributes zero, and data fidelity is a no-op on the
  // zero-filled image (its sampled k-space already equals y)
  REQUIRE(max_abs_diff(out, zero_filled(acq)) < 1e-10);
}

TEST_CASE("full sampling pins the output to the ground truth for any params") {
  NetworkConfig cfg = micro_config();
  ComplexTensor x = make_phantom(16, 16, 4, 2);
  CoilSet cs = make_sensitivities(cfg.coils, 16, 16);
  SamplingMask mask = make_mask(MaskPattern::Uniform1D, 1.0, 16, 16, 0);
  KSpaceAcquisition acq = forward_model(x, cs, mask);
  ModelParams params = init_params(cfg);
  ComplexTensor out = reconstruct(cfg, params, acq);
  REQUIRE(max_abs_diff(out, coil_images(x, cs)) < 1e-9);
}

TEST_CASE("output k-space equals the measurements at sampled locations") {
  NetworkConfig cfg = micro_config();
  KSpaceAcquisition acq = micro_acq(16, 16, cfg.coils, 3);
  ModelParams params = init_params(cfg);
  ComplexTensor k = fft2(reconstruct(cfg, params, acq));
  const std::size_t plane = 16 * 16;
  for (std::size_t i = 0; i < k.numel(); ++i) {
    if (!acq.mask.grid[i % plane]) continue;
    REQUIRE(k.real[i] == Catch::Approx(acq.y.real[i]).margin(1e-10));
    REQUIRE(k.imag[i] == Catch::Approx(acq.y.imag[i]).margin(1e-10));
  }
}

TEST_CASE("network forward matches a hand-assembled graph at alpha = 0") {
  NetworkConfig cfg = micro_config();
  cfg.alpha = 0.0;
  KSpaceAcquisition acq = micro_acq(16, 16, cfg.coils, 4);
  ModelParams params = init_params(cfg);
  ComplexTensor got = reconstruct(cfg, params, acq);

  // entry conv -> crelu -> exit conv -> residual -> data fidelity, by hand
  const DualOctKernel& k0 = params.blocks[0][0];
  const DualOctKernel& k1 = params.blocks[0][1];
  ComplexTensor x0 = zero_filled(acq);
  ComplexTensor h = crelu(complex_conv2d(x0, *k0.kr_hh, *k0.ki_hh, ConvSpec(3)));
  ComplexTensor r = complex_conv2d(h, *k1.kr_hh, *k1.ki_hh, ConvSpec(3));
  ComplexTensor want = data_fidelity(add(x0, r), acq);
  REQUIRE(max_abs_diff(got, want) < 1e-10);
}

TEST_CASE("l1 loss value and batch averaging") {
  ComplexTensor p = ComplexTensor::zeros({2, 3, 4});
  ComplexTensor t = p;
  for (double& v : p.real) v += 1.0;
  for (double& v : p.imag) v += 1.0;
  REQUIRE(l1_loss(p, t) == 2.0 * 2 * 3 * 4);

  ComplexTensor pb = ComplexTensor::zeros({4, 2, 3, 4});
  ComplexTensor tb = pb;
  for (double& v : pb.real) v += 1.0;
  REQUIRE(l1_loss(pb, tb) == Catch::Approx(2.0 * 3 * 4).margin(1e-12));
}

TEST_CASE("adam first step moves by roughly -lr * sign(gradient)") {
  ComplexTensor p = ComplexTensor::zeros({4});
  p.real = {1.0, -1.0, 2.0, 0.5};
  p.imag = {0.0, 0.0, 0.0, 0.0};
  ComplexTensor p0 = p;
  ComplexTensor g = ComplexTensor::zeros({4});
  g.real = {0.3, -0.7, 0.0, 1.5};
  AdamState st;
  st.m.push_back(ComplexTensor::zeros({4}));
  st.v.push_back(ComplexTensor::zeros({4}));
  std::vector<ComplexTensor*> prefs{&p};
  std::vector<ComplexTensor> grads{g};
  adam_step(prefs, grads, st, 1, 0.001);
  for (std::size_t i = 0; i < 4; ++i) {
    const double sign = g.real[i] > 0 ? 1.0 : (g.real[i] < 0 ? -1.0 : 0.0);
    REQUIRE(p.real[i] == Catch::Approx(p0.real[i] - 0.001 * sign).margin(1e-7));
  }
}

TEST_CASE("adam leaves parameters untouched under zero gradients") {
  ComplexTensor p = ComplexTensor::zeros({3});
  p.real = {1.0, 2.0, 3.0};
  ComplexTensor p0 = p;
  AdamState st;
  st.m.push_back(ComplexTensor::zeros({3}));
  st.v.push_back(ComplexTensor::zeros({3}));
  std::vector<ComplexTensor*> prefs{&p};
  std::vector<ComplexTensor> grads{ComplexTensor::zeros({3})};
  adam_step(prefs, grads, st, 1, 0.1);
  REQUIRE(max_abs_diff(p, p0) == 0.0);
}

TEST_CASE("adam rejects misaligned state") {
  ComplexTensor p = ComplexTensor::zeros({3});
  AdamState st;  // empty
  std::vector<ComplexTensor*> prefs{&p};
  std::vector<ComplexTensor> grads{ComplexTensor::zeros({3})};
  REQUIRE_THROWS_AS(adam_step(prefs, grads, st, 1, 0.1), Error);
}

TEST_CASE("end-to-end parameter gradients agree with finite differences") {
  NetworkConfig cfg = micro_config();
  KSpaceAcquisition acq = micro_acq(8, 8, cfg.coils, 6);
  ComplexTensor x = make_phantom(8, 8, 4, 6);
  CoilSet cs = make_sensitivities(cfg.coils, 8, 8);
  ComplexTensor target = coil_images(x, cs);
  ModelParams params = init_params(cfg);

  auto loss_value = [&](ModelParams& ps) {
    Graph g;
    ParamNodes pn = param_leaves(g, ps);
    return g.value(g.l1(network_forward(g, cfg, pn, acq), target)).real[0];
  };

  Graph g;
  ParamNodes pn = param_leaves(g, params);
  GradientMap gm = g.backward(g.l1(network_forward(g, cfg, pn, acq), target));

  // probe a spread of parameter coordinates in each kernel group
  Rng rng(7);
  const double eps = 1e-5;
  double worst = 0.0;
  for (const auto& [name, id] : pn.flat) {
    ComplexTensor* pt = nullptr;
    params.for_each([&, n = name](const std::string& nm, ComplexTensor& t) {
      if (nm == n) pt = &t;
    });
    REQUIRE(pt != nullptr);
    const ComplexTensor& analytic = gm.at(id);
    for (int probe = 0; probe < 4; ++probe) {
      const std::size_t i = rng.below(pt->numel());
      const bool re = rng.uniform01() < 0.5;
      auto& vec = re ? pt->real : pt->imag;
      const double orig = vec[i];
      vec[i] = orig + eps;
      const double fp = loss_value(params);
      vec[i] = orig - eps;
      const double fm = loss_value(params);
      vec[i] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = re ? analytic.real[i] : analytic.imag[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric)));
    }
  }
  REQUIRE(worst < 1e-4);
}

TEST_CASE("training reduces the loss and is bitwise deterministic") {
  NetworkConfig cfg = micro_config();
  cfg.batch_size = 2;
  cfg.epochs = 3;
  TrainDataSpec ds;
  ds.n_train = 4;
  ds.n_val = 2;
  ds.height = 16;
  ds.width = 16;
  ds.n_ellipses = 4;
  ds.accel = 3.0;

  TrainResult a = train(cfg, ds);
  REQUIRE(a.total_iters == 6);
  REQUIRE(a.final_epoch_loss < a.initial_loss);
  REQUIRE(a.macs_per_iter > 0);

  TrainResult b = train(cfg, ds);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    REQUIRE(a.log[i].loss == b.log[i].loss);
    REQUIRE(a.log[i].val_psnr == b.log[i].val_psnr);
    REQUIRE(a.log[i].val_ssim == b.log[i].val_ssim);
  }
  bool identical = true;
  std::size_t idx = 0;
  std::vector<ComplexTensor*> bp;
  b.params.for_each([&](const std::string&, ComplexTensor& t) { bp.push_back(&t); });
  a.params.for_each([&](const std::string&, ComplexTensor& t) {
    if (max_abs_diff(t, *bp[idx++]) != 0.0) identical = false;
  });
  REQUIRE(identical);
}

TEST_CASE("checkpoint round trip preserves parameters, config, and state") {
  NetworkConfig cfg = micro_config();
  cfg.epochs = 1;
  cfg.batch_size = 2;
  TrainDataSpec ds;
  ds.n_train = 2;
  ds.n_val = 0;
  ds.height = 16;
  ds.width = 16;
  TrainResult r = train(cfg, ds);

  const std::string dir = "ckpt_test_dir";
  save_checkpoint(dir, cfg, r.params, &r.state);
  Checkpoint ck = load_checkpoint(dir);
  REQUIRE(ck.config.n_blocks == cfg.n_blocks);
  REQUIRE(ck.config.feature_channels == cfg.feature_channels);
  REQUIRE(ck.config.alpha == cfg.alpha);
  REQUIRE(ck.config.coils == cfg.coils);
  REQUIRE(ck.has_state);
  REQUIRE(ck.state.t == r.state.t);

  std::vector<ComplexTensor*> orig;
  r.params.for_each([&](const std::string&, ComplexTensor& t) { orig.push_back(&t); });
  std::size_t i = 0;
  ck.params.for_each([&](const std::string&, ComplexTensor& t) {
    REQUIRE(max_abs_diff(t, *orig[i++]) == 0.0);
  });
  REQUIRE(i == orig.size());

  // reconstructions from saved and live parameters agree exactly
  KSpaceAcquisition acq = micro_acq(16, 16, cfg.coils, 9);
  REQUIRE(max_abs_diff(reconstruct(cfg, ck.params, acq), reconstruct(cfg, r.params, acq)) == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("load_checkpoint rejects unknown manifest keys") {
  const std::string dir = "ckpt_bad_dir";
  std::filesystem::create_directories(dir);
  {
    std::ofstream mf(dir + "/manifest.txt");
    mf << "n_blocks=1\nbogus_key=3\n";
  }
  REQUIRE_THROWS_AS(load_checkpoint(dir), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("network flops aggregate the per-layer model") {
  NetworkConfig cfg;
  cfg.n_blocks = 3;
  cfg.layers_per_block = 4;
  cfg.feature_channels = 32;
  cfg.alpha = 0.25;
  cfg.coils = 4;
  std::uint64_t want = 0;
  for (const auto& s : block_layer_specs(cfg)) want += flops_dual_octconv_spec(s, 64, 64);
  REQUIRE(network_flops_per_sample(cfg, 64, 64) == want * 3);
}

TEST_CASE("metric csv has the documented header and one row per epoch") {
  std::vector<EpochLog> log{{0, 2, 10.5, 20.0, 0.8}, {1, 4, 8.25, 21.0, 0.85}};
  const std::string path = "metrics_test.csv";
  write_metric_csv(path, log);
  std::ifstream is(path);
  std::string line;
  REQUIRE(std::getline(is, line));
  REQUIRE(line == "epoch,iter,loss,val_psnr,val_ssim");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  REQUIRE(rows == 2);
  std::remove(path.c_str());
}

TEST_CASE("run config parses keys and rejects unknown ones") {
  const std::string path = "run_config_test.cfg";
  {
    std::ofstream os(path);
    os << "# comment\n"
       << "n_blocks=2\n"
       << "feature_channels=16\n"
       << "alpha=0.125\n"
       << "mask_pattern=random2d\n"
       << "mask_accel=3\n"
       << "height=64\n";
  }
  RunConfig rc = parse_run_config(path);
  REQUIRE(rc.net.n_blocks == 2);
  REQUIRE(rc.net.feature_channels == 16);
  REQUIRE(rc.net.alpha == 0.125);
  REQUIRE(rc.data.pattern == MaskPattern::Random2D);
  REQUIRE(rc.data.height == 64);
  {
    std::ofstream os(path);
    os << "not_a_key=1\n";
  }
  REQUIRE_THROWS_AS(parse_run_config(path), ConfigError);
  {
    std::ofstream os(path);
    os << "alpha=abc\n";
  }
  REQUIRE_THROWS_AS(parse_run_config(path), ConfigError);
  std::remove(path.c_str());
}
