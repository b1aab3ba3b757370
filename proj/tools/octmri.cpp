// Command-line front end: mask/phantom generation, acquisition simulation,
// training, reconstruction, evaluation, and FLOPs reporting.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "octmri/io.hpp"
#include "octmri/metrics.hpp"
#include "octmri/mri.hpp"
#include "octmri/network.hpp"
#include "octmri/run_config.hpp"

namespace fs = std::filesystem;
using namespace octmri;

namespace {

struct SizeArg {
  std::size_t h = 0, w = 0;
};

SizeArg parse_size(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw CLI::ValidationError("--size", "expected HxW, got '" + s + "'");
  SizeArg out;
  try {
    out.h = std::stoul(s.substr(0, x));
    out.w = std::stoul(s.substr(x + 1));
  } catch (const std::exception&) {
    throw CLI::ValidationError("--size", "expected HxW, got '" + s + "'");
  }
  if (out.h == 0 || out.w == 0) throw CLI::ValidationError("--size", "dimensions must be positive");
  return out;
}

void print_metric_line(double p, double s) {
  if (std::isinf(p))
    std::printf("inf,%.6f\n", s);
  else
    std::printf("%.6f,%.6f\n", p, s);
}

ComplexTensor load_magnitude(const std::string& path) {
  ComplexTensor t = doct::read(path);
  if (t.ndim() == 2) {
    ComplexTensor r = ComplexTensor::zeros({1, t.dim(0), t.dim(1)});
    r.real = t.real;
    r.imag = t.imag;
    t = std::move(r);
  }
  if (t.ndim() != 3) throw IoError("expected a [c,H,W] tensor in '" + path + "'");
  return rss_combine(t);
}

int run(int argc, char** argv) {
  CLI::App app{"Dual-octave complex-convolution MRI reconstruction toolkit"};
  app.require_subcommand(1);

  // mask
  auto* cmd_mask = app.add_subcommand("mask", "Generate an undersampling mask");
  std::string mask_pattern, mask_size = "64x64", mask_out;
  double mask_accel = 3.0;
  std::uint64_t mask_seed = 0;
  std::size_t mask_center = SIZE_MAX;
  cmd_mask->add_option("--pattern", mask_pattern, "uniform1d|cartesian1d|random2d|radial2d")->required();
  cmd_mask->add_option("--accel", mask_accel, "nominal acceleration factor R")->required();
  cmd_mask->add_option("--size", mask_size, "grid size HxW")->required();
  cmd_mask->add_option("--seed", mask_seed, "RNG seed");
  cmd_mask->add_option("--center-lines", mask_center, "fully sampled center columns (1D patterns)");
  cmd_mask->add_option("--out", mask_out, "output DOCT file")->required();
  std::string mask_pgm;
  cmd_mask->add_option("--pgm", mask_pgm, "also export a PGM preview");

  // phantom
  auto* cmd_ph = app.add_subcommand("phantom", "Generate a synthetic complex phantom");
  std::string ph_size = "64x64", ph_out;
  std::size_t ph_n = 6;
  std::uint64_t ph_seed = 0;
  cmd_ph->add_option("--size", ph_size, "image size HxW")->required();
  cmd_ph->add_option("--n", ph_n, "number of ellipses");
  cmd_ph->add_option("--seed", ph_seed, "RNG seed");
  cmd_ph->add_option("--out", ph_out, "output DOCT file")->required();

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "Simulate a multi-coil acquisition");
  std::string sim_phantom, sim_mask, sim_out;
  std::size_t sim_coils = 4;
  cmd_sim->add_option("--phantom", sim_phantom, "phantom DOCT file")->required();
  cmd_sim->add_option("--coils", sim_coils, "coil count")->required();
  cmd_sim->add_option("--mask", sim_mask, "mask DOCT file")->required();
  cmd_sim->add_option("--out", sim_out, "output directory")->required();

  // train
  auto* cmd_train = app.add_subcommand("train", "Train the reconstruction network");
  std::string train_config, train_out;
  cmd_train->add_option("--config", train_config, "run config file (key=value)")->required();
  cmd_train->add_option("--out", train_out, "output directory")->required();

  // reconstruct
  auto* cmd_rec = app.add_subcommand("reconstruct", "Reconstruct from an acquisition");
  std::string rec_ckpt, rec_acq, rec_out, rec_pgm;
  cmd_rec->add_option("--ckpt", rec_ckpt, "checkpoint directory")->required();
  cmd_rec->add_option("--acq", rec_acq, "acquisition directory (from simulate)")->required();
  cmd_rec->add_option("--out", rec_out, "output DOCT file (coil images)")->required();
  cmd_rec->add_option("--pgm", rec_pgm, "also export the RSS magnitude as PGM");

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "PSNR/SSIM of a test image against a reference");
  std::string eval_ref, eval_test;
  bool eval_series = false;
  cmd_eval->add_option("--ref", eval_ref, "reference DOCT file")->required();
  cmd_eval->add_option("--test", eval_test, "test DOCT file")->required();
  cmd_eval->add_flag("--series", eval_series, "emit (alpha, flops, psnr) triples for an alpha sweep");

  // flops
  auto* cmd_flops = app.add_subcommand("flops", "Analytical FLOPs of the configured network");
  std::string flops_config, flops_sweep;
  cmd_flops->add_option("--config", flops_config, "run config file")->required();
  cmd_flops->add_option("--alpha-sweep", flops_sweep, "comma-separated alpha list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (cmd_mask->parsed()) {
    const SizeArg sz = parse_size(mask_size);
    SamplingMask m =
        make_mask(parse_mask_pattern(mask_pattern), mask_accel, sz.h, sz.w, mask_seed, mask_center);
    doct::write(mask_out, m.to_tensor());
    if (!mask_pgm.empty()) write_pgm16(mask_pgm, m.to_tensor());
    std::printf("pattern=%s accel=%.3f achieved=%.3f samples=%zu\n", mask_pattern_name(m.pattern),
                m.accel, m.achieved_accel(), m.count());
  } else if (cmd_ph->parsed()) {
    const SizeArg sz = parse_size(ph_size);
    doct::write(ph_out, make_phantom(sz.h, sz.w, ph_n, ph_seed));
  } else if (cmd_sim->parsed()) {
    ComplexTensor x = doct::read(sim_phantom);
    SamplingMask mask = SamplingMask::from_tensor(doct::read(sim_mask));
    if (x.ndim() != 3 || x.dim(0) != 1)
      throw IoError("phantom must be [1,H,W], got " + shape_str(x.shape));
    CoilSet coils = make_sensitivities(sim_coils, x.dim(1), x.dim(2));
    KSpaceAcquisition acq = forward_model(x, coils, mask);
    fs::create_directories(sim_out);
    doct::write(sim_out + "/kspace.doct", acq.y);
    doct::write(sim_out + "/mask.doct", mask.to_tensor());
    doct::write(sim_out + "/reference.doct", coil_images(x, coils));
    doct::write(sim_out + "/zero_filled.doct", zero_filled(acq));
  } else if (cmd_train->parsed()) {
    RunConfig rc = parse_run_config(train_config);
    TrainResult r = train(rc.net, rc.data);
    save_checkpoint(train_out, rc.net, r.params, &r.state);
    write_metric_csv(train_out + "/metrics.csv", r.log);
    std::printf("iters=%zu initial_loss=%.6g final_loss=%.6g zero_filled_psnr=%.3f\n",
                r.total_iters, r.initial_loss, r.final_epoch_loss, r.zero_filled_psnr);
    if (!r.log.empty())
      std::printf("val_psnr=%.3f val_ssim=%.4f\n", r.log.back().val_psnr, r.log.back().val_ssim);
  } else if (cmd_rec->parsed()) {
    Checkpoint ck = load_checkpoint(rec_ckpt);
    KSpaceAcquisition acq;
    acq.y = doct::read(rec_acq + "/kspace.doct");
    acq.mask = SamplingMask::from_tensor(doct::read(rec_acq + "/mask.doct"));
    if (acq.y.ndim() != 3 || acq.y.dim(0) != ck.config.coils)
      throw IoError("acquisition has " + std::to_string(acq.y.dim(0)) +
                    " coils but checkpoint expects " + std::to_string(ck.config.coils));
    ComplexTensor rec = reconstruct(ck.config, ck.params, acq);
    doct::write(rec_out, rec);
    if (!rec_pgm.empty()) write_pgm16(rec_pgm, rss_combine(rec));
  } else if (cmd_eval->parsed()) {
    ComplexTensor ref = load_magnitude(eval_ref);
    ComplexTensor test = load_magnitude(eval_test);
    const double p = psnr(ref, test);
    const double s = ssim(ref, test);
    if (eval_series) {
      // Fig.-9-style sweep: per-layer FLOPs of a 64-channel 3x3 layer at the
      // image size, alongside the measured PSNR of this pair
      std::printf("alpha,flops,psnr\n");
      for (double a : {0.0, 0.125, 0.25, 0.5, 0.75}) {
        const auto f = flops_dual_octconv(64, 64, ref.dim(1), ref.dim(2), 3, a);
        if (std::isinf(p))
          std::printf("%.3f,%llu,inf\n", a, static_cast<unsigned long long>(f));
        else
          std::printf("%.3f,%llu,%.6f\n", a, static_cast<unsigned long long>(f), p);
      }
    } else {
      print_metric_line(p, s);
    }
  } else if (cmd_flops->parsed()) {
    RunConfig rc = parse_run_config(flops_config);
    std::vector<double> alphas;
    if (flops_sweep.empty()) {
      alphas.push_back(rc.net.alpha);
    } else {
      std::string item;
      std::stringstream ss(flops_sweep);
      while (std::getline(ss, item, ',')) alphas.push_back(std::stod(item));
    }
    std::printf("alpha,flops_per_sample\n");
    for (double a : alphas) {
      NetworkConfig cfg = rc.net;
      cfg.alpha = a;
      const auto f = network_flops_per_sample(cfg, rc.data.height, rc.data.width);
      std::printf("%.4f,%llu\n", a, static_cast<unsigned long long>(f));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
