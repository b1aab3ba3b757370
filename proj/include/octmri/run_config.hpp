#ifndef OCTMRI_RUN_CONFIG_HPP_
#define OCTMRI_RUN_CONFIG_HPP_

#include <fstream>
#include <string>

#include "octmri/network.hpp"

namespace octmri {

struct ConfigError : Error {
  using Error::Error;
};

// Text key=value run configuration: network hyper-parameters plus the
// synthetic dataset specification. Unknown keys are rejected.
struct RunConfig {
  NetworkConfig net;
  TrainDataSpec data;
};

inline MaskPattern parse_mask_pattern(const std::string& s) {
  if (s == "uniform1d") return MaskPattern::Uniform1D;
  if (s == "cartesian1d") return MaskPattern::Cartesian1D;
  if (s == "random2d") return MaskPattern::Random2D;
  if (s == "radial2d") return MaskPattern::Radial2D;
  throw ConfigError("unknown mask pattern '" + s +
                    "' (expected uniform1d|cartesian1d|random2d|radial2d)");
}

inline RunConfig parse_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  RunConfig rc;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    // strip comments and whitespace-only lines
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 1);
    try {
      NetworkConfig& n = rc.net;
      TrainDataSpec& d = rc.data;
      if (key == "n_blocks") n.n_blocks = std::stoul(val);
      else if (key == "layers_per_block") n.layers_per_block = std::stoul(val);
      else if (key == "feature_channels") n.feature_channels = std::stoul(val);
      else if (key == "alpha") n.alpha = std::stod(val);
      else if (key == "kernel_size") n.kernel_size = std::stoul(val);
      else if (key == "coils") n.coils = std::stoul(val);
      else if (key == "learning_rate") n.learning_rate = std::stod(val);
      else if (key == "lr_decay") n.lr_decay = std::stod(val);
      else if (key == "batch_size") n.batch_size = std::stoul(val);
      else if (key == "epochs") n.epochs = std::stoul(val);
      else if (key == "seed") n.seed = std::stoull(val);
      else if (key == "train_phantoms") d.n_train = std::stoul(val);
      else if (key == "val_phantoms") d.n_val = std::stoul(val);
      else if (key == "height") d.height = std::stoul(val);
      else if (key == "width") d.width = std::stoul(val);
      else if (key == "n_ellipses") d.n_ellipses = std::stoul(val);
      else if (key == "mask_pattern") d.pattern = parse_mask_pattern(val);
      else if (key == "mask_accel") d.accel = std::stod(val);
      else if (key == "mask_center_lines") d.center_lines = std::stoul(val);
      else if (key == "mask_seed") d.mask_seed = std::stoull(val);
      else if (key == "data_seed") d.data_seed = std::stoull(val);
      else throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad value '" + val +
                        "' for key '" + key + "'");
    }
  }
  return rc;
}

}  // namespace octmri

#endif  // OCTMRI_RUN_CONFIG_HPP_
