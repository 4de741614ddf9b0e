#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bat/metrics.hpp"
#include "bat/scene.hpp"
#include "bat/score.hpp"
#include "bat/toy_model.hpp"

namespace bat::app {

inline constexpr int kConfigVersion = 1;

/// Random scene generator: scene k gets its own seed split from the run seed,
/// a random on-grid target azimuth, a radius in [1.0, 1.5] m and the T60
/// t60_s[k % size].
struct SceneGenerator {
  int count = 0;
  double duration_s = 2.0;
  std::vector<double> t60_s{0.34, 0.46};
  double sar_db = 10.0;
  double snr_db = 25.0;
  int max_order = 10;
  AmbientMode ambient_mode = AmbientMode::Shared;
};

struct ToySection {
  std::string checkpoint;  // prefix; <prefix>.bin and <prefix>.json
  ToyConfig model{};
  std::string geometry = "G1";
  int steps = 500;
  double lr = 1e-3;
  int eval_every = 25;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int jobs = 1;
  std::vector<std::string> geometries{"G1"};
  std::vector<double> alphas{0.0, 1.0};
  /// Explicit scenes followed by the generated ones.
  std::vector<SceneSpec> scenes;
  std::optional<SceneGenerator> generator;
  /// "spherical" or a path to an HRTF manifest.
  std::string hrtf = "spherical";
  std::vector<std::string> methods{"passthrough", "lbh", "mif"};
  std::vector<std::string> metrics{"mw_ipde", "mw_ilde", "msi_sdr"};
  std::vector<FeatureLayout> features{FeatureLayout::Icpd, FeatureLayout::Score, FeatureLayout::ErbScore};
  int erb_bands = 32;
  double mif_reg = 1e-4;
  SdrConvention sdr_convention = SdrConvention::SquaredNormRatio20;
  ToySection toy;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<int> jobs;
};

/// Parses and fully validates a run configuration. Relative paths inside the
/// file resolve against the file's directory. Throws ConfigError.
RunConfig load_run_config(const std::string& path, const Overrides& overrides = {});
RunConfig parse_run_config(const nlohmann::json& j, const std::string& base_dir, const Overrides& overrides = {});

std::string alpha_tag(double alpha);

}  // namespace bat::app
