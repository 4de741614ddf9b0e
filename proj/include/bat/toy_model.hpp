#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bat/geometry.hpp"
#include "bat/renderer.hpp"
#include "bat/signal_core.hpp"

namespace bat {

/// Sizes of the toy renderer. The defaults are the full-band settings; tests
/// shrink everything to get a model small enough for finite differences.
struct ToyConfig {
  StftParams stft{};
  int erb_bands = 32;
  int directions = 72;
  int df_bins = kDeepFilterBins;
  int df_order = kDeepFilterOrder;
  int lookahead = 0;
  int hidden = 64;
  int film_hidden = 16;

  /// Per-frame input: ERB log-power, ERB-SCORE (bands x directions) and the
  /// compressed real/imaginary parts of the low bins.
  int input_dim() const { return erb_bands + directions * erb_bands + 2 * df_bins; }
  int df_outputs() const { return 2 * (df_order + 1) * df_bins * 2; }
  void validate() const;
};

nlohmann::json to_json(const ToyConfig& cfg);
ToyConfig toy_config_from_json(const nlohmann::json& j);

/// Model input for one clip: per-frame features (input_dim x frames) and the
/// reference-mic spectrum the masks and filters act on.
struct ToyInput {
  Eigen::MatrixXd features;
  Spectrogram reference;
};

/// Builds the toy input from a multichannel mixture spectrogram recorded by
/// `geom`; the direction grid has `cfg.directions` entries.
ToyInput make_toy_input(const Spectrogram& X, const ArrayGeometry& geom, const ToyConfig& cfg);

struct LayerShape {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
};

/// Per-frame encoder (two tanh layers) -> FiLM(alpha) -> sigmoid ERB-mask
/// head and linear deep-filter head.
class ToyModel {
 public:
  explicit ToyModel(const ToyConfig& cfg);
  /// Random initialization: masks start near 0.88 and the deep filter near a
  /// delta at the look-ahead tap.
  static ToyModel initialized(const ToyConfig& cfg, std::uint64_t seed);

  const ToyConfig& config() const { return cfg_; }
  const std::vector<LayerShape>& manifest() const { return layers_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  /// Writable view of one named layer.
  Eigen::Map<Eigen::MatrixXd> layer(const std::string& name);
  Eigen::Map<const Eigen::MatrixXd> layer(const std::string& name) const;

  FilmGenerator film_generator() const;

  struct Outputs {
    ErbMaskPair masks;
    DeepFilterCoeffs coeffs;
    Spectrogram masked;
    Spectrogram output;
  };
  Outputs forward_all(const ToyInput& in, double alpha) const;
  /// 2-channel binaural spectrogram.
  Spectrogram forward(const ToyInput& in, double alpha) const;

  /// compressed_loss(target, forward(in, alpha)); fills `grad` (resized to
  /// the parameter count) when non-null.
  double loss_and_gradient(const ToyInput& in, const Spectrogram& target, double alpha,
                           std::vector<double>* grad) const;

 private:
  struct Cache;
  void run(const ToyInput& in, double alpha, Cache& cache) const;

  ToyConfig cfg_;
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

/// Flat float64 parameter tensor plus a JSON manifest holding the config
/// and the layer shapes.
void save_checkpoint(const ToyModel& model, const std::string& bin_path, const std::string& manifest_path);
ToyModel load_checkpoint(const std::string& bin_path, const std::string& manifest_path);

}  // namespace bat
