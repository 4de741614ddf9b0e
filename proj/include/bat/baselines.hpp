#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bat/geometry.hpp"
#include "bat/hrtf.hpp"
#include "bat/scene.hpp"
#include "bat/signal_core.hpp"

namespace bat {

inline constexpr double kCovarianceLoading = 1e-3;
inline constexpr double kMifRegularization = 1e-4;

struct SrpResult {
  int index = 0;
  double azimuth_deg = 0.0;
  /// Steered response power per grid direction.
  std::vector<double> power;
};

/// SRP-PHAT localization over the grid. Ties (within 1e-9 of the maximum,
/// relative) resolve to the lowest grid index, i.e. the smallest azimuth.
SrpResult srp_phat(const Spectrogram& X, const ArrayGeometry& geom, const DirectionGrid& grid,
                   double c = kSpeedOfSound);

/// Per-bin spatial covariance: mean over frames of x x^H, plus diagonal
/// loading of `loading * trace / M`. A bin with zero trace gets the identity.
std::vector<Eigen::MatrixXcd> covariance(const Spectrogram& X, double loading = kCovarianceLoading);

/// MPDR weights R^-1 a / (a^H R^-1 a). Throws NumericalError when R is
/// singular.
Eigen::VectorXcd mpdr_weights(const Eigen::MatrixXcd& R, const Eigen::VectorXcd& a);

/// Localize, beamform toward the estimate with MPDR and filter the beam with
/// the HRTF pair of the estimated direction. Returns a 2-channel spectrogram.
Spectrogram lbh_render(const Spectrogram& X, const ArrayGeometry& geom, const DirectionGrid& grid,
                       const HrtfSet& hrtf, double c = kSpeedOfSound);

/// Binaural filters W(f) (2 x M) for every STFT bin.
struct MifFilterBank {
  double reg = kMifRegularization;
  std::string geometry;
  std::vector<Eigen::MatrixXcd> W;

  int bins() const { return static_cast<int>(W.size()); }
  int mics() const { return W.empty() ? 0 : static_cast<int>(W.front().cols()); }
};

/// Regularized model-matching solution of one bin: the minimizer of
/// ||W H - T||_F^2 + reg ||W||_F^2 for H (M x J) and T (2 x J).
Eigen::MatrixXcd mif_design_bin(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& T, double reg);

MifFilterBank mif_design(const std::vector<Eigen::MatrixXcd>& H, const std::vector<Eigen::MatrixXcd>& T,
                         double reg = kMifRegularization);

/// Y(l, f) = W(f) X(:, l, f).
Spectrogram mif_apply(const MifFilterBank& bank, const Spectrogram& X);

/// Per-bin ATF matrix H (M x J) and binaural target matrix T (2 x J) from the
/// ambient-ring impulse responses of a scene, each truncated to one STFT
/// frame. T(:, j) is the HRTF pair of direction j times the reference-mic ATF.
struct MifModel {
  std::vector<Eigen::MatrixXcd> H;
  std::vector<Eigen::MatrixXcd> T;
};
MifModel mif_model(const SceneAcoustics& acoustics, const HrtfSet& hrtf, const StftParams& params);

void save_mif(const MifFilterBank& bank, const std::string& tensor_path);
MifFilterBank load_mif(const std::string& tensor_path);

}  // namespace bat
