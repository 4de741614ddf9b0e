#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bat/geometry.hpp"
#include "bat/signal_core.hpp"

namespace bat {

/// Entries of a short-term RTF whose modulus falls below this are treated as
/// degenerate; the averaged reference power is compared against the same
/// fraction of the frame's peak reference magnitude.
inline constexpr double kRtfEpsilon = 1e-12;

/// Short-term relative transfer function at (frame, bin): the ratio of the
/// cross-power of each non-reference mic with the reference to the reference
/// power, both averaged over the R + 1 frames centered on `frame` (clipped at
/// the sequence edges). R must be even. Returns the zero vector when the
/// reference power is degenerate.
Eigen::VectorXcd short_term_rtf(const Spectrogram& X, int reference, int frame, int bin,
                                int avg_frames = 4);

/// Phase-only RTF: every entry scaled to unit modulus, tiny entries set to 0.
Eigen::VectorXcd whiten_rtf(const Eigen::VectorXcd& rtf, double eps = kRtfEpsilon);

/// SCORE of one time-frequency bin: Re{A^H r} / (M - 1), one value per
/// candidate direction. `A` is the (M - 1) x J steering matrix.
Eigen::VectorXd score(const Eigen::VectorXcd& whitened, const Eigen::MatrixXcd& A);

enum class ScoreScale { PerBin, PerErbBand };

/// Row-major (frames, bins-or-bands, directions) tensor of SCORE values.
struct ScoreTensor {
  int frames = 0;
  int freqs = 0;
  int directions = 0;
  ScoreScale scale = ScoreScale::PerBin;
  std::vector<double> values;

  double& at(int l, int k, int j) {
    return values[(static_cast<std::size_t>(l) * freqs + k) * directions + j];
  }
  double at(int l, int k, int j) const {
    return values[(static_cast<std::size_t>(l) * freqs + k) * directions + j];
  }
};

struct ScoreOptions {
  int avg_frames = 4;
  double speed_of_sound = kSpeedOfSound;
};

/// SCORE for every (frame, bin) of a multichannel spectrogram recorded by
/// `geom` (channel m of X is microphone m).
ScoreTensor score_tensor(const Spectrogram& X, const ArrayGeometry& geom, const DirectionGrid& grid,
                         const ScoreOptions& opts = {});

/// ERB-band compression of a per-bin SCORE tensor, applied independently per
/// direction.
ScoreTensor erb_score(const ScoreTensor& per_bin, const ErbFilterbank& fb);

enum class FeatureLayout { Icpd, Score, ErbScore };

std::string to_string(FeatureLayout layout);
FeatureLayout feature_layout_from_string(const std::string& name);

/// Flattened spatial feature. dims = {frames, freqs, channels}; the channel
/// index (mic or direction) varies fastest, then frequency, then frame.
struct FeatureVector {
  FeatureLayout layout = FeatureLayout::Score;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> values;
};

/// Interchannel phase difference of every non-reference mic against the
/// reference, wrapped to (-pi, pi]. Bins where either magnitude is zero get 0.
FeatureVector icpd_feature(const Spectrogram& X, int reference);

FeatureVector to_feature(const ScoreTensor& tensor);

/// Modal assurance criterion (a.b)^2 / (a.a * b.b), in [0, 1].
/// Throws DimensionError for differing layouts or lengths and DataError for a
/// zero vector.
double mac(const FeatureVector& a, const FeatureVector& b);

}  // namespace bat
