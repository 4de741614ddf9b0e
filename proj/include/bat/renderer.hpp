#pragma once

#include <vector>

#include <Eigen/Dense>

#include "bat/signal_core.hpp"

namespace bat {

inline constexpr double kLossCompression = 0.3;
inline constexpr double kLossPhaseWeight = 0.2;
inline constexpr int kDeepFilterOrder = 5;
inline constexpr int kDeepFilterBins = 160;

/// Map alpha -> (beta(alpha), delta(alpha)) through one tanh hidden layer.
struct FilmGenerator {
  Eigen::VectorXd w_in;    // hidden
  Eigen::VectorXd b_in;    // hidden
  Eigen::MatrixXd w_beta;  // E x hidden
  Eigen::VectorXd b_beta;  // E
  Eigen::MatrixXd w_delta;
  Eigen::VectorXd b_delta;

  int dim() const { return static_cast<int>(b_beta.size()); }
  /// Generator with beta = `beta` and delta = `delta` for every alpha.
  static FilmGenerator constant(const Eigen::VectorXd& beta, const Eigen::VectorXd& delta, int hidden = 1);
  void evaluate(double alpha, Eigen::VectorXd& beta, Eigen::VectorXd& delta) const;
};

/// beta(alpha) .* e + delta(alpha).
Eigen::VectorXd film(const Eigen::VectorXd& e, double alpha, const FilmGenerator& gen);

/// Real ERB-band masks per ear, (frames, bands) row-major.
struct ErbMaskPair {
  int frames = 0;
  int bands = 0;
  std::vector<double> left;
  std::vector<double> right;
};

/// Expands each ear's masks to the bins and multiplies the single-channel
/// reference spectrum. Returns a 2-channel spectrogram.
Spectrogram apply_erb_masks(const Spectrogram& y1, const ErbMaskPair& masks, const ErbFilterbank& fb);

/// Complex multi-frame filter coefficients indexed (channel, frame, tap, bin)
/// over the lowest `bins` frequencies.
struct DeepFilterCoeffs {
  int channels = 0;
  int frames = 0;
  int order = kDeepFilterOrder;
  int lookahead = 0;
  int bins = kDeepFilterBins;
  std::vector<cplx> data;

  DeepFilterCoeffs() = default;
  DeepFilterCoeffs(int channels, int frames, int order, int lookahead, int bins);

  cplx& operator()(int ch, int l, int tap, int f) { return data[index(ch, l, tap, f)]; }
  cplx operator()(int ch, int l, int tap, int f) const { return data[index(ch, l, tap, f)]; }

 private:
  std::size_t index(int ch, int l, int tap, int f) const {
    return ((static_cast<std::size_t>(ch) * frames + l) * (order + 1) + tap) * bins + f;
  }
};

/// Y(l, f) = sum_i C(l, i, f) Y_G(l - i + q, f) below `bins`; frames outside
/// the signal count as zero. Higher bins pass through.
Spectrogram apply_deep_filter(const Spectrogram& y_g, const DeepFilterCoeffs& coeffs);

/// Power-law compressed spectral loss summed over channels, frames and bins:
/// (1 - lambda) (|Y|^c - |Yh|^c)^2 + lambda |Y|Y|^(c-1) - Yh|Yh|^(c-1)|^2.
double compressed_loss(const Spectrogram& target, const Spectrogram& estimate, double c = kLossCompression,
                       double lambda = kLossPhaseWeight);

/// Gradient of the single-bin loss with respect to the estimate, as
/// dL/dRe + i dL/dIm. Zero at a zero estimate, where the compression is not
/// differentiable.
cplx compressed_loss_grad(cplx target, cplx estimate, double c = kLossCompression,
                          double lambda = kLossPhaseWeight);

}  // namespace bat
