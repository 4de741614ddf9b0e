#include "bat/renderer.hpp"

#include <cmath>

#include "bat/error.hpp"

namespace bat {
namespace {

double compressed_mag(cplx v, double c) { return std::pow(std::abs(v), c); }

cplx compressed(cplx v, double c) {
  const double r = std::abs(v);
  return r > 0.0 ? v * std::pow(r, c - 1.0) : cplx{};
}

void check_loss_params(double c, double lambda) {
  if (!(c > 0.0 && c <= 1.0)) throw std::invalid_argument("compressed_loss: c must lie in (0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("compressed_loss: lambda must lie in [0, 1]");
}

}  // namespace

FilmGenerator FilmGenerator::constant(const Eigen::VectorXd& beta, const Eigen::VectorXd& delta, int hidden) {
  if (beta.size() != delta.size()) throw_dimension("FilmGenerator: beta and delta sizes differ");
  FilmGenerator g;
  g.w_in = Eigen::VectorXd::Zero(hidden);
  g.b_in = Eigen::VectorXd::Zero(hidden);
  g.w_beta = Eigen::MatrixXd::Zero(beta.size(), hidden);
  g.b_beta = beta;
  g.w_delta = Eigen::MatrixXd::Zero(delta.size(), hidden);
  g.b_delta = delta;
  return g;
}

void FilmGenerator::evaluate(double alpha, Eigen::VectorXd& beta, Eigen::VectorXd& delta) const {
  const Eigen::VectorXd h = (w_in * alpha + b_in).array().tanh().matrix();
  beta = w_beta * h + b_beta;
  delta = w_delta * h + b_delta;
}

Eigen::VectorXd film(const Eigen::VectorXd& e, double alpha, const FilmGenerator& gen) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("film: alpha must lie in [0, 1]");
  if (e.size() != gen.dim()) throw_dimension("film: embedding size does not match the generator");
  Eigen::VectorXd beta, delta;
  gen.evaluate(alpha, beta, delta);
  return beta.cwiseProduct(e) + delta;
}

Spectrogram apply_erb_masks(const Spectrogram& y1, const ErbMaskPair& masks, const ErbFilterbank& fb) {
  if (y1.channels() != 1) throw_dimension("apply_erb_masks: expected a single reference channel");
  if (masks.bands != fb.bands() || fb.bins() != y1.bins() || masks.frames != y1.frames())
    throw_dimension("apply_erb_masks: mask shape does not match the spectrum");
  const std::size_t need = static_cast<std::size_t>(masks.frames) * masks.bands;
  if (masks.left.size() != need || masks.right.size() != need) throw_dimension("apply_erb_masks: mask storage size");
  Spectrogram out(2, y1.frames(), y1.params(), y1.num_samples());
  const auto gl = erb_expand(masks.left, fb);
  const auto gr = erb_expand(masks.right, fb);
  const int F = y1.bins();
  for (int l = 0; l < y1.frames(); ++l) {
    for (int f = 0; f < F; ++f) {
      const std::size_t k = static_cast<std::size_t>(l) * F + f;
      out(0, l, f) = y1(0, l, f) * gl[k];
      out(1, l, f) = y1(0, l, f) * gr[k];
    }
  }
  return out;
}

DeepFilterCoeffs::DeepFilterCoeffs(int channels_, int frames_, int order_, int lookahead_, int bins_)
    : channels(channels_), frames(frames_), order(order_), lookahead(lookahead_), bins(bins_) {
  if (order < 0 || lookahead < 0 || bins < 0) throw std::invalid_argument("DeepFilterCoeffs: negative size");
  if (lookahead > order) throw std::invalid_argument("DeepFilterCoeffs: look-ahead exceeds the filter order");
  data.assign(static_cast<std::size_t>(channels) * frames * (order + 1) * bins, cplx{});
}

Spectrogram apply_deep_filter(const Spectrogram& y_g, const DeepFilterCoeffs& C) {
  if (C.lookahead > C.order) throw std::invalid_argument("apply_deep_filter: look-ahead exceeds the filter order");
  if (C.channels != y_g.channels() || C.frames != y_g.frames() || C.bins > y_g.bins())
    throw_dimension("apply_deep_filter: coefficient shape does not match the spectrum");
  Spectrogram out = y_g;
  const int L = y_g.frames();
  for (int ch = 0; ch < C.channels; ++ch) {
    for (int l = 0; l < L; ++l) {
      for (int f = 0; f < C.bins; ++f) {
        cplx acc{};
        for (int i = 0; i <= C.order; ++i) {
          const int src = l - i + C.lookahead;
          if (src < 0 || src >= L) continue;
          acc += C(ch, l, i, f) * y_g(ch, src, f);
        }
        out(ch, l, f) = acc;
      }
    }
  }
  return out;
}

double compressed_loss(const Spectrogram& target, const Spectrogram& estimate, double c, double lambda) {
  check_loss_params(c, lambda);
  if (!target.same_shape(estimate)) throw_dimension("compressed_loss: shape mismatch");
  double mag = 0.0;
  double cpl = 0.0;
  const auto& y = target.data();
  const auto& yh = estimate.data();
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double d = compressed_mag(y[k], c) - compressed_mag(yh[k], c);
    mag += d * d;
    cpl += std::norm(compressed(y[k], c) - compressed(yh[k], c));
  }
  return (1.0 - lambda) * mag + lambda * cpl;
}

cplx compressed_loss_grad(cplx target, cplx u, double c, double lambda) {
  const double r = std::abs(u);
  if (!(r > 0.0)) return {};
  const double rc = std::pow(r, c);
  // magnitude term: 2 (|u|^c - |Y|^c) c |u|^(c-2) u
  const cplx g_mag = 2.0 * (rc - compressed_mag(target, c)) * c * (rc / (r * r)) * u;
  // compressed complex term, with D = P(u) - P(Y), P(u) = |u|^(c-1) u
  const cplx D = compressed(u, c) - compressed(target, c);
  const double rc1 = rc / r;
  const cplx g_cpl = 2.0 * rc1 * D + 2.0 * (c - 1.0) * (rc1 / (r * r)) * std::real(std::conj(D) * u) * u;
  return (1.0 - lambda) * g_mag + lambda * g_cpl;
}

}  // namespace bat
