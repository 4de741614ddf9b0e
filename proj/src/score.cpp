#include "bat/score.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bat/error.hpp"

namespace bat {
namespace {

void check_avg_frames(int avg_frames) {
  if (avg_frames < 0 || avg_frames % 2 != 0)
    throw std::invalid_argument("short_term_rtf: averaging span R must be even and >= 0");
}

double frame_peak(const Spectrogram& X, int ch, int l) {
  double peak = 0.0;
  for (const auto& v : X.frame(ch, l)) peak = std::max(peak, std::abs(v));
  return peak;
}

double wrap_phase(double phase) {
  // std::arg already lands in [-pi, pi]; fold the closed end to +pi.
  return phase <= -std::numbers::pi ? std::numbers::pi : phase;
}

}  // namespace

Eigen::VectorXcd short_term_rtf(const Spectrogram& X, int reference, int frame, int bin,
                                int avg_frames) {
  check_avg_frames(avg_frames);
  if (X.channels() < 2) throw std::invalid_argument("short_term_rtf: need at least two channels");
  if (reference < 0 || reference >= X.channels())
    throw std::invalid_argument("short_term_rtf: bad reference channel");
  const int half = avg_frames / 2;
  const int lo = std::max(0, frame - half);
  const int hi = std::min(X.frames() - 1, frame + half);

  Eigen::VectorXcd num = Eigen::VectorXcd::Zero(X.channels() - 1);
  double den = 0.0;
  double peak = 0.0;
  for (int n = lo; n <= hi; ++n) {
    const cplx ref = X(reference, n, bin);
    den += std::norm(ref);
    peak = std::max(peak, frame_peak(X, reference, n));
    int i = 0;
    for (int m = 0; m < X.channels(); ++m) {
      if (m == reference) continue;
      num(i++) += X(m, n, bin) * std::conj(ref);
    }
  }
  const double floor = kRtfEpsilon * peak;
  if (den <= floor * floor) return Eigen::VectorXcd::Zero(X.channels() - 1);
  return num / den;
}

Eigen::VectorXcd whiten_rtf(const Eigen::VectorXcd& rtf, double eps) {
  Eigen::VectorXcd out(rtf.size());
  for (Eigen::Index i = 0; i < rtf.size(); ++i) {
    const double mag = std::abs(rtf(i));
    out(i) = mag < eps ? cplx(0.0, 0.0) : rtf(i) / mag;
  }
  return out;
}

Eigen::VectorXd score(const Eigen::VectorXcd& whitened, const Eigen::MatrixXcd& A) {
  if (A.rows() != whitened.size())
    throw_dimension("score: whitened RTF length does not match steering matrix rows");
  if (A.rows() == 0) throw_dimension("score: empty steering matrix");
  return (A.adjoint() * whitened).real() / static_cast<double>(A.rows());
}

ScoreTensor score_tensor(const Spectrogram& X, const ArrayGeometry& geom, const DirectionGrid& grid,
                         const ScoreOptions& opts) {
  geom.validate();
  check_avg_frames(opts.avg_frames);
  if (X.channels() != geom.size())
    throw_dimension("score_tensor: spectrogram channels do not match the geometry");

  const int L = X.frames();
  const int F = X.bins();
  const int J = grid.size();
  const int ref = geom.reference_index;
  const auto others = geom.non_reference();
  const int Mr = static_cast<int>(others.size());
  const int half = opts.avg_frames / 2;

  std::vector<double> peaks(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) peaks[l] = frame_peak(X, ref, l);

  ScoreTensor out;
  out.frames = L;
  out.freqs = F;
  out.directions = J;
  out.scale = ScoreScale::PerBin;
  out.values.assign(static_cast<std::size_t>(L) * F * J, 0.0);

  Eigen::VectorXcd num(Mr);
  Eigen::VectorXcd r(Mr);
  for (int f = 0; f < F; ++f) {
    const Eigen::MatrixXcd Ah =
        steering_matrix(geom, grid, X.params().bin_hz(f), opts.speed_of_sound).adjoint();
    for (int l = 0; l < L; ++l) {
      const int lo = std::max(0, l - half);
      const int hi = std::min(L - 1, l + half);
      num.setZero();
      double den = 0.0;
      double peak = 0.0;
      for (int n = lo; n <= hi; ++n) {
        const cplx rc = std::conj(X(ref, n, f));
        den += std::norm(rc);
        peak = std::max(peak, peaks[n]);
        for (int i = 0; i < Mr; ++i) num(i) += X(others[i], n, f) * rc;
      }
      const double floor = kRtfEpsilon * peak;
      if (den <= floor * floor) continue;  // degenerate: SCORE stays 0
      r = whiten_rtf(num / den);
      const Eigen::VectorXd g = (Ah * r).real() / static_cast<double>(Mr);
      std::copy(g.data(), g.data() + J, &out.at(l, f, 0));
    }
  }
  return out;
}

ScoreTensor erb_score(const ScoreTensor& per_bin, const ErbFilterbank& fb) {
  if (per_bin.scale != ScoreScale::PerBin) throw_dimension("erb_score: input is already band-scaled");
  if (per_bin.freqs != fb.bins()) throw_dimension("erb_score: bin count does not match the filterbank");
  ScoreTensor out;
  out.frames = per_bin.frames;
  out.freqs = fb.bands();
  out.directions = per_bin.directions;
  out.scale = ScoreScale::PerErbBand;
  out.values = erb_compress(per_bin.values, fb, static_cast<std::size_t>(per_bin.directions));
  return out;
}

std::string to_string(FeatureLayout layout) {
  switch (layout) {
    case FeatureLayout::Icpd: return "icpd";
    case FeatureLayout::Score: return "score";
    case FeatureLayout::ErbScore: return "erb_score";
  }
  return "unknown";
}

FeatureLayout feature_layout_from_string(const std::string& name) {
  if (name == "icpd") return FeatureLayout::Icpd;
  if (name == "score") return FeatureLayout::Score;
  if (name == "erb_score") return FeatureLayout::ErbScore;
  throw DataError("unknown feature layout '" + name + "'");
}

FeatureVector icpd_feature(const Spectrogram& X, int reference) {
  if (X.channels() < 2) throw std::invalid_argument("icpd_feature: need at least two channels");
  if (reference < 0 || reference >= X.channels())
    throw std::invalid_argument("icpd_feature: bad reference channel");
  const int L = X.frames();
  const int F = X.bins();
  const int C = X.channels() - 1;
  FeatureVector out;
  out.layout = FeatureLayout::Icpd;
  out.dims = {L, F, C};
  out.values.resize(static_cast<std::size_t>(L) * F * C);
  std::size_t k = 0;
  for (int l = 0; l < L; ++l) {
    for (int f = 0; f < F; ++f) {
      const cplx ref = X(reference, l, f);
      for (int m = 0; m < X.channels(); ++m) {
        if (m == reference) continue;
        const cplx x = X(m, l, f);
        out.values[k++] = (x == cplx{} || ref == cplx{}) ? 0.0 : wrap_phase(std::arg(x * std::conj(ref)));
      }
    }
  }
  return out;
}

FeatureVector to_feature(const ScoreTensor& tensor) {
  FeatureVector out;
  out.layout = tensor.scale == ScoreScale::PerBin ? FeatureLayout::Score : FeatureLayout::ErbScore;
  out.dims = {tensor.frames, tensor.freqs, tensor.directions};
  out.values = tensor.values;
  return out;
}

double mac(const FeatureVector& a, const FeatureVector& b) {
  if (a.layout != b.layout)
    throw_dimension("mac: layouts differ (" + to_string(a.layout) + " vs " + to_string(b.layout) + ")");
  if (a.values.size() != b.values.size())
    throw_dimension("mac: feature lengths differ (" + std::to_string(a.values.size()) + " vs " +
                    std::to_string(b.values.size()) + ")");
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    ab += a.values[i] * b.values[i];
    aa += a.values[i] * a.values[i];
    bb += b.values[i] * b.values[i];
  }
  if (aa == 0.0 || bb == 0.0) throw_data("mac: undefined for a zero feature vector");
  return (ab * ab) / (aa * bb);
}

}  // namespace bat
