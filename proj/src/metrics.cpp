#include "bat/metrics.hpp"

#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "bat/error.hpp"

namespace bat {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const Spectrogram& target, const Spectrogram& estimate, const char* who) {
  if (target.channels() != 2) throw_dimension(std::string(who) + ": expected 2-channel spectrograms");
  if (!target.same_shape(estimate)) throw_dimension(std::string(who) + ": target and estimate shapes differ");
}

double wrap(double phi) {
  phi = std::remainder(phi, 2.0 * std::numbers::pi);  // [-pi, pi]
  return phi <= -std::numbers::pi ? phi + 2.0 * std::numbers::pi : phi;
}

double peak_magnitude(const Spectrogram& s) {
  double p = 0.0;
  for (const auto& v : s.data()) p = std::max(p, std::abs(v));
  return p;
}

}  // namespace

double mw_ipde(const Spectrogram& target, const Spectrogram& est, double f_max_hz) {
  check_pair(target, est, "mw_ipde");
  double num = 0.0;
  double den = 0.0;
  for (int l = 0; l < target.frames(); ++l) {
    for (int f = 0; f < target.bins() && target.params().bin_hz(f) <= f_max_hz; ++f) {
      const cplx yl = target(0, l, f), yr = target(1, l, f);
      const double sigma = 0.5 * (std::abs(yl) + std::abs(yr));
      if (sigma == 0.0) continue;
      const double ipd = std::arg(yl * std::conj(yr));
      const double ipd_hat = std::arg(est(0, l, f) * std::conj(est(1, l, f)));
      num += sigma * std::abs(wrap(ipd - ipd_hat));
      den += sigma;
    }
  }
  if (!(den > 0.0)) throw DataError("mw_ipde: target has no energy below f_max");
  return num / den;
}

double mw_ilde(const Spectrogram& target, const Spectrogram& est) {
  check_pair(target, est, "mw_ilde");
  const double floor_t = kIldFloor * peak_magnitude(target);
  const double floor_e = kIldFloor * peak_magnitude(est);
  auto ild = [](cplx l, cplx r, double fl) {
    const double ml = std::max(std::abs(l), fl);
    const double mr = std::max(std::abs(r), fl);
    if (ml == 0.0 && mr == 0.0) return 0.0;  // an all-zero clip
    if (ml == 0.0 || mr == 0.0) return ml == 0.0 ? -kInf : kInf;
    return 20.0 * std::log10(ml / mr);
  };
  double num = 0.0;
  double den = 0.0;
  for (int l = 0; l < target.frames(); ++l) {
    for (int f = 0; f < target.bins(); ++f) {
      const cplx yl = target(0, l, f), yr = target(1, l, f);
      const double sigma = 0.5 * (std::abs(yl) + std::abs(yr));
      if (sigma == 0.0) continue;
      const double d = ild(yl, yr, floor_t) - ild(est(0, l, f), est(1, l, f), floor_e);
      num += sigma * std::abs(d);
      den += sigma;
    }
  }
  if (!(den > 0.0)) throw DataError("mw_ilde: target has no energy");
  return num / den;
}

double msi_sdr(std::span<const double> s, std::span<const double> s_hat, SdrConvention convention) {
  if (s.size() != s_hat.size()) throw_dimension("msi_sdr: length mismatch");
  double ss = 0.0, sh = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ss += s[i] * s[i];
    sh += s_hat[i] * s[i];
  }
  if (!(ss > 0.0)) throw DataError("msi_sdr: target is all zero");
  const double eta = sh / ss;
  if (eta == 0.0) return -kInf;
  double proj = 0.0, resid = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = eta * s[i];
    const double r = s_hat[i] - p;
    proj += p * p;
    resid += r * r;
  }
  const double tol = 64.0 * DBL_EPSILON;
  if (resid <= tol * tol * proj) return kInf;
  const double ratio = proj / resid;
  return convention == SdrConvention::SquaredNormRatio20 ? 20.0 * std::log10(ratio) : 10.0 * std::log10(ratio);
}

double msi_sdr(const MultiSignal& target, const MultiSignal& estimate, SdrConvention convention) {
  if (target.size() != estimate.size()) throw_dimension("msi_sdr: channel count mismatch");
  std::vector<double> s, s_hat;
  for (std::size_t c = 0; c < target.size(); ++c) {
    if (target[c].size() != estimate[c].size()) throw_dimension("msi_sdr: length mismatch");
    s.insert(s.end(), target[c].begin(), target[c].end());
    s_hat.insert(s_hat.end(), estimate[c].begin(), estimate[c].end());
  }
  return msi_sdr(s, s_hat, convention);
}

nlohmann::json metric_to_json(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  return value;
}

std::string metric_to_string(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

}  // namespace bat
