#include "bat/dsp.hpp"

#include <algorithm>
#include <stdexcept>
#include <unsupported/Eigen/FFT>

namespace bat::dsp {
namespace {

Eigen::FFT<double>& half_spectrum_fft() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    return f;
  }();
  return fft;
}

}  // namespace

int next_pow2(std::size_t n) {
  int p = 1;
  while (static_cast<std::size_t>(p) < n) p <<= 1;
  return p;
}

std::vector<std::complex<double>> rfft(std::span<const double> x, int n) {
  if (n <= 0 || n % 2 != 0) throw std::invalid_argument("rfft: n must be positive and even");
  std::vector<double> in(static_cast<std::size_t>(n), 0.0);
  std::copy_n(x.begin(), std::min<std::size_t>(x.size(), in.size()), in.begin());
  std::vector<std::complex<double>> out;
  half_spectrum_fft().fwd(out, in);
  out.resize(static_cast<std::size_t>(n / 2 + 1));
  return out;
}

std::vector<double> irfft(std::span<const std::complex<double>> spectrum, int n) {
  if (spectrum.size() != static_cast<std::size_t>(n / 2 + 1))
    throw std::invalid_argument("irfft: spectrum size must be n/2 + 1");
  std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
  // The DC and Nyquist bins of a real sequence are real.
  in.front() = in.front().real();
  in.back() = in.back().real();
  std::vector<double> out;
  half_spectrum_fft().inv(out, in, n);
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  return convolve_truncated(a, b, a.size() + b.size() - 1);
}

std::vector<double> convolve_truncated(std::span<const double> a,
                                       std::span<const double> b,
                                       std::size_t out_len) {
  std::vector<double> out(out_len, 0.0);
  if (a.empty() || b.empty() || out_len == 0) return out;
  const std::size_t full = a.size() + b.size() - 1;
  const std::size_t keep = std::min(full, out_len);

  // Short kernels: direct form is faster and exact enough.
  if (std::min(a.size(), b.size()) <= 32) {
    const auto& longer = a.size() >= b.size() ? a : b;
    const auto& shorter = a.size() >= b.size() ? b : a;
    for (std::size_t k = 0; k < shorter.size(); ++k) {
      const double s = shorter[k];
      if (s == 0.0) continue;
      const std::size_t stop = std::min(longer.size(), keep > k ? keep - k : 0);
      for (std::size_t n = 0; n < stop; ++n) out[n + k] += s * longer[n];
    }
    return out;
  }

  const int n = next_pow2(full);
  auto fa = rfft(a, n);
  const auto fb = rfft(b, n);
  for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
  const auto y = irfft(fa, n);
  std::copy_n(y.begin(), keep, out.begin());
  return out;
}

double power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

}  // namespace bat::dsp
