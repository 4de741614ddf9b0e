#pragma once

#include <complex>
#include <span>
#include <vector>

namespace bat::dsp {

/// One-sided spectrum (n/2 + 1 bins) of a real sequence zero-padded to `n`.
std::vector<std::complex<double>> rfft(std::span<const double> x, int n);

/// Inverse of rfft: real sequence of length `n` from n/2 + 1 bins.
std::vector<double> irfft(std::span<const std::complex<double>> spectrum, int n);

/// Full linear convolution (length a + b - 1), via FFT.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// Linear convolution truncated to the first `out_len` samples.
std::vector<double> convolve_truncated(std::span<const double> a,
                                       std::span<const double> b,
                                       std::size_t out_len);

int next_pow2(std::size_t n);

double power(std::span<const double> x);

}  // namespace bat::dsp
