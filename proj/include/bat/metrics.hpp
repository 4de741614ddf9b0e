#pragma once

#include <span>
#include <string>

#include "json.hpp"

#include "bat/signal_core.hpp"

namespace bat {

inline constexpr double kIpdMaxHz = 1500.0;
/// ILD magnitude floor, relative to the clip's peak magnitude.
inline constexpr double kIldFloor = 1e-10;

/// Magnitude-weighted interaural phase difference error in radians over bins
/// up to `f_max_hz`. Both spectrograms are 2-channel (left, right); the
/// weights (|Y_L| + |Y_R|) / 2 come from the target.
double mw_ipde(const Spectrogram& target, const Spectrogram& estimate, double f_max_hz = kIpdMaxHz);

/// Magnitude-weighted interaural level difference error in dB over all bins.
double mw_ilde(const Spectrogram& target, const Spectrogram& estimate);

enum class SdrConvention {
  /// 20 log10 of the ratio of squared norms.
  SquaredNormRatio20,
  /// Conventional SI-SDR: 10 log10 of the same ratio.
  Conventional10,
};

/// Scale-invariant SDR of two equal-length signals (both ears concatenated).
/// Returns +inf when the estimate is an exact positive or negative multiple
/// of the target and -inf when it is orthogonal to it.
double msi_sdr(std::span<const double> target, std::span<const double> estimate,
               SdrConvention convention = SdrConvention::SquaredNormRatio20);

/// Concatenates channels (left then right) and evaluates msi_sdr.
double msi_sdr(const MultiSignal& target, const MultiSignal& estimate,
               SdrConvention convention = SdrConvention::SquaredNormRatio20);

/// Finite values as numbers, infinities as "inf" / "-inf".
nlohmann::json metric_to_json(double value);
std::string metric_to_string(double value);

}  // namespace bat
