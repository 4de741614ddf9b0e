#pragma once

#include <vector>

#include "bat/geometry.hpp"
#include "bat/signal_core.hpp"

namespace bat {

/// Shoebox room for image-source simulation. Walls share one
/// frequency-independent reflection coefficient derived from `t60_s` through
/// Sabine's formula.
struct RoomSpec {
  Vec3 dims_m{6.0, 5.0, 3.0};
  double t60_s = 0.4;
  /// Total reflection order cap; -1 keeps every image that arrives within
  /// the response length, 0 gives the free-field (direct path only) response.
  int max_order = -1;
  /// Response length in seconds; <= 0 selects t60_s.
  double length_s = 0.0;
  int sample_rate = 16000;
  double speed_of_sound = kSpeedOfSound;

  void validate() const;
  bool contains(const Vec3& p) const;
  /// Wall reflection coefficient sqrt(1 - a), a = 0.161 V / (S T60).
  double reflection_coefficient() const;
  std::size_t length_samples() const;
};

/// Image-source room impulse response from `src` to `mic`. Every image is a
/// Hann-windowed sinc centered on its fractional arrival time with amplitude
/// beta^reflections / (4 pi d), so the direct path peaks at round(d / c * fs).
Signal simulate_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic);

/// Length in taps of the fractional-delay interpolator used for each image.
inline constexpr int kRirInterpTaps = 64;

/// Keeps the response up to `cutoff_ms` after the direct arrival (the peak
/// sample) and fades the remainder with an exponential taper that reaches
/// zero `taper_ms` later.
Signal split_direct_early(const Signal& rir, double cutoff_ms, int sample_rate,
                          double taper_ms = 100.0);

/// Schroeder backward-integrated energy decay curve in dB (0 dB at t = 0).
std::vector<double> energy_decay_curve(const Signal& rir);

}  // namespace bat
