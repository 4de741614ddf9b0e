#pragma once

#include <string>
#include <vector>

#include "bat/geometry.hpp"
#include "bat/signal_core.hpp"

namespace bat {

/// Direction-indexed head-related impulse response pairs on a horizontal
/// azimuth grid. Azimuth convention matches DirectionGrid: 0 deg is straight
/// ahead (+x), 90 deg is the listener's left (+y).
struct HrtfSet {
  int sample_rate = 16000;
  std::vector<double> azimuths_deg;
  std::vector<Signal> left;
  std::vector<Signal> right;

  int size() const { return static_cast<int>(azimuths_deg.size()); }
  std::size_t hrir_length() const { return left.empty() ? 0 : left.front().size(); }

  /// Checks equal HRIR lengths, 16 kHz, unique azimuths, and, when `grid` is
  /// given, that the azimuths coincide with it.
  void validate(const DirectionGrid* grid = nullptr) const;
  /// Index of the pair at exactly `azimuth_deg`; throws DataError when the
  /// direction is missing.
  int index_of(double azimuth_deg) const;
};

struct SphericalHeadOptions {
  double head_radius_m = 0.0875;
  double speed_of_sound = kSpeedOfSound;
  int length = 128;
  /// Bulk delay in samples so that the earliest ear is still causal.
  double bulk_delay = 32.0;
};

/// Analytic HRTF set from a rigid spherical head: Woodworth interaural time
/// difference plus a one-pole/one-zero head-shadow filter per ear.
HrtfSet spherical_head_hrtf(const DirectionGrid& grid, int sample_rate = 16000,
                            const SphericalHeadOptions& opts = {});

/// Reads a JSON manifest {"sample_rate": fs, "directions": [{"azimuth_deg",
/// "left", "right"}, ...]} whose WAV paths are relative to the manifest.
HrtfSet load_hrtf_set(const std::string& manifest_path, const DirectionGrid& grid);

/// Writes one stereo-pair of mono WAVs per direction plus the manifest.
void save_hrtf_set(const HrtfSet& set, const std::string& manifest_path);

/// Frequency response of an HRIR on the STFT bins.
std::vector<cplx> hrir_response(const Signal& hrir, const StftParams& params);

}  // namespace bat
