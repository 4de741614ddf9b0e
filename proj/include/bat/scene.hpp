#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bat/geometry.hpp"
#include "bat/hrtf.hpp"
#include "bat/rir.hpp"
#include "bat/signal_core.hpp"

namespace bat {

/// Piecewise-static target position, relative to the array center.
struct TrajectorySegment {
  double azimuth_deg = 90.0;
  double radius_m = 1.2;
  double duration_s = 5.0;
};

enum class AmbientMode {
  /// One ambient signal radiated from every direction.
  Shared,
  /// Each direction plays a circularly shifted copy of the ambient signal.
  Independent,
};

struct SceneSpec {
  std::string id = "scene";
  std::uint64_t seed = 0;
  /// Builtin name (G1..G4) or path to a geometry JSON file.
  std::string geometry = "G1";
  RoomSpec room{};
  Vec3 array_center_m{3.0, 2.5, 1.5};
  std::vector<TrajectorySegment> trajectory{TrajectorySegment{}};
  double ambient_radius_m = 2.0;
  int ambient_directions = 72;
  AmbientMode ambient_mode = AmbientMode::Shared;
  /// Signal-to-ambient and signal-to-noise ratios at the reference mic;
  /// +inf disables the corresponding component.
  double sar_db = 10.0;
  double snr_db = 25.0;
  double alpha = 0.0;
  double early_cutoff_ms = 50.0;
  /// Optional source audio; synthetic signals are generated from `seed` when
  /// empty.
  std::string speech_wav;
  std::string ambient_wav;

  double duration_s() const;
  /// Throws ConfigError. `training_style` additionally enforces target radii
  /// within [1.0, 1.5] m.
  void validate(bool training_style = false) const;
};

nlohmann::json to_json(const SceneSpec& spec);
/// Strict parse: unknown keys are rejected with ConfigError.
SceneSpec scene_from_json(const nlohmann::json& j);

/// Resolves the scene's geometry name or file.
ArrayGeometry scene_geometry(const SceneSpec& spec);

/// Source signals of a scene (loaded from WAV or synthesized from the seed),
/// trimmed or zero-padded to the scene duration.
struct SceneSources {
  Signal speech;
  Signal ambient;
};
SceneSources scene_sources(const SceneSpec& spec, int sample_rate = 16000);

/// Every simulated impulse response a scene needs, in room coordinates.
struct SceneAcoustics {
  ArrayGeometry array;                            // positions in the room
  std::vector<std::vector<Signal>> target_rirs;   // [segment][mic]
  std::vector<std::vector<Signal>> ambient_rirs;  // [direction][mic]
  std::vector<double> ambient_azimuths_deg;
};
SceneAcoustics simulate_scene_acoustics(const SceneSpec& spec, const ArrayGeometry& geom);

/// Per-component signals of one scene; the mixture and the binaural targets
/// are linear combinations of them.
class SceneSynthesis {
 public:
  /// `hrtf` may be null when no binaural target is required.
  SceneSynthesis(const SceneSpec& spec, const SceneAcoustics& acoustics, const Signal& speech,
                 const Signal& ambient, const HrtfSet* hrtf);

  /// Microphone signals: target image + scaled ambient + scaled sensor noise.
  MultiSignal mixture() const;
  /// Binaural target: HRTF-filtered early target + alpha * HRTF-filtered
  /// ambient as seen by the reference mic.
  MultiSignal target(double alpha) const;

  double ambient_gain() const { return ambient_gain_; }
  double noise_gain() const { return noise_gain_; }
  double measured_sar_db() const;
  double measured_snr_db() const;

  const MultiSignal& speech_image() const { return speech_image_; }

 private:
  int reference_ = 0;
  std::size_t length_ = 0;
  MultiSignal speech_image_;
  MultiSignal ambient_image_;
  MultiSignal noise_;
  MultiSignal target_direct_;
  MultiSignal target_ambient_;
  double ambient_gain_ = 0.0;
  double noise_gain_ = 0.0;
};

/// Mixture following the additive signal model (target + ambient + noise).
MultiSignal synth_mixture(const SceneSpec& spec, const ArrayGeometry& geom, const Signal& speech,
                          const Signal& ambient);

/// Alpha-weighted binaural target.
MultiSignal synth_target_binaural(const SceneSpec& spec, const ArrayGeometry& geom, const Signal& speech,
                                  const Signal& ambient, const HrtfSet& hrtf, double alpha);

/// Free-field plane wave arriving from `azimuth_deg`: every mic receives the
/// signal with its exact (band-limited) fractional delay relative to the
/// reference mic.
MultiSignal synth_plane_wave(const ArrayGeometry& geom, double azimuth_deg, const Signal& signal,
                             int sample_rate = 16000, double c = kSpeedOfSound);

}  // namespace bat
