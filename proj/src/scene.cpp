#include "bat/scene.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <set>

#include "bat/dsp.hpp"
#include "bat/error.hpp"
#include "bat/io.hpp"
#include "bat/sources.hpp"

namespace bat {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ConfigError(where + ": unknown field '" + key + "'");
}

json ratio_to_json(double db) {
  if (std::isinf(db)) return db > 0 ? "inf" : "-inf";
  return db;
}

double ratio_from_json(const json& j, const std::string& name) {
  if (j.is_null()) return kInf;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    throw ConfigError(name + ": expected a number or \"inf\"");
  }
  return j.get<double>();
}

Vec3 vec3_from_json(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(name + ": expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Vec3 offset(const Vec3& origin, double radius, double azimuth_deg) {
  const Vec3 k = look_vector(azimuth_deg);
  return {origin[0] + radius * k[0], origin[1] + radius * k[1], origin[2] + radius * k[2]};
}

void add_into(Signal& dst, const Signal& src, double gain = 1.0) {
  const std::size_t n = std::min(dst.size(), src.size());
  for (std::size_t i = 0; i < n; ++i) dst[i] += gain * src[i];
}

Signal fit_length(Signal x, std::size_t len) {
  x.resize(len, 0.0);
  return x;
}

// Segment boundaries (sample indices) of the trajectory over `len` samples.
std::vector<std::size_t> segment_bounds(const SceneSpec& spec, std::size_t len, int fs) {
  std::vector<std::size_t> bounds{0};
  double t = 0.0;
  for (std::size_t k = 0; k < spec.trajectory.size(); ++k) {
    t += spec.trajectory[k].duration_s;
    const std::size_t b = k + 1 == spec.trajectory.size()
                              ? len
                              : std::min(len, static_cast<std::size_t>(std::llround(t * fs)));
    bounds.push_back(std::max(b, bounds.back()));
  }
  return bounds;
}

// sum over segments of (speech restricted to segment) * filter[segment]
Signal piecewise_convolve(const Signal& speech, const std::vector<std::size_t>& bounds,
                          const std::vector<Signal>& filters) {
  Signal out(speech.size(), 0.0);
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    if (bounds[k + 1] <= bounds[k]) continue;
    std::span<const double> part(speech.data() + bounds[k], bounds[k + 1] - bounds[k]);
    const auto y = dsp::convolve_truncated(part, filters[k], speech.size() - bounds[k]);
    for (std::size_t n = 0; n < y.size(); ++n) out[bounds[k] + n] += y[n];
  }
  return out;
}

Signal circular_shift(const Signal& x, std::size_t shift) {
  Signal y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) y[n] = x[(n + shift) % x.size()];
  return y;
}

double power_db_ratio(double num, double den) {
  if (den <= 0.0) return kInf;
  return 10.0 * std::log10(num / den);
}

}  // namespace

double SceneSpec::duration_s() const {
  double t = 0.0;
  for (const auto& s : trajectory) t += s.duration_s;
  return t;
}

void SceneSpec::validate(bool training_style) const {
  try {
    room.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("scene " + id + ": " + e.what());
  }
  if (trajectory.empty()) throw ConfigError("scene " + id + ": empty trajectory");
  for (const auto& s : trajectory) {
    if (!(s.duration_s > 0.0)) throw ConfigError("scene " + id + ": segment durations must be positive");
    if (!(s.radius_m > 0.0)) throw ConfigError("scene " + id + ": segment radius must be positive");
    if (training_style && (s.radius_m < 1.0 || s.radius_m > 1.5))
      throw ConfigError("scene " + id + ": training targets must lie 1.0-1.5 m from the array");
    if (!room.contains(offset(array_center_m, s.radius_m, s.azimuth_deg)))
      throw ConfigError("scene " + id + ": target position outside the room");
  }
  if (!room.contains(array_center_m)) throw ConfigError("scene " + id + ": array center outside the room");
  if (ambient_directions < 1) throw ConfigError("scene " + id + ": need at least one ambient direction");
  if (!(ambient_radius_m > 0.0)) throw ConfigError("scene " + id + ": ambient radius must be positive");
  for (int j = 0; j < ambient_directions; ++j)
    if (!room.contains(offset(array_center_m, ambient_radius_m, 360.0 * j / ambient_directions)))
      throw ConfigError("scene " + id + ": ambient source ring leaves the room");
  if (std::isnan(sar_db) || std::isnan(snr_db) || sar_db == -kInf || snr_db == -kInf)
    throw ConfigError("scene " + id + ": SAR/SNR must be finite or +inf");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("scene " + id + ": alpha must lie in [0, 1]");
  if (!(early_cutoff_ms > 0.0)) throw ConfigError("scene " + id + ": early cutoff must be positive");
}

json to_json(const SceneSpec& s) {
  json traj = json::array();
  for (const auto& seg : s.trajectory)
    traj.push_back({{"azimuth_deg", seg.azimuth_deg}, {"radius_m", seg.radius_m}, {"duration_s", seg.duration_s}});
  return {
      {"id", s.id},
      {"seed", s.seed},
      {"geometry", s.geometry},
      {"room",
       {{"dims_m", {s.room.dims_m[0], s.room.dims_m[1], s.room.dims_m[2]}},
        {"t60_s", s.room.t60_s},
        {"max_order", s.room.max_order},
        {"length_s", s.room.length_s}}},
      {"array_center_m", {s.array_center_m[0], s.array_center_m[1], s.array_center_m[2]}},
      {"trajectory", traj},
      {"ambient_radius_m", s.ambient_radius_m},
      {"ambient_directions", s.ambient_directions},
      {"ambient_mode", s.ambient_mode == AmbientMode::Shared ? "shared" : "independent"},
      {"sar_db", ratio_to_json(s.sar_db)},
      {"snr_db", ratio_to_json(s.snr_db)},
      {"alpha", s.alpha},
      {"early_cutoff_ms", s.early_cutoff_ms},
      {"speech_wav", s.speech_wav},
      {"ambient_wav", s.ambient_wav},
  };
}

SceneSpec scene_from_json(const json& j) {
  check_keys(j,
             {"id", "seed", "geometry", "room", "array_center_m", "trajectory", "ambient_radius_m",
              "ambient_directions", "ambient_mode", "sar_db", "snr_db", "alpha", "early_cutoff_ms", "speech_wav",
              "ambient_wav"},
             "scene");
  SceneSpec s;
  try {
    s.id = j.value("id", s.id);
    s.seed = j.value("seed", s.seed);
    s.geometry = j.value("geometry", s.geometry);
    if (j.contains("room")) {
      const auto& r = j.at("room");
      check_keys(r, {"dims_m", "t60_s", "max_order", "length_s"}, "scene.room");
      if (r.contains("dims_m")) s.room.dims_m = vec3_from_json(r.at("dims_m"), "room.dims_m");
      s.room.t60_s = r.value("t60_s", s.room.t60_s);
      s.room.max_order = r.value("max_order", s.room.max_order);
      s.room.length_s = r.value("length_s", s.room.length_s);
    }
    if (j.contains("array_center_m")) s.array_center_m = vec3_from_json(j.at("array_center_m"), "array_center_m");
    if (j.contains("trajectory")) {
      s.trajectory.clear();
      for (const auto& seg : j.at("trajectory")) {
        check_keys(seg, {"azimuth_deg", "radius_m", "duration_s"}, "scene.trajectory");
        TrajectorySegment t;
        t.azimuth_deg = seg.value("azimuth_deg", t.azimuth_deg);
        t.radius_m = seg.value("radius_m", t.radius_m);
        t.duration_s = seg.value("duration_s", t.duration_s);
        s.trajectory.push_back(t);
      }
    }
    s.ambient_radius_m = j.value("ambient_radius_m", s.ambient_radius_m);
    s.ambient_directions = j.value("ambient_directions", s.ambient_directions);
    if (j.contains("ambient_mode")) {
      const auto mode = j.at("ambient_mode").get<std::string>();
      if (mode == "shared") s.ambient_mode = AmbientMode::Shared;
      else if (mode == "independent") s.ambient_mode = AmbientMode::Independent;
      else throw ConfigError("scene: ambient_mode must be 'shared' or 'independent'");
    }
    if (j.contains("sar_db")) s.sar_db = ratio_from_json(j.at("sar_db"), "sar_db");
    if (j.contains("snr_db")) s.snr_db = ratio_from_json(j.at("snr_db"), "snr_db");
    s.alpha = j.value("alpha", s.alpha);
    s.early_cutoff_ms = j.value("early_cutoff_ms", s.early_cutoff_ms);
    s.speech_wav = j.value("speech_wav", s.speech_wav);
    s.ambient_wav = j.value("ambient_wav", s.ambient_wav);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  return s;
}

ArrayGeometry scene_geometry(const SceneSpec& spec) {
  if (spec.geometry.size() == 2 && spec.geometry[0] == 'G') return builtin_geometry(spec.geometry);
  return load_geometry(spec.geometry);
}

SceneSources scene_sources(const SceneSpec& spec, int sample_rate) {
  const std::size_t len = static_cast<std::size_t>(std::llround(spec.duration_s() * sample_rate));
  auto load = [&](const std::string& path) {
    auto wav = io::read_wav(path);
    if (wav.sample_rate != sample_rate) throw DataError(path + ": sample rate must be " + std::to_string(sample_rate));
    return fit_length(wav.channels.front(), len);
  };
  SceneSources src;
  src.speech = spec.speech_wav.empty() ? synthetic_speech(spec.duration_s(), sample_rate, split_seed(spec.seed, 1))
                                       : load(spec.speech_wav);
  src.ambient = spec.ambient_wav.empty() ? synthetic_music(spec.duration_s(), sample_rate, split_seed(spec.seed, 2))
                                         : load(spec.ambient_wav);
  src.speech = fit_length(std::move(src.speech), len);
  src.ambient = fit_length(std::move(src.ambient), len);
  return src;
}

SceneAcoustics simulate_scene_acoustics(const SceneSpec& spec, const ArrayGeometry& geom) {
  spec.validate();
  geom.validate();
  SceneAcoustics ac;
  ac.array = geom;
  const Vec3 centroid = geom.centroid();
  for (auto& p : ac.array.positions)
    for (int k = 0; k < 3; ++k) p[k] = spec.array_center_m[k] + p[k] - centroid[k];
  for (const auto& p : ac.array.positions)
    if (!spec.room.contains(p)) throw ConfigError("scene " + spec.id + ": microphone outside the room");

  for (const auto& seg : spec.trajectory) {
    const Vec3 src = offset(spec.array_center_m, seg.radius_m, seg.azimuth_deg);
    std::vector<Signal> per_mic;
    for (const auto& mic : ac.array.positions) per_mic.push_back(simulate_rir(spec.room, src, mic));
    ac.target_rirs.push_back(std::move(per_mic));
  }
  const DirectionGrid grid(spec.ambient_directions);
  for (int j = 0; j < grid.size(); ++j) {
    const Vec3 src = offset(spec.array_center_m, spec.ambient_radius_m, grid.azimuth_deg(j));
    std::vector<Signal> per_mic;
    for (const auto& mic : ac.array.positions) per_mic.push_back(simulate_rir(spec.room, src, mic));
    ac.ambient_rirs.push_back(std::move(per_mic));
    ac.ambient_azimuths_deg.push_back(grid.azimuth_deg(j));
  }
  return ac;
}

SceneSynthesis::SceneSynthesis(const SceneSpec& spec, const SceneAcoustics& ac, const Signal& speech,
                               const Signal& ambient, const HrtfSet* hrtf)
    : reference_(ac.array.reference_index), length_(speech.size()) {
  const int M = ac.array.size();
  const int fs = spec.room.sample_rate;
  if (ambient.size() != speech.size()) throw DataError("scene: speech and ambient lengths differ");
  if (ac.target_rirs.size() != spec.trajectory.size()) throw DataError("scene: acoustics do not match trajectory");
  const auto bounds = segment_bounds(spec, length_, fs);

  // Target image at every mic.
  speech_image_.assign(static_cast<std::size_t>(M), Signal{});
  for (int m = 0; m < M; ++m) {
    std::vector<Signal> filters;
    for (const auto& seg : ac.target_rirs) filters.push_back(seg[static_cast<std::size_t>(m)]);
    speech_image_[m] = piecewise_convolve(speech, bounds, filters);
  }
  const double p_target = dsp::power(speech_image_[reference_]);
  if (!(p_target > 0.0)) throw DataError("scene " + spec.id + ": silent target, SAR/SNR undefined");

  // Ambient image at every mic (unscaled).
  const std::size_t J = ac.ambient_rirs.size();
  std::vector<Signal> ambient_sources;
  if (spec.ambient_mode == AmbientMode::Independent)
    for (std::size_t j = 0; j < J; ++j) ambient_sources.push_back(circular_shift(ambient, j * length_ / J));

  ambient_image_.assign(static_cast<std::size_t>(M), Signal(length_, 0.0));
  for (int m = 0; m < M; ++m) {
    if (spec.ambient_mode == AmbientMode::Shared) {
      Signal summed;
      for (std::size_t j = 0; j < J; ++j) {
        const auto& h = ac.ambient_rirs[j][static_cast<std::size_t>(m)];
        if (summed.size() < h.size()) summed.resize(h.size(), 0.0);
        add_into(summed, h);
      }
      ambient_image_[m] = dsp::convolve_truncated(ambient, summed, length_);
    } else {
      for (std::size_t j = 0; j < J; ++j)
        add_into(ambient_image_[m],
                 dsp::convolve_truncated(ambient_sources[j], ac.ambient_rirs[j][static_cast<std::size_t>(m)], length_));
    }
  }
  if (std::isfinite(spec.sar_db)) {
    const double p_amb = dsp::power(ambient_image_[reference_]);
    if (!(p_amb > 0.0)) throw DataError("scene " + spec.id + ": silent ambient with finite SAR");
    ambient_gain_ = std::sqrt(p_target / (p_amb * std::pow(10.0, spec.sar_db / 10.0)));
  }

  // Sensor noise, white and independent per channel.
  noise_.assign(static_cast<std::size_t>(M), Signal(length_, 0.0));
  if (std::isfinite(spec.snr_db)) {
    for (int m = 0; m < M; ++m) noise_[m] = white_noise(length_, split_seed(spec.seed, 100 + static_cast<std::uint64_t>(m)));
    const double p_noise = dsp::power(noise_[reference_]);
    noise_gain_ = std::sqrt(p_target / (p_noise * std::pow(10.0, spec.snr_db / 10.0)));
  }

  if (!hrtf) return;
  // Binaural target components.
  target_direct_.assign(2, Signal(length_, 0.0));
  target_ambient_.assign(2, Signal(length_, 0.0));
  std::vector<Signal> early;
  for (const auto& seg : ac.target_rirs)
    early.push_back(split_direct_early(seg[static_cast<std::size_t>(reference_)], spec.early_cutoff_ms, fs));
  for (int ear = 0; ear < 2; ++ear) {
    const auto& hrirs = ear == 0 ? hrtf->left : hrtf->right;
    std::vector<Signal> filters;
    for (std::size_t k = 0; k < spec.trajectory.size(); ++k) {
      const int idx = hrtf->index_of(spec.trajectory[k].azimuth_deg);
      filters.push_back(dsp::convolve(early[k], hrirs[static_cast<std::size_t>(idx)]));
    }
    target_direct_[ear] = piecewise_convolve(speech, bounds, filters);

    if (spec.ambient_mode == AmbientMode::Shared) {
      Signal combined;
      for (std::size_t j = 0; j < J; ++j) {
        const int idx = hrtf->index_of(ac.ambient_azimuths_deg[j]);
        const auto f = dsp::convolve(ac.ambient_rirs[j][static_cast<std::size_t>(reference_)], hrirs[static_cast<std::size_t>(idx)]);
        if (combined.size() < f.size()) combined.resize(f.size(), 0.0);
        add_into(combined, f);
      }
      target_ambient_[ear] = dsp::convolve_truncated(ambient, combined, length_);
    } else {
      for (std::size_t j = 0; j < J; ++j) {
        const int idx = hrtf->index_of(ac.ambient_azimuths_deg[j]);
        const auto f = dsp::convolve(ac.ambient_rirs[j][static_cast<std::size_t>(reference_)], hrirs[static_cast<std::size_t>(idx)]);
        add_into(target_ambient_[ear], dsp::convolve_truncated(ambient_sources[j], f, length_));
      }
    }
  }
}

MultiSignal SceneSynthesis::mixture() const {
  MultiSignal out = speech_image_;
  for (std::size_t m = 0; m < out.size(); ++m) {
    if (ambient_gain_ != 0.0) add_into(out[m], ambient_image_[m], ambient_gain_);
    if (noise_gain_ != 0.0) add_into(out[m], noise_[m], noise_gain_);
  }
  return out;
}

MultiSignal SceneSynthesis::target(double alpha) const {
  if (target_direct_.empty()) throw DataError("scene: binaural target requires an HRTF set");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("scene: alpha must lie in [0, 1]");
  MultiSignal out = target_direct_;
  const double g = alpha * ambient_gain_;
  if (g != 0.0)
    for (int ear = 0; ear < 2; ++ear) add_into(out[ear], target_ambient_[ear], g);
  return out;
}

double SceneSynthesis::measured_sar_db() const {
  Signal amb = ambient_image_[reference_];
  for (double& v : amb) v *= ambient_gain_;
  return power_db_ratio(dsp::power(speech_image_[reference_]), dsp::power(amb));
}

double SceneSynthesis::measured_snr_db() const {
  Signal noise = noise_[reference_];
  for (double& v : noise) v *= noise_gain_;
  return power_db_ratio(dsp::power(speech_image_[reference_]), dsp::power(noise));
}

MultiSignal synth_mixture(const SceneSpec& spec, const ArrayGeometry& geom, const Signal& speech,
                          const Signal& ambient) {
  const auto ac = simulate_scene_acoustics(spec, geom);
  return SceneSynthesis(spec, ac, speech, ambient, nullptr).mixture();
}

MultiSignal synth_target_binaural(const SceneSpec& spec, const ArrayGeometry& geom, const Signal& speech,
                                  const Signal& ambient, const HrtfSet& hrtf, double alpha) {
  const auto ac = simulate_scene_acoustics(spec, geom);
  return SceneSynthesis(spec, ac, speech, ambient, &hrtf).target(alpha);
}

MultiSignal synth_plane_wave(const ArrayGeometry& geom, double azimuth_deg, const Signal& signal, int sample_rate,
                             double c) {
  geom.validate();
  const Vec3 kappa = look_vector(azimuth_deg);
  const Vec3& ref = geom.positions[static_cast<std::size_t>(geom.reference_index)];
  double max_shift = 0.0;
  std::vector<double> delays;
  for (const auto& p : geom.positions) {
    const double proj = kappa[0] * (p[0] - ref[0]) + kappa[1] * (p[1] - ref[1]) + kappa[2] * (p[2] - ref[2]);
    delays.push_back(-proj / c * sample_rate);  // mics toward the source hear it earlier
    max_shift = std::max(max_shift, std::abs(delays.back()));
  }
  const int n = dsp::next_pow2(signal.size() + 2 * static_cast<std::size_t>(std::ceil(max_shift)) + 1024);
  const auto spec = dsp::rfft(signal, n);
  MultiSignal out;
  for (double d : delays) {
    std::vector<cplx> shifted(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k)
      shifted[k] = spec[k] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * d / n);
    auto y = dsp::irfft(shifted, n);
    y.resize(signal.size());
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace bat
