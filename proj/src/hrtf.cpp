#include "bat/hrtf.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "bat/dsp.hpp"
#include "bat/error.hpp"
#include "bat/io.hpp"

namespace bat {
namespace {

constexpr double kPi = std::numbers::pi;

double wrap_deg(double a) {
  a = std::fmod(a, 360.0);
  return a < 0 ? a + 360.0 : a;
}

// Woodworth delay (seconds) of an ear relative to the head center for a
// source at incidence angle psi (radians) from the ear axis.
double woodworth_delay(double psi, double radius, double c) {
  return psi < kPi / 2 ? -radius / c * std::cos(psi) : radius / c * (psi - kPi / 2);
}

// Brown-Duda one-pole/one-zero head shadow.
cplx head_shadow(double omega, double psi, double radius, double c) {
  constexpr double alpha_min = 0.1;
  constexpr double theta_min = 150.0 * kPi / 180.0;
  const double alpha = (1.0 + alpha_min / 2.0) + (1.0 - alpha_min / 2.0) * std::cos(psi / theta_min * kPi);
  const double omega0 = c / radius;
  const cplx jw(0.0, omega / (2.0 * omega0));
  return (1.0 + alpha * jw) / (1.0 + jw);
}

Signal ear_hrir(double source_az_deg, double ear_az_deg, int fs, const SphericalHeadOptions& o) {
  const double diff = (source_az_deg - ear_az_deg) * kPi / 180.0;
  const double psi = std::acos(std::clamp(std::cos(diff), -1.0, 1.0));
  const double delay = o.bulk_delay + woodworth_delay(psi, o.head_radius_m, o.speed_of_sound) * fs;
  const int n = o.length;
  std::vector<cplx> spec(static_cast<std::size_t>(n / 2 + 1));
  for (int k = 0; k <= n / 2; ++k) {
    const double w = 2.0 * kPi * k / n;  // rad / sample
    spec[k] = head_shadow(w * fs, psi, o.head_radius_m, o.speed_of_sound) * std::polar(1.0, -w * delay);
  }
  return dsp::irfft(spec, n);
}

}  // namespace

void HrtfSet::validate(const DirectionGrid* grid) const {
  if (sample_rate != 16000) throw DataError("HrtfSet: sample rate must be 16000 Hz");
  if (azimuths_deg.empty()) throw DataError("HrtfSet: empty set");
  if (left.size() != azimuths_deg.size() || right.size() != azimuths_deg.size())
    throw DataError("HrtfSet: left/right count does not match azimuth count");
  const std::size_t len = left.front().size();
  if (len == 0) throw DataError("HrtfSet: empty HRIR");
  for (std::size_t i = 0; i < left.size(); ++i)
    if (left[i].size() != len || right[i].size() != len) throw DataError("HrtfSet: HRIR lengths differ");

  std::set<long> seen;
  for (double a : azimuths_deg) {
    const long key = std::lround(wrap_deg(a) * 1e6) % 360000000L;
    if (!seen.insert(key).second) {
      std::ostringstream ss;
      ss << "HrtfSet: duplicate azimuth " << a;
      throw DataError(ss.str());
    }
  }
  if (grid) {
    if (grid->size() != size()) throw DataError("HrtfSet: azimuth grid size does not match J");
    for (double a : azimuths_deg)
      if (grid->find(a) < 0) throw DataError("HrtfSet: azimuth not on the direction grid");
  }
}

int HrtfSet::index_of(double azimuth_deg) const {
  const double target = wrap_deg(azimuth_deg);
  for (int i = 0; i < size(); ++i) {
    double d = std::abs(wrap_deg(azimuths_deg[i]) - target);
    d = std::min(d, 360.0 - d);
    if (d < 1e-6) return i;
  }
  std::ostringstream ss;
  ss << "HrtfSet: no HRIR pair for azimuth " << azimuth_deg;
  throw DataError(ss.str());
}

HrtfSet spherical_head_hrtf(const DirectionGrid& grid, int sample_rate, const SphericalHeadOptions& opts) {
  if (opts.length < 2 || opts.length % 2 != 0) throw std::invalid_argument("spherical_head_hrtf: length must be even");
  HrtfSet set;
  set.sample_rate = sample_rate;
  for (int j = 0; j < grid.size(); ++j) {
    const double az = grid.azimuth_deg(j);
    set.azimuths_deg.push_back(az);
    set.left.push_back(ear_hrir(az, 90.0, sample_rate, opts));
    set.right.push_back(ear_hrir(az, -90.0, sample_rate, opts));
  }
  return set;
}

HrtfSet load_hrtf_set(const std::string& manifest_path, const DirectionGrid& grid) {
  namespace fs = std::filesystem;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("HRTF manifest " + manifest_path + ": " + e.what());
  }
  const fs::path base = fs::path(manifest_path).parent_path();
  HrtfSet set;
  try {
    set.sample_rate = j.value("sample_rate", 16000);
    for (const auto& entry : j.at("directions")) {
      set.azimuths_deg.push_back(entry.at("azimuth_deg").get<double>());
      for (const char* ear : {"left", "right"}) {
        const auto wav = io::read_wav((base / entry.at(ear).get<std::string>()).string());
        if (wav.sample_rate != set.sample_rate) throw DataError("HRTF manifest: WAV sample rate mismatch");
        if (wav.channels.size() != 1) throw DataError("HRTF manifest: HRIR WAVs must be mono");
        (std::string(ear) == "left" ? set.left : set.right).push_back(wav.channels.front());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("HRTF manifest " + manifest_path + ": " + e.what());
  }
  set.validate(&grid);
  return set;
}

void save_hrtf_set(const HrtfSet& set, const std::string& manifest_path) {
  namespace fs = std::filesystem;
  set.validate();
  const fs::path base = fs::path(manifest_path).parent_path();
  nlohmann::json j;
  j["sample_rate"] = set.sample_rate;
  j["directions"] = nlohmann::json::array();
  for (int i = 0; i < set.size(); ++i) {
    std::ostringstream stem;
    stem << "hrir_az" << std::lround(set.azimuths_deg[i] * 1000.0);
    const std::string l = stem.str() + "_L.wav";
    const std::string r = stem.str() + "_R.wav";
    io::write_wav((base / l).string(), {set.left[i]}, set.sample_rate);
    io::write_wav((base / r).string(), {set.right[i]}, set.sample_rate);
    j["directions"].push_back({{"azimuth_deg", set.azimuths_deg[i]}, {"left", l}, {"right", r}});
  }
  io::write_file_atomic(manifest_path, j.dump(2) + "\n");
}

std::vector<cplx> hrir_response(const Signal& hrir, const StftParams& params) {
  if (hrir.size() > static_cast<std::size_t>(params.fft_size))
    throw DataError("hrir_response: HRIR longer than the FFT size");
  return dsp::rfft(hrir, params.fft_size);
}

}  // namespace bat
