#include "bat/sources.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bat {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void normalize_rms(Signal& x, double rms) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  if (acc <= 0.0) return;
  const double g = rms / std::sqrt(acc / static_cast<double>(x.size()));
  for (double& v : x) v *= g;
}

std::size_t samples_for(double duration_s, int sample_rate) {
  if (!(duration_s > 0.0) || sample_rate <= 0) throw std::invalid_argument("source: duration and rate must be positive");
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate));
}

double hann(double t) { return 0.5 - 0.5 * std::cos(kTwoPi * t); }

}  // namespace

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Signal white_noise(std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Signal x(length);
  for (double& v : x) v = normal(rng);
  return x;
}

Signal synthetic_speech(double duration_s, int sample_rate, std::uint64_t seed) {
  const std::size_t total = samples_for(duration_s, sample_rate);
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto between = [&](double lo, double hi) { return lo + (hi - lo) * uni(rng); };

  Signal x(total, 0.0);
  const double fs = sample_rate;
  const double base_f0 = between(95.0, 210.0);
  double phase = 0.0;
  std::size_t pos = static_cast<std::size_t>(between(0.0, 0.05) * fs);
  while (pos < total) {
    if (uni(rng) < 0.2) {  // pause
      pos += static_cast<std::size_t>(between(0.05, 0.2) * fs);
      continue;
    }
    const std::size_t len = static_cast<std::size_t>(between(0.12, 0.3) * fs);
    const bool voiced = uni(rng) < 0.8;
    if (voiced) {
      const std::array<double, 3> formant{between(300, 900), between(900, 2400), between(2300, 3300)};
      const std::array<double, 3> width{between(80, 160), between(100, 200), between(150, 250)};
      const double f0_start = base_f0 * between(0.85, 1.2);
      const double f0_end = base_f0 * between(0.85, 1.2);
      for (std::size_t n = 0; n < len && pos + n < total; ++n) {
        const double t = static_cast<double>(n) / static_cast<double>(len);
        const double f0 = f0_start + (f0_end - f0_start) * t;
        phase += kTwoPi * f0 / fs;
        if (phase > kTwoPi * 1e6) phase = std::fmod(phase, kTwoPi);
        double v = 0.0;
        for (int h = 1; h * f0 < 4000.0; ++h) {
          const double fh = h * f0;
          double amp = 0.0;
          for (int k = 0; k < 3; ++k) {
            const double d = (fh - formant[k]) / width[k];
            amp += std::exp(-0.5 * d * d) / (k + 1);
          }
          v += (amp + 0.01) * std::sin(h * phase);
        }
        x[pos + n] += hann(t) * v;
      }
    } else {
      double prev = 0.0;
      for (std::size_t n = 0; n < len && pos + n < total; ++n) {
        const double t = static_cast<double>(n) / static_cast<double>(len);
        const double w = normal(rng);
        x[pos + n] += 0.3 * hann(t) * (w - 0.9 * prev);  // crude fricative tilt
        prev = w;
      }
    }
    pos += len;
  }
  normalize_rms(x, 0.05);
  return x;
}

Signal synthetic_music(double duration_s, int sample_rate, std::uint64_t seed) {
  const std::size_t total = samples_for(duration_s, sample_rate);
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 14);
  // A minor pentatonic over three octaves from A2.
  constexpr std::array<int, 5> steps{0, 3, 5, 7, 10};
  auto note_hz = [&](int idx) {
    const int semis = steps[idx % 5] + 12 * (idx / 5);
    return 110.0 * std::pow(2.0, semis / 12.0);
  };

  Signal x(total, 0.0);
  const double fs = sample_rate;
  std::size_t pos = 0;
  while (pos < total) {
    const std::size_t len = static_cast<std::size_t>((0.3 + 0.4 * uni(rng)) * fs);
    for (int voice = 0; voice < 3; ++voice) {
      const double f = note_hz(pick(rng));
      const double ph0 = kTwoPi * uni(rng);
      const double decay = 2.0 + 4.0 * uni(rng);
      for (std::size_t n = 0; n < len && pos + n < total; ++n) {
        const double t = static_cast<double>(n) / fs;
        const double env = std::exp(-decay * t) * std::min(1.0, t / 0.01);
        double v = 0.0;
        for (int h = 1; h <= 6 && h * f < 7000.0; ++h) v += std::sin(kTwoPi * h * f * t + h * ph0) / h;
        x[pos + n] += env * v;
      }
    }
    pos += len;
  }
  normalize_rms(x, 0.05);
  return x;
}

}  // namespace bat
