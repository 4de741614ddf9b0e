#include "bat/rir.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bat/error.hpp"

namespace bat {
namespace {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Adds a Hann-windowed sinc of the given gain centered at fractional sample
// `delay`.
void add_fractional_impulse(Signal& h, double delay, double gain) {
  constexpr double half = kRirInterpTaps / 2.0;
  const long first = std::max(0L, static_cast<long>(std::ceil(delay - half)));
  const long last = std::min(static_cast<long>(h.size()) - 1, static_cast<long>(std::floor(delay + half)));
  for (long n = first; n <= last; ++n) {
    // n - delay is exact near the peak, so sin(pi t) keeps full relative precision.
    const double t = static_cast<double>(n) - delay;
    const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t);
    const double w = 0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * t / kRirInterpTaps));
    h[static_cast<std::size_t>(n)] += gain * w * sinc;
  }
}

}  // namespace

void RoomSpec::validate() const {
  for (double d : dims_m)
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("RoomSpec: dimensions must be positive");
  if (!(t60_s > 0.0)) throw std::invalid_argument("RoomSpec: T60 must be positive");
  if (max_order < -1) throw std::invalid_argument("RoomSpec: max_order must be >= -1");
  if (sample_rate <= 0 || !(speed_of_sound > 0.0))
    throw std::invalid_argument("RoomSpec: sample rate and speed of sound must be positive");
  (void)reflection_coefficient();
}

bool RoomSpec::contains(const Vec3& p) const {
  for (int k = 0; k < 3; ++k)
    if (!(p[k] > 0.0 && p[k] < dims_m[k])) return false;
  return true;
}

double RoomSpec::reflection_coefficient() const {
  const double volume = dims_m[0] * dims_m[1] * dims_m[2];
  const double surface =
      2.0 * (dims_m[0] * dims_m[1] + dims_m[0] * dims_m[2] + dims_m[1] * dims_m[2]);
  const double absorption = 24.0 * std::log(10.0) * volume / (speed_of_sound * surface * t60_s);
  if (absorption > 1.0)
    throw std::invalid_argument("RoomSpec: T60 is too short for this room (absorption > 1)");
  return std::sqrt(1.0 - absorption);
}

std::size_t RoomSpec::length_samples() const {
  const double seconds = length_s > 0.0 ? length_s : t60_s;
  return static_cast<std::size_t>(std::ceil(seconds * sample_rate));
}

Signal simulate_rir(const RoomSpec& room, const Vec3& src, const Vec3& mic) {
  room.validate();
  if (!room.contains(src) || !room.contains(mic))
    throw DataError("simulate_rir: source and microphone must lie strictly inside the room");
  if (distance(src, mic) < 1e-9) throw DataError("simulate_rir: source coincides with microphone");

  const double fs = room.sample_rate;
  const double c = room.speed_of_sound;
  const double beta = room.reflection_coefficient();
  Signal h(room.length_samples(), 0.0);
  const double max_delay = static_cast<double>(h.size()) + kRirInterpTaps / 2.0;
  const double max_dist = max_delay / fs * c;

  std::array<int, 3> span{};
  for (int k = 0; k < 3; ++k) span[k] = static_cast<int>(std::ceil(max_dist / (2.0 * room.dims_m[k]))) + 1;
  if (room.max_order >= 0)
    for (int k = 0; k < 3; ++k) span[k] = std::min(span[k], room.max_order / 2 + 1);

  for (int mx = -span[0]; mx <= span[0]; ++mx) {
    for (int qx = 0; qx <= 1; ++qx) {
      const int ox = std::abs(2 * mx - qx);
      const double x = (1 - 2 * qx) * src[0] + 2.0 * mx * room.dims_m[0];
      for (int my = -span[1]; my <= span[1]; ++my) {
        for (int qy = 0; qy <= 1; ++qy) {
          const int oy = std::abs(2 * my - qy);
          const double y = (1 - 2 * qy) * src[1] + 2.0 * my * room.dims_m[1];
          for (int mz = -span[2]; mz <= span[2]; ++mz) {
            for (int qz = 0; qz <= 1; ++qz) {
              const int oz = std::abs(2 * mz - qz);
              const int order = ox + oy + oz;
              if (room.max_order >= 0 && order > room.max_order) continue;
              const double z = (1 - 2 * qz) * src[2] + 2.0 * mz * room.dims_m[2];
              const double d = distance({x, y, z}, mic);
              const double delay = d / c * fs;
              if (delay >= max_delay) continue;
              const double gain = (order == 0 ? 1.0 : std::pow(beta, order)) / (4.0 * std::numbers::pi * d);
              if (gain == 0.0) continue;
              add_fractional_impulse(h, delay, gain);
            }
          }
        }
      }
    }
  }
  return h;
}

Signal split_direct_early(const Signal& rir, double cutoff_ms, int sample_rate, double taper_ms) {
  if (!(cutoff_ms > 0.0)) throw std::invalid_argument("split_direct_early: cutoff must be positive");
  if (!(taper_ms > 0.0)) throw std::invalid_argument("split_direct_early: taper must be positive");
  Signal out = rir;
  if (rir.empty()) return out;
  std::size_t direct = 0;
  for (std::size_t n = 1; n < rir.size(); ++n)
    if (std::abs(rir[n]) > std::abs(rir[direct])) direct = n;

  const double cut = cutoff_ms * sample_rate / 1000.0;
  const double taper = taper_ms * sample_rate / 1000.0;
  const double tau = taper / 7.0;  // about -60 dB of pure decay over the taper
  const double tail = std::exp(-taper / tau);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double k = static_cast<double>(n) - static_cast<double>(direct) - cut;
    if (k <= 0.0) continue;
    const double g = k >= taper ? 0.0 : (std::exp(-k / tau) - tail) / (1.0 - tail);
    out[n] *= g;
  }
  return out;
}

std::vector<double> energy_decay_curve(const Signal& rir) {
  std::vector<double> edc(rir.size(), 0.0);
  double acc = 0.0;
  for (std::size_t n = rir.size(); n-- > 0;) {
    acc += rir[n] * rir[n];
    edc[n] = acc;
  }
  const double total = acc;
  if (total <= 0.0) throw DataError("energy_decay_curve: silent impulse response");
  for (double& e : edc) e = e > 0.0 ? 10.0 * std::log10(e / total) : -std::numeric_limits<double>::infinity();
  return edc;
}

}  // namespace bat
