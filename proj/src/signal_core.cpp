#include "bat/signal_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "bat/dsp.hpp"
#include "bat/error.hpp"

namespace bat {
namespace {

// Sum over frames of analysis*synthesis window at each hop phase.
double cola_constant(const StftParams& p) {
  const auto w = analysis_window(p);
  double first = 0.0;
  for (int phase = 0; phase < p.hop; ++phase) {
    double acc = 0.0;
    for (int n = phase; n < p.frame_len; n += p.hop) acc += w[n] * w[n];
    if (phase == 0) {
      first = acc;
    } else if (std::abs(acc - first) > 1e-12 * first) {
      throw std::invalid_argument("StftParams: window pair is not COLA at hop " +
                                  std::to_string(p.hop));
    }
  }
  return first;
}

void check_finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) throw_data("stft: non-finite sample in input");
}

}  // namespace

void StftParams::validate() const {
  if (sample_rate <= 0 || frame_len <= 0 || hop <= 0 || fft_size <= 0)
    throw std::invalid_argument("StftParams: all sizes must be positive");
  if (fft_size % 2 != 0) throw std::invalid_argument("StftParams: fft_size must be even");
  if (frame_len > fft_size)
    throw std::invalid_argument("StftParams: frame_len exceeds fft_size");
  if (frame_len % hop != 0)
    throw std::invalid_argument("StftParams: hop must divide frame_len");
  (void)cola_constant(*this);
}

std::vector<double> analysis_window(const StftParams& params) {
  // Periodic sqrt-Hann: w^2 sums to frame_len / (2 hop) at any hop dividing
  // frame_len / 2.
  std::vector<double> w(static_cast<std::size_t>(params.frame_len));
  const double n = params.frame_len;
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::sqrt(0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n));
  return w;
}

Spectrogram::Spectrogram(int channels, int frames, const StftParams& params,
                         std::size_t num_samples)
    : channels_(channels),
      frames_(frames),
      bins_(params.num_bins()),
      params_(params),
      num_samples_(num_samples),
      data_(static_cast<std::size_t>(channels) * frames * params.num_bins()) {
  if (channels < 0 || frames < 0) throw std::invalid_argument("Spectrogram: negative shape");
}

Spectrogram Spectrogram::select_channels(std::span<const int> channels) const {
  Spectrogram out(static_cast<int>(channels.size()), frames_, params_, num_samples_);
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const int ch = channels[i];
    if (ch < 0 || ch >= channels_) throw std::out_of_range("select_channels: bad channel");
    for (int l = 0; l < frames_; ++l) {
      auto src = frame(ch, l);
      std::copy(src.begin(), src.end(), out.frame(static_cast<int>(i), l).begin());
    }
  }
  return out;
}

int stft_frame_count(std::size_t num_samples, const StftParams& p) {
  // Frames start at multiples of hop in the padded signal and must cover every
  // padded position holding an original sample.
  const std::size_t last = num_samples + static_cast<std::size_t>(p.front_pad()) - 1;
  return static_cast<int>(last / static_cast<std::size_t>(p.hop)) + 1;
}

Spectrogram stft(std::span<const double> mono, const StftParams& params) {
  return stft(MultiSignal{Signal(mono.begin(), mono.end())}, params);
}

Spectrogram stft(const MultiSignal& signal, const StftParams& params) {
  params.validate();
  if (signal.empty()) throw_data("stft: no channels");
  const std::size_t len = signal.front().size();
  for (const auto& ch : signal) {
    if (ch.size() != len) throw_data("stft: channels differ in length");
    check_finite(ch);
  }
  if (len < static_cast<std::size_t>(params.frame_len))
    throw_data("stft: signal shorter than one frame");

  const int frames = stft_frame_count(len, params);
  const auto window = analysis_window(params);
  const long pad = params.front_pad();
  Spectrogram spec(static_cast<int>(signal.size()), frames, params, len);

  std::vector<double> buf(static_cast<std::size_t>(params.frame_len));
  for (int m = 0; m < spec.channels(); ++m) {
    const auto& x = signal[static_cast<std::size_t>(m)];
    for (int l = 0; l < frames; ++l) {
      const long start = static_cast<long>(l) * params.hop - pad;
      for (int n = 0; n < params.frame_len; ++n) {
        const long idx = start + n;
        const double v = (idx >= 0 && idx < static_cast<long>(len)) ? x[static_cast<std::size_t>(idx)] : 0.0;
        buf[static_cast<std::size_t>(n)] = v * window[static_cast<std::size_t>(n)];
      }
      const auto bins = dsp::rfft(buf, params.fft_size);
      std::copy(bins.begin(), bins.end(), spec.frame(m, l).begin());
    }
  }
  return spec;
}

MultiSignal istft(const Spectrogram& spec, const StftParams& params) {
  params.validate();
  if (!(spec.params() == params)) throw_data("istft: spectrogram was built with different StftParams");
  const std::size_t len = spec.num_samples();
  if (spec.frames() != stft_frame_count(len, params))
    throw_data("istft: frame count does not match the recorded signal length");

  const auto window = analysis_window(params);
  const double norm = cola_constant(params);
  const long pad = params.front_pad();
  MultiSignal out(static_cast<std::size_t>(spec.channels()), Signal(len, 0.0));

  for (int m = 0; m < spec.channels(); ++m) {
    auto& y = out[static_cast<std::size_t>(m)];
    for (int l = 0; l < spec.frames(); ++l) {
      const auto frame = dsp::irfft(spec.frame(m, l), params.fft_size);
      const long start = static_cast<long>(l) * params.hop - pad;
      for (int n = 0; n < params.frame_len; ++n) {
        const long idx = start + n;
        if (idx < 0 || idx >= static_cast<long>(len)) continue;
        y[static_cast<std::size_t>(idx)] += frame[static_cast<std::size_t>(n)] * window[static_cast<std::size_t>(n)];
      }
    }
    for (double& v : y) v /= norm;
  }
  return out;
}

double erb_rate(double hz) { return 21.4 * std::log10(1.0 + 0.00437 * hz); }

ErbFilterbank::ErbFilterbank(std::vector<int> band_edges) : edges_(std::move(band_edges)) {
  if (edges_.size() < 2 || edges_.front() != 0)
    throw std::invalid_argument("ErbFilterbank: edges must start at 0 and define >= 1 band");
  band_of_bin_.resize(static_cast<std::size_t>(edges_.back()));
  for (int b = 0; b + 1 < static_cast<int>(edges_.size()); ++b) {
    if (edges_[b + 1] <= edges_[b]) throw std::invalid_argument("ErbFilterbank: empty band");
    for (int f = edges_[b]; f < edges_[b + 1]; ++f) band_of_bin_[f] = b;
  }
}

ErbFilterbank build_erb_filterbank(int bands, const StftParams& params) {
  const int bins = params.num_bins();
  if (bands < 1) throw std::invalid_argument("build_erb_filterbank: need at least one band");
  if (bands > bins)
    throw std::invalid_argument("build_erb_filterbank: more bands than frequency bins");

  const double top = erb_rate(params.sample_rate / 2.0);
  std::vector<int> start(static_cast<std::size_t>(bands) + 1);
  int bin = 0;
  for (int b = 0; b < bands; ++b) {
    const double edge = top * b / bands;
    while (bin < bins && erb_rate(params.bin_hz(bin)) < edge) ++bin;
    start[b] = bin;
  }
  start[0] = 0;
  start[bands] = bins;
  for (int b = 1; b < bands; ++b) start[b] = std::max(start[b], start[b - 1] + 1);
  for (int b = bands - 1; b >= 1; --b) start[b] = std::min(start[b], start[b + 1] - 1);
  return ErbFilterbank(std::move(start));
}

std::vector<double> erb_compress(std::span<const double> values, const ErbFilterbank& fb,
                                 std::size_t inner) {
  const std::size_t bins = static_cast<std::size_t>(fb.bins());
  if (inner == 0 || values.size() % (bins * inner) != 0)
    throw_dimension("erb_compress: input size is not a multiple of bins x inner");
  const std::size_t outer = values.size() / (bins * inner);
  const std::size_t bands = static_cast<std::size_t>(fb.bands());
  std::vector<double> out(outer * bands * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t b = 0; b < bands; ++b) {
      double* dst = out.data() + (o * bands + b) * inner;
      for (int f = fb.band_begin(static_cast<int>(b)); f < fb.band_end(static_cast<int>(b)); ++f) {
        const double* src = values.data() + (o * bins + static_cast<std::size_t>(f)) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i];
      }
      const double norm = fb.normalizer(static_cast<int>(b));
      for (std::size_t i = 0; i < inner; ++i) dst[i] /= norm;
    }
  }
  return out;
}

std::vector<double> erb_expand(std::span<const double> band_values, const ErbFilterbank& fb,
                               std::size_t inner) {
  const std::size_t bands = static_cast<std::size_t>(fb.bands());
  if (inner == 0 || band_values.size() % (bands * inner) != 0)
    throw_dimension("erb_expand: input size is not a multiple of bands x inner");
  const std::size_t outer = band_values.size() / (bands * inner);
  const std::size_t bins = static_cast<std::size_t>(fb.bins());
  std::vector<double> out(outer * bins * inner);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t f = 0; f < bins; ++f) {
      const std::size_t b = static_cast<std::size_t>(fb.band_of_bin(static_cast<int>(f)));
      const double* src = band_values.data() + (o * bands + b) * inner;
      std::copy_n(src, inner, out.data() + (o * bins + f) * inner);
    }
  }
  return out;
}

}  // namespace bat
