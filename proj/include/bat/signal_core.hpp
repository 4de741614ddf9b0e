#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bat {

using cplx = std::complex<double>;
using Signal = std::vector<double>;
/// Channel-major multichannel audio; all channels have equal length.
using MultiSignal = std::vector<Signal>;

enum class WindowKind { SqrtHann };

/// STFT framing. Defaults: 16 kHz, 32 ms frames, 8 ms hop, 512-point FFT.
struct StftParams {
  int sample_rate = 16000;
  int frame_len = 512;
  int hop = 128;
  int fft_size = 512;
  WindowKind window = WindowKind::SqrtHann;

  int num_bins() const { return fft_size / 2 + 1; }
  double bin_hz(int bin) const {
    return static_cast<double>(bin) * sample_rate / fft_size;
  }
  /// Zero padding applied to the front of the signal before framing.
  int front_pad() const { return frame_len - hop; }

  /// Throws std::invalid_argument when the framing is inconsistent or the
  /// analysis/synthesis pair is not constant-overlap-add at `hop`.
  void validate() const;

  bool operator==(const StftParams&) const = default;
};

std::vector<double> analysis_window(const StftParams& params);

/// Complex time-frequency tensor indexed (channel, frame, bin).
class Spectrogram {
 public:
  Spectrogram() = default;
  Spectrogram(int channels, int frames, const StftParams& params,
              std::size_t num_samples = 0);

  int channels() const { return channels_; }
  int frames() const { return frames_; }
  int bins() const { return bins_; }
  const StftParams& params() const { return params_; }
  /// Length of the time signal this spectrogram was computed from.
  std::size_t num_samples() const { return num_samples_; }
  void set_num_samples(std::size_t n) { num_samples_ = n; }

  cplx& operator()(int ch, int frame, int bin) {
    return data_[index(ch, frame, bin)];
  }
  const cplx& operator()(int ch, int frame, int bin) const {
    return data_[index(ch, frame, bin)];
  }

  std::span<cplx> frame(int ch, int frame) {
    return {data_.data() + index(ch, frame, 0), static_cast<std::size_t>(bins_)};
  }
  std::span<const cplx> frame(int ch, int frame) const {
    return {data_.data() + index(ch, frame, 0), static_cast<std::size_t>(bins_)};
  }

  std::vector<cplx>& data() { return data_; }
  const std::vector<cplx>& data() const { return data_; }

  /// Copy of a subset of channels, in the given order.
  Spectrogram select_channels(std::span<const int> channels) const;

  bool same_shape(const Spectrogram& other) const {
    return channels_ == other.channels_ && frames_ == other.frames_ &&
           bins_ == other.bins_;
  }

 private:
  std::size_t index(int ch, int frame, int bin) const {
    return (static_cast<std::size_t>(ch) * frames_ + frame) * bins_ + bin;
  }

  int channels_ = 0;
  int frames_ = 0;
  int bins_ = 0;
  StftParams params_{};
  std::size_t num_samples_ = 0;
  std::vector<cplx> data_;
};

/// Number of frames produced for a signal of `num_samples` samples.
int stft_frame_count(std::size_t num_samples, const StftParams& params);

Spectrogram stft(const MultiSignal& signal, const StftParams& params);
Spectrogram stft(std::span<const double> mono, const StftParams& params);

/// Weighted overlap-add inverse. Returns `spec.num_samples()` samples per
/// channel.
MultiSignal istft(const Spectrogram& spec, const StftParams& params);

/// Rectangular ERB-scale partition of the STFT bins.
///
/// Band edges are equally spaced on the Glasberg-Moore ERB-rate scale between
/// 0 Hz and Nyquist; where that spacing is narrower than one bin, edges are
/// pushed outward so every band keeps at least one bin. Each bin belongs to
/// exactly one band with weight 1, so the normalizer of a band is its width.
class ErbFilterbank {
 public:
  ErbFilterbank() = default;
  explicit ErbFilterbank(std::vector<int> band_edges);

  int bands() const { return static_cast<int>(edges_.size()) - 1; }
  int bins() const { return edges_.empty() ? 0 : edges_.back(); }
  int band_begin(int band) const { return edges_[band]; }
  int band_end(int band) const { return edges_[band + 1]; }
  int band_of_bin(int bin) const { return band_of_bin_[bin]; }
  double weight(int band, int bin) const {
    return band_of_bin_[bin] == band ? 1.0 : 0.0;
  }
  /// Sum of the band's weights over all bins.
  double normalizer(int band) const {
    return static_cast<double>(edges_[band + 1] - edges_[band]);
  }
  const std::vector<int>& edges() const { return edges_; }

 private:
  std::vector<int> edges_;
  std::vector<int> band_of_bin_;
};

/// Glasberg-Moore ERB-rate (in ERB units) of a frequency in Hz.
double erb_rate(double hz);

ErbFilterbank build_erb_filterbank(int bands, const StftParams& params);

/// Compresses a tensor laid out as (outer, bins, inner) to (outer, bands,
/// inner): each band value is the normalized weighted sum of its bins.
std::vector<double> erb_compress(std::span<const double> values,
                                 const ErbFilterbank& fb, std::size_t inner = 1);

/// Expands (outer, bands, inner) to (outer, bins, inner) by giving every bin
/// the value of its band.
std::vector<double> erb_expand(std::span<const double> band_values,
                               const ErbFilterbank& fb, std::size_t inner = 1);

}  // namespace bat
