#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bat/signal_core.hpp"

namespace bat::io {

enum class WavFormat { Pcm16, Float32 };

struct WavData {
  int sample_rate = 16000;
  MultiSignal channels;
};

/// Reads 16-bit PCM or 32-bit float WAV (mono or multichannel).
WavData read_wav(const std::string& path);

/// Writes a WAV file atomically (temp file + rename). Float32 stores the
/// samples unscaled; Pcm16 clips to [-1, 1].
void write_wav(const std::string& path, const MultiSignal& channels, int sample_rate,
               WavFormat format = WavFormat::Float32);

/// Writes `bytes` to `path` through a temporary file and rename.
void write_file_atomic(const std::string& path, std::string_view bytes);
std::string read_file(const std::string& path);

/// Binary tensor container: magic "BATTNSR1", dtype, layout tag, shape, then
/// little-endian payload.
enum class DType : std::uint32_t { Float32 = 0, Float64 = 1, Complex128 = 2 };

struct Tensor {
  DType dtype = DType::Float64;
  std::string tag;
  std::vector<std::uint64_t> shape;
  std::vector<double> real;              // Float32 / Float64 payloads
  std::vector<std::complex<double>> cplx;  // Complex128 payloads

  std::uint64_t element_count() const;
};

void write_tensor(const std::string& path, const Tensor& tensor);
Tensor read_tensor(const std::string& path);

}  // namespace bat::io
