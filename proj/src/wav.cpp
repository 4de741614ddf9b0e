#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bat/error.hpp"
#include "bat/io.hpp"

namespace bat::io {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T read_le(const std::string& buf, std::size_t pos) {
  if (pos + sizeof(T) > buf.size()) throw DataError("wav: truncated header");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void append_le(std::string& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

WavData read_wav(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0)
    throw DataError("wav: " + path + " is not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_pos = 0, data_len = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= buf.size()) {
    const std::string id = buf.substr(pos, 4);
    const auto len = read_le<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      format = read_le<std::uint16_t>(buf, body);
      channels = read_le<std::uint16_t>(buf, body + 2);
      rate = read_le<std::uint32_t>(buf, body + 4);
      bits = read_le<std::uint16_t>(buf, body + 14);
      if (format == kFormatExtensible && len >= 26) format = read_le<std::uint16_t>(buf, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
      break;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt || data_pos == 0) throw DataError("wav: " + path + " lacks fmt or data chunk");
  if (channels == 0) throw DataError("wav: zero channels in " + path);

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool f32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !f32) throw DataError("wav: " + path + " must be 16-bit PCM or 32-bit float");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  WavData out;
  out.sample_rate = static_cast<int>(rate);
  out.channels.assign(channels, Signal(frames));
  for (std::size_t n = 0; n < frames; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_pos + (n * channels + c) * width;
      double v;
      if (pcm16) {
        v = read_le<std::int16_t>(buf, at) / 32767.0;
      } else {
        v = static_cast<double>(read_le<float>(buf, at));
      }
      out.channels[c][n] = v;
    }
  }
  return out;
}

void write_wav(const std::string& path, const MultiSignal& channels, int sample_rate,
               WavFormat format) {
  if (channels.empty()) throw DataError("wav: nothing to write to " + path);
  const std::size_t frames = channels.front().size();
  for (const auto& ch : channels)
    if (ch.size() != frames) throw DataError("wav: channels differ in length for " + path);

  const std::uint16_t nch = static_cast<std::uint16_t>(channels.size());
  const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
  const std::uint32_t block = nch * (bits / 8);
  const std::uint32_t data_len = static_cast<std::uint32_t>(frames * block);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  append_le<std::uint32_t>(out, 36 + data_len);
  out += "WAVEfmt ";
  append_le<std::uint32_t>(out, 16);
  append_le<std::uint16_t>(out, format == WavFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  append_le<std::uint16_t>(out, nch);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * block);
  append_le<std::uint16_t>(out, static_cast<std::uint16_t>(block));
  append_le<std::uint16_t>(out, bits);
  out += "data";
  append_le<std::uint32_t>(out, data_len);
  for (std::size_t n = 0; n < frames; ++n) {
    for (const auto& ch : channels) {
      const double v = ch[n];
      if (!std::isfinite(v)) throw NumericalError("wav: non-finite sample while writing " + path);
      if (format == WavFormat::Pcm16) {
        const double clipped = std::clamp(v, -1.0, 1.0);
        append_le<std::int16_t>(out, static_cast<std::int16_t>(std::lround(clipped * 32767.0)));
      } else {
        append_le<float>(out, static_cast<float>(v));
      }
    }
  }
  write_file_atomic(path, out);
}

}  // namespace bat::io
