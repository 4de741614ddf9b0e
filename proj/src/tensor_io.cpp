#include <cstring>

#include "bat/error.hpp"
#include "bat/io.hpp"

namespace bat::io {
namespace {

constexpr char kMagic[8] = {'B', 'A', 'T', 'T', 'N', 'S', 'R', '1'};

template <typename T>
void put(std::string& out, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw DataError("tensor: truncated file");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void write_tensor(const std::string& path, const Tensor& t) {
  const std::uint64_t n = t.element_count();
  const std::size_t have = t.dtype == DType::Complex128 ? t.cplx.size() : t.real.size();
  if (have != n) throw DataError("tensor: payload size does not match shape for " + path);

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dtype));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.tag.size()));
  out += t.tag;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) put<std::uint64_t>(out, d);
  switch (t.dtype) {
    case DType::Float32:
      for (double v : t.real) put<float>(out, static_cast<float>(v));
      break;
    case DType::Float64:
      for (double v : t.real) put<double>(out, v);
      break;
    case DType::Complex128:
      for (const auto& v : t.cplx) {
        put<double>(out, v.real());
        put<double>(out, v.imag());
      }
      break;
  }
  write_file_atomic(path, out);
}

Tensor read_tensor(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw DataError("tensor: bad magic in " + path);
  std::size_t pos = sizeof(kMagic);
  Tensor t;
  const auto dtype = get<std::uint32_t>(buf, pos);
  if (dtype > 2) throw DataError("tensor: unknown dtype in " + path);
  t.dtype = static_cast<DType>(dtype);
  const auto tag_len = get<std::uint32_t>(buf, pos);
  if (pos + tag_len > buf.size()) throw DataError("tensor: truncated tag in " + path);
  t.tag = buf.substr(pos, tag_len);
  pos += tag_len;
  const auto ndim = get<std::uint32_t>(buf, pos);
  for (std::uint32_t i = 0; i < ndim; ++i) t.shape.push_back(get<std::uint64_t>(buf, pos));
  const std::uint64_t n = t.element_count();
  switch (t.dtype) {
    case DType::Float32:
      t.real.resize(n);
      for (auto& v : t.real) v = static_cast<double>(get<float>(buf, pos));
      break;
    case DType::Float64:
      t.real.resize(n);
      for (auto& v : t.real) v = get<double>(buf, pos);
      break;
    case DType::Complex128:
      t.cplx.resize(n);
      for (auto& v : t.cplx) {
        const double re = get<double>(buf, pos);
        const double im = get<double>(buf, pos);
        v = {re, im};
      }
      break;
  }
  if (pos != buf.size()) throw DataError("tensor: trailing bytes in " + path);
  return t;
}

}  // namespace bat::io
