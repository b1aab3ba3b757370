#ifndef OCTMRI_IO_HPP_
#define OCTMRI_IO_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "octmri/tensor.hpp"

namespace octmri {

struct IoError : Error {
  using Error::Error;
};

// DOCT binary tensor format, little-endian:
//   magic "DOCT", u32 version=1, u32 dtype (0=f64), u32 ndim, ndim x u64 dims,
//   full real plane, full imag plane.
namespace doct {

inline constexpr char kMagic[4] = {'D', 'O', 'C', 'T'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::uint32_t kDtypeF64 = 0;

namespace detail {

template <typename T>
void put(std::ofstream& os, T v) {
  // host is little-endian; write raw
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, const std::string& path, std::size_t& offset, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is)
    throw IoError("malformed DOCT file '" + path + "': truncated reading " + what +
                  " at byte offset " + std::to_string(offset));
  offset += sizeof(T);
  return v;
}

}  // namespace detail

inline void write(const std::string& path, const ComplexTensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  detail::put<std::uint32_t>(os, kVersion);
  detail::put<std::uint32_t>(os, kDtypeF64);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(t.ndim()));
  for (std::size_t d : t.shape) detail::put<std::uint64_t>(os, d);
  os.write(reinterpret_cast<const char*>(t.real.data()),
           static_cast<std::streamsize>(t.real.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(t.imag.data()),
           static_cast<std::streamsize>(t.imag.size() * sizeof(double)));
  if (!os) throw IoError("write failed for '" + path + "'");
}

inline ComplexTensor read(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::size_t offset = 0;
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("malformed DOCT file '" + path + "': bad magic at byte offset 0");
  offset = 4;
  const auto version = detail::get<std::uint32_t>(is, path, offset, "version");
  if (version != kVersion)
    throw IoError("malformed DOCT file '" + path + "': unsupported version " +
                  std::to_string(version) + " at byte offset 4");
  const auto dtype = detail::get<std::uint32_t>(is, path, offset, "dtype");
  if (dtype != kDtypeF64)
    throw IoError("malformed DOCT file '" + path + "': unsupported dtype " +
                  std::to_string(dtype) + " at byte offset 8");
  const auto ndim = detail::get<std::uint32_t>(is, path, offset, "ndim");
  if (ndim == 0 || ndim > 8)
    throw IoError("malformed DOCT file '" + path + "': implausible ndim " +
                  std::to_string(ndim) + " at byte offset 12");
  Shape shape(ndim);
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const auto d = detail::get<std::uint64_t>(is, path, offset, "dim");
    if (d == 0)
      throw IoError("malformed DOCT file '" + path + "': zero dimension at byte offset " +
                    std::to_string(offset - 8));
    shape[i] = static_cast<std::size_t>(d);
  }
  ComplexTensor t = ComplexTensor::zeros(shape);
  is.read(reinterpret_cast<char*>(t.real.data()),
          static_cast<std::streamsize>(t.real.size() * sizeof(double)));
  if (!is)
    throw IoError("malformed DOCT file '" + path + "': truncated real plane at byte offset " +
                  std::to_string(offset));
  offset += t.real.size() * sizeof(double);
  is.read(reinterpret_cast<char*>(t.imag.data()),
          static_cast<std::streamsize>(t.imag.size() * sizeof(double)));
  if (!is)
    throw IoError("malformed DOCT file '" + path + "': truncated imag plane at byte offset " +
                  std::to_string(offset));
  return t;
}

}  // namespace doct

// 16-bit binary PGM (P5) export of a real magnitude image [1,H,W] or [H,W];
// values linearly mapped from [0, max] to [0, 65535], MSB first.
inline void write_pgm16(const std::string& path, const ComplexTensor& img) {
  std::size_t h, w;
  if (img.ndim() == 3 && img.dim(0) == 1) {
    h = img.dim(1);
    w = img.dim(2);
  } else if (img.ndim() == 2) {
    h = img.dim(0);
    w = img.dim(1);
  } else {
    throw IoError("write_pgm16 expects a [1,H,W] or [H,W] tensor, got " + shape_str(img.shape));
  }
  double mx = 0.0;
  for (double v : img.real) mx = std::max(mx, v);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "P5\n" << w << " " << h << "\n65535\n";
  for (double v : img.real) {
    double t = mx > 0.0 ? v / mx : 0.0;
    if (t < 0.0) t = 0.0;
    auto q = static_cast<std::uint16_t>(t * 65535.0 + 0.5);
    char bytes[2] = {static_cast<char>(q >> 8), static_cast<char>(q & 0xff)};
    os.write(bytes, 2);
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

}  // namespace octmri

#endif  // OCTMRI_IO_HPP_
