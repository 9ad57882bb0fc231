// chainmmi/array_io.hpp

// Copyright 2026  The chainmmi Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef CHAINMMI_ARRAY_IO_HPP_
#define CHAINMMI_ARRAY_IO_HPP_

// PCTN dense array container.  Layout, all little-endian:
//
//   char[4]  magic "PCTN"
//   u32      version (1)
//   u32      ndim (<= 4)
//   u64      dims[ndim]
//   f64      values[prod(dims)], row-major

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "chainmmi/common.hpp"

namespace chainmmi {

inline constexpr std::array<char, 4> kPctnMagic = {'P', 'C', 'T', 'N'};
inline constexpr std::uint32_t kPctnVersion = 1;
inline constexpr std::uint32_t kPctnMaxDims = 4;

struct DenseArray {
  std::vector<std::uint64_t> dims;
  std::vector<double> values;

  std::uint64_t NumElements() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  friend bool operator==(const DenseArray &, const DenseArray &) = default;
};

namespace detail {

template <typename T>
void PutLe(std::ostream &os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  os.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

template <typename T>
T GetLe(std::istream &is, const char *what) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char *>(bytes), sizeof(T));
  CHAINMMI_CHECK(is.gcount() == static_cast<std::streamsize>(sizeof(T)),
                 "PCTN: truncated file while reading ", what);
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

}  // namespace detail

inline void WriteArray(std::ostream &os, std::span<const std::uint64_t> dims,
                       std::span<const double> values) {
  CHAINMMI_CHECK(dims.size() <= kPctnMaxDims, "PCTN: ndim ", dims.size(),
                 " exceeds ", kPctnMaxDims);
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  CHAINMMI_CHECK(n == values.size(), "PCTN: dims describe ", n,
                 " values but ", values.size(), " were given");
  os.write(kPctnMagic.data(), 4);
  detail::PutLe<std::uint32_t>(os, kPctnVersion);
  detail::PutLe<std::uint32_t>(os, static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) detail::PutLe<std::uint64_t>(os, d);
  for (double v : values) detail::PutLe<double>(os, v);
  CHAINMMI_CHECK(os.good(), "PCTN: write failed");
}

inline DenseArray ReadArray(std::istream &is) {
  std::array<char, 4> magic{};
  is.read(magic.data(), 4);
  CHAINMMI_CHECK(is.gcount() == 4, "PCTN: truncated file while reading magic");
  CHAINMMI_CHECK(magic == kPctnMagic, "PCTN: bad magic '",
                 std::string(magic.data(), 4), "'");
  const auto version = detail::GetLe<std::uint32_t>(is, "version");
  CHAINMMI_CHECK(version == kPctnVersion, "PCTN: unsupported version ",
                 version);
  const auto ndim = detail::GetLe<std::uint32_t>(is, "ndim");
  CHAINMMI_CHECK(ndim <= kPctnMaxDims, "PCTN: ndim ", ndim, " exceeds ",
                 kPctnMaxDims);
  DenseArray a;
  for (std::uint32_t i = 0; i < ndim; ++i)
    a.dims.push_back(detail::GetLe<std::uint64_t>(is, "dims"));
  const std::uint64_t n = a.NumElements();
  CHAINMMI_CHECK(n < (std::uint64_t{1} << 40), "PCTN: implausible size ", n);
  a.values.resize(n);
  for (std::uint64_t i = 0; i < n; ++i)
    a.values[i] = detail::GetLe<double>(is, "payload");
  CHAINMMI_CHECK(is.peek() == std::char_traits<char>::eof(),
                 "PCTN: trailing bytes after payload");
  return a;
}

inline void WriteArray(const std::string &path,
                       std::span<const std::uint64_t> dims,
                       std::span<const double> values) {
  std::ofstream os(path, std::ios::binary);
  CHAINMMI_CHECK(os.is_open(), "cannot open ", path, " for writing");
  WriteArray(os, dims, values);
}

inline DenseArray ReadArray(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  CHAINMMI_CHECK(is.is_open(), "cannot open ", path, " for reading");
  try {
    return ReadArray(is);
  } catch (const ChainError &e) {
    throw ChainError(path + ": " + e.what());
  }
}

}  // namespace chainmmi

#endif  // CHAINMMI_ARRAY_IO_HPP_
