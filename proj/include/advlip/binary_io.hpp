// advlip/binary_io.hpp

// Copyright 2026 The advlip Authors
//
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

#ifndef ADVLIP_BINARY_IO_HPP_
#define ADVLIP_BINARY_IO_HPP_

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "advlip/error.hpp"

namespace advlip::binary {

// Little-endian encoders for fixed-width records.

template <typename U>
inline void WriteLe(std::ostream& os, U value) {
  static_assert(std::is_unsigned_v<U>);
  std::array<char, sizeof(U)> buf;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  os.write(buf.data(), buf.size());
}

template <typename U>
inline U ReadLe(std::istream& is, std::string_view what) {
  static_assert(std::is_unsigned_v<U>);
  std::array<unsigned char, sizeof(U)> buf;
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw DataError(DataError::Kind::kTruncated,
                    "truncated record while reading " + std::string(what));
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(buf[i]) << (8 * i);
  }
  return value;
}

inline void WriteF32(std::ostream& os, float value) {
  WriteLe<std::uint32_t>(os, std::bit_cast<std::uint32_t>(value));
}

inline float ReadF32(std::istream& is, std::string_view what) {
  return std::bit_cast<float>(ReadLe<std::uint32_t>(is, what));
}

inline float DecodeF32(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                       (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

inline void ExpectMagic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  is.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (is.gcount() != static_cast<std::streamsize>(magic.size()) || got != magic) {
    throw DataError(DataError::Kind::kBadMagic,
                    "bad magic: expected \"" + std::string(magic) + "\"");
  }
}

}  // namespace advlip::binary

#endif  // ADVLIP_BINARY_IO_HPP_
