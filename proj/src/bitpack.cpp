/* Copyright 2026 The woqt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "woqt/bitpack.hpp"

#include <cstring>
#include <string>

#include "woqt/errors.hpp"

namespace woqt {
namespace {

inline std::int8_t sign_extend(std::uint32_t v, int bits) {
  const int shift = 32 - bits;
  return static_cast<std::int8_t>(static_cast<std::int32_t>(v << shift) >> shift);
}

void unpack_generic(const std::uint8_t* src, std::size_t nbytes, std::size_t begin,
                    std::size_t end, int bits, std::int8_t* out) {
  const std::uint32_t mask = (1u << bits) - 1u;
  for (std::size_t i = begin; i < end; ++i) {
    const std::size_t bit = i * static_cast<std::size_t>(bits);
    const std::size_t byte = bit >> 3;
    std::uint32_t window = src[byte];
    if (byte + 1 < nbytes) window |= static_cast<std::uint32_t>(src[byte + 1]) << 8;
    *out++ = sign_extend((window >> (bit & 7)) & mask, bits);
  }
}

}  // namespace

void pack_column(std::span<const std::int8_t> codes, int bits, std::span<std::uint8_t> dst) {
  std::memset(dst.data(), 0, dst.size());
  if (bits == 8) {
    std::memcpy(dst.data(), codes.data(), codes.size());
    return;
  }
  const std::uint32_t mask = (1u << bits) - 1u;
  std::uint64_t acc = 0;
  int filled = 0;
  std::size_t o = 0;
  for (const std::int8_t c : codes) {
    acc |= static_cast<std::uint64_t>(static_cast<std::uint32_t>(c) & mask) << filled;
    filled += bits;
    while (filled >= 8) {
      dst[o++] = static_cast<std::uint8_t>(acc & 0xFFu);
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) dst[o] = static_cast<std::uint8_t>(acc & 0xFFu);
}

void unpack_column(std::span<const std::uint8_t> column, std::size_t begin, std::size_t end,
                   int bits, std::span<std::int8_t> out) {
  const std::uint8_t* src = column.data();
  std::int8_t* dst = out.data();
  if (bits == 8) {
    std::memcpy(dst, src + begin, end - begin);
    return;
  }
  if (bits == 4 && begin % 2 == 0) {
    const std::size_t pairs = (end - begin) / 2;
    const std::uint8_t* p = src + begin / 2;
    for (std::size_t i = 0; i < pairs; ++i) {
      const std::uint8_t byte = p[i];
      dst[2 * i] = static_cast<std::int8_t>(static_cast<std::int8_t>(byte << 4) >> 4);
      dst[2 * i + 1] = static_cast<std::int8_t>(static_cast<std::int8_t>(byte) >> 4);
    }
    if ((end - begin) % 2 != 0) {
      dst[2 * pairs] = static_cast<std::int8_t>(static_cast<std::int8_t>(p[pairs] << 4) >> 4);
    }
    return;
  }
  unpack_generic(src, column.size(), begin, end, bits, dst);
}

std::vector<std::uint8_t> pack_codes(const CodeMatrix& codes, int bits) {
  if (bits < 2 || bits > 8) throw InvalidArgument("bits must be in [2, 8]");
  if (codes.values.size() != codes.rows * codes.cols) {
    throw ShapeError("code matrix size does not match rows*cols");
  }
  const std::int32_t lo = -(1 << (bits - 1));
  const std::int32_t hi = (1 << (bits - 1)) - 1;
  const std::size_t col_bytes = packed_column_bytes(codes.rows, bits);
  std::vector<std::uint8_t> stream(col_bytes * codes.cols);
  std::vector<std::int8_t> column(codes.rows);
  for (std::size_t j = 0; j < codes.cols; ++j) {
    for (std::size_t r = 0; r < codes.rows; ++r) {
      const std::int32_t v = codes.at(r, j);
      if (v < lo || v > hi) {
        throw InvalidArgument("code " + std::to_string(v) + " at (" + std::to_string(r) + ", " +
                              std::to_string(j) + ") is outside the signed " +
                              std::to_string(bits) + "-bit range");
      }
      column[r] = static_cast<std::int8_t>(v);
    }
    pack_column(column, bits, std::span<std::uint8_t>(stream).subspan(j * col_bytes, col_bytes));
  }
  return stream;
}

CodeMatrix unpack_codes(std::span<const std::uint8_t> stream, std::size_t rows,
                        std::size_t cols, int bits) {
  if (bits < 2 || bits > 8) throw InvalidArgument("bits must be in [2, 8]");
  const std::size_t col_bytes = packed_column_bytes(rows, bits);
  if (stream.size() != col_bytes * cols) {
    throw CorruptionError("packed stream has " + std::to_string(stream.size()) +
                          " bytes, expected " + std::to_string(col_bytes * cols));
  }
  CodeMatrix m{rows, cols, std::vector<std::int32_t>(rows * cols)};
  std::vector<std::int8_t> column(rows);
  for (std::size_t j = 0; j < cols; ++j) {
    unpack_column(stream.subspan(j * col_bytes, col_bytes), 0, rows, bits, column);
    for (std::size_t r = 0; r < rows; ++r) m.values[r * cols + j] = column[r];
  }
  return m;
}

}  // namespace woqt
