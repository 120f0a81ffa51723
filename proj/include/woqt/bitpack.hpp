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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace woqt {

// Signed integer codes, row-major rows x cols.
struct CodeMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> values;

  std::int32_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  friend bool operator==(const CodeMatrix&, const CodeMatrix&) = default;
};

// Bytes occupied by one packed column: ceil(rows * bits / 8).
constexpr std::size_t packed_column_bytes(std::size_t rows, int bits) {
  return (rows * static_cast<std::size_t>(bits) + 7) / 8;
}

// Little-endian bit stream, column after column. Code i of a column fills
// bits [i*b, (i+1)*b) of that column's bytes (bit n is bit n%8 of byte n/8)
// as a b-bit two's complement field. Columns are padded with zero bits to a
// byte boundary.
std::vector<std::uint8_t> pack_codes(const CodeMatrix& codes, int bits);
CodeMatrix unpack_codes(std::span<const std::uint8_t> stream, std::size_t rows,
                        std::size_t cols, int bits);

// Packs one column of codes into dst (packed_column_bytes(codes.size()) bytes).
// Codes are assumed in range.
void pack_column(std::span<const std::int8_t> codes, int bits, std::span<std::uint8_t> dst);

// Decodes codes [begin, end) of one packed column into out.
void unpack_column(std::span<const std::uint8_t> column, std::size_t begin, std::size_t end,
                   int bits, std::span<std::int8_t> out);

}  // namespace woqt
