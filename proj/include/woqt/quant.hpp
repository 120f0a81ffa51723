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
#include <string>
#include <vector>

#include "woqt/bitpack.hpp"
#include "woqt/layout.hpp"
#include "woqt/scheme.hpp"
#include "woqt/tensor.hpp"

namespace woqt {

// Bit-packed codes plus the scale matrix and the scheme/layout that produced
// them. Self-describing: dequantize() needs nothing else.
//
// Linear codes are signed b-bit integers. Log codes put the sign in the top
// bit and the negated exponent (0 .. 2^(b-1)-1) in the low b-1 bits; read as
// a two's complement field, a negative code means a negative value.
class PackedQuantTensor {
 public:
  PackedQuantTensor() = default;
  // Throws CorruptionError if the code stream or scale count does not match
  // the layout, ValidationError for negative or non-finite scales.
  PackedQuantTensor(std::string name, QuantScheme scheme, GroupLayout layout,
                    std::vector<std::uint8_t> codes, std::vector<float> scales,
                    TagSet tags = {});

  const std::string& name() const { return name_; }
  std::size_t rows() const { return layout_.rows(); }
  std::size_t cols() const { return layout_.cols(); }
  const QuantScheme& scheme() const { return scheme_; }
  const GroupLayout& layout() const { return layout_; }
  int bits() const { return scheme_.bits(); }
  std::span<const std::uint8_t> codes() const { return codes_; }
  std::span<const float> scales() const { return scales_; }
  const TagSet& tags() const { return tags_; }

  std::size_t column_bytes() const { return packed_column_bytes(rows(), bits()); }
  std::span<const std::uint8_t> column_codes(std::size_t j) const {
    return std::span<const std::uint8_t>(codes_).subspan(j * column_bytes(), column_bytes());
  }
  float scale(std::size_t g, std::size_t j) const { return scales_[layout_.scale_index(g, j)]; }

  PackedQuantTensor renamed(std::string name) const;
  PackedQuantTensor retagged(TagSet tags) const;

  friend bool operator==(const PackedQuantTensor& a, const PackedQuantTensor& b);

 private:
  std::string name_;
  QuantScheme scheme_ = QuantScheme::linear(8);
  GroupLayout layout_ = GroupLayout::per_column(1, 1);
  std::vector<std::uint8_t> codes_;
  std::vector<float> scales_;
  TagSet tags_;
};

struct QuantOptions {
  ScaleStorage scale_storage = ScaleStorage::f32;
  unsigned threads = 1;
};

// Absmax linear quantization: s = 2 * max|A_g| / (2^b - 1) per group and
// q = clamp(round_half_away(A / s), -2^(b-1), 2^(b-1) - 1). All-zero groups
// get s = 0 and zero codes.
PackedQuantTensor quantize_linear(const Tensor& t, int bits, const GroupLayout& layout,
                                  const QuantOptions& opts = {});

// Sign plus power-of-two magnitude: T = clip(|A|/s, 2^(1-2^(b-1)), 1),
// Q = ceil(log2(2T/3)), A' = sign * s * 2^Q.
PackedQuantTensor quantize_log(const Tensor& t, int bits, const GroupLayout& layout,
                               LogScaleMode mode = LogScaleMode::absmax,
                               const QuantOptions& opts = {});

// Dispatches on scheme.mapping(); the scheme's scale storage overrides opts.
PackedQuantTensor quantize(const Tensor& t, const QuantScheme& scheme,
                           const GroupLayout& layout, unsigned threads = 1);

Tensor dequantize(const PackedQuantTensor& q, unsigned threads = 1);

// Re-encodes t with the scales already stored in ref (linear mapping only).
// Used to check that codes are a fixed point of dequantize/quantize.
PackedQuantTensor requantize_with_scales(const Tensor& t, const PackedQuantTensor& ref);

// Row-major codes of q, unpacked.
CodeMatrix codes_of(const PackedQuantTensor& q);

// Exact float value a single code stands for before scaling: the integer
// itself for linear, +-2^Q for log.
float code_value(std::int32_t code, Mapping mapping, int bits);

// Log exponent Q in [min_exponent, 0] for |A|/s = ratio (>= 0), computed
// exactly as the smallest Q with 1.5 * 2^Q >= clip(ratio).
int log_exponent(double ratio, int bits);

// Linear scale for a group with the given absmax.
float linear_scale(float absmax, int bits);

}  // namespace woqt
