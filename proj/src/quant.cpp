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

#include "woqt/quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "woqt/errors.hpp"
#include "woqt/half.hpp"
#include "woqt/parallel.hpp"

namespace woqt {
namespace {

constexpr int kGoldenIterations = 50;

void check_compatible(const Tensor& t, const GroupLayout& layout) {
  if (layout.rows() != t.rows() || layout.cols() != t.cols()) {
    throw ShapeError("layout " + layout.describe() + " for " + std::to_string(layout.rows()) +
                     "x" + std::to_string(layout.cols()) + " is incompatible with tensor '" +
                     t.name() + "' (" + std::to_string(t.rows()) + "x" +
                     std::to_string(t.cols()) + ")");
  }
}

float absmax_of(std::span<const float> x) {
  float m = 0.0f;
  for (const float v : x) m = std::max(m, std::fabs(v));
  return m;
}

float store_scale(double s, ScaleStorage storage) {
  const float f = static_cast<float>(s);
  if (storage == ScaleStorage::f32) return f;
  if (f > kHalfMax) {
    throw InvalidArgument("scale " + std::to_string(f) +
                          " exceeds the f16 range; use f32 scale storage");
  }
  return half_to_float(float_to_half_ceil(f));
}

std::int8_t clamp_code(double rounded, int lo, int hi) {
  return static_cast<std::int8_t>(std::clamp(rounded, static_cast<double>(lo),
                                             static_cast<double>(hi)));
}

// Linear codes for one group. With exact f32 scales the ratio A/s is taken
// as A * (2^b - 1) / (2 * absmax), which is exact whenever A/s is exactly
// representable (ties such as +-7.5 at b=4 land where they should).
void encode_linear_group(std::span<const float> x, float absmax, float scale, int bits,
                         ScaleStorage storage, std::int8_t* out) {
  const int lo = -(1 << (bits - 1));
  const int hi = (1 << (bits - 1)) - 1;
  if (scale == 0.0f) {
    std::fill(out, out + x.size(), std::int8_t{0});
    return;
  }
  if (storage == ScaleStorage::f32) {
    const double levels = static_cast<double>((1 << bits) - 1);
    const double denom = 2.0 * static_cast<double>(absmax);
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = clamp_code(std::round(static_cast<double>(x[i]) * levels / denom), lo, hi);
    }
  } else {
    const double s = scale;
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = clamp_code(std::round(static_cast<double>(x[i]) / s), lo, hi);
    }
  }
}

std::int8_t encode_log_value(float x, double scale, int bits) {
  if (scale == 0.0) return 0;
  const int mag = -log_exponent(std::fabs(static_cast<double>(x)) / scale, bits);
  return static_cast<std::int8_t>(x < 0.0f ? mag - (1 << (bits - 1)) : mag);
}

double log_group_sse(std::span<const float> x, double scale, int bits) {
  double sse = 0.0;
  for (const float v : x) {
    const std::int8_t code = encode_log_value(v, scale, bits);
    const double d = static_cast<double>(v) -
                     static_cast<double>(code_value(code, Mapping::log, bits)) * scale;
    sse += d * d;
  }
  return sse;
}

// Golden-section search for the scale minimizing group MSE over
// [absmax/4, 2*absmax], 50 iterations.
double mse_optimal_log_scale(std::span<const float> x, float absmax, int bits) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = absmax / 4.0;
  double b = 2.0 * absmax;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = log_group_sse(x, c, bits);
  double fd = log_group_sse(x, d, bits);
  for (int it = 0; it < kGoldenIterations; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = log_group_sse(x, c, bits);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = log_group_sse(x, d, bits);
    }
  }
  // The objective is piecewise smooth, so the bracket can settle on a local
  // minimum; never do worse than the absmax scale.
  const double best = 0.5 * (a + b);
  return log_group_sse(x, best, bits) <= log_group_sse(x, absmax, bits) ? best : absmax;
}

float log_scale_for_group(std::span<const float> x, float absmax, int bits, LogScaleMode mode,
                          ScaleStorage storage) {
  if (absmax == 0.0f) return 0.0f;
  const double s =
      mode == LogScaleMode::absmax ? absmax : mse_optimal_log_scale(x, absmax, bits);
  return store_scale(s, storage);
}

PackedQuantTensor quantize_impl(const Tensor& t, const QuantScheme& scheme,
                                const GroupLayout& layout, unsigned threads) {
  check_compatible(t, layout);
  t.validate_finite();
  const int bits = scheme.bits();
  const std::size_t rows = t.rows();
  const std::size_t cols = t.cols();
  const std::size_t col_bytes = packed_column_bytes(rows, bits);
  const std::vector<float> cm = to_column_major(t);

  std::vector<std::uint8_t> codes(col_bytes * cols);
  std::vector<float> scales(layout.num_scales(), 0.0f);

  const bool per_tensor = layout.kind() == LayoutKind::per_tensor;
  const float tensor_absmax = per_tensor ? absmax_of(cm) : 0.0f;
  if (per_tensor) {
    scales[0] = scheme.mapping() == Mapping::linear
                    ? (tensor_absmax == 0.0f
                           ? 0.0f
                           : store_scale(2.0 * tensor_absmax / ((1 << bits) - 1),
                                         scheme.scale_storage()))
                    : log_scale_for_group(cm, tensor_absmax, bits, scheme.log_mode(),
                                          scheme.scale_storage());
  }

  parallel_for(cols, threads, [&](std::size_t j0, std::size_t j1) {
    std::vector<std::int8_t> column(rows);
    for (std::size_t j = j0; j < j1; ++j) {
      const std::span<const float> col(cm.data() + j * rows, rows);
      for (std::size_t g = 0; g < layout.groups_per_column(); ++g) {
        const std::size_t b = layout.group_begin(g);
        const std::size_t e = layout.group_end(g);
        const std::span<const float> x = col.subspan(b, e - b);
        const float absmax = per_tensor ? tensor_absmax : absmax_of(x);
        float scale;
        if (per_tensor) {
          scale = scales[0];
        } else if (scheme.mapping() == Mapping::linear) {
          scale = absmax == 0.0f ? 0.0f
                                 : store_scale(2.0 * absmax / ((1 << bits) - 1),
                                               scheme.scale_storage());
          scales[layout.scale_index(g, j)] = scale;
        } else {
          scale = log_scale_for_group(x, absmax, bits, scheme.log_mode(), scheme.scale_storage());
          scales[layout.scale_index(g, j)] = scale;
        }
        if (scheme.mapping() == Mapping::linear) {
          encode_linear_group(x, absmax, scale, bits, scheme.scale_storage(), column.data() + b);
        } else {
          for (std::size_t i = 0; i < x.size(); ++i) {
            column[b + i] = encode_log_value(x[i], scale, bits);
          }
        }
      }
      pack_column(column, bits,
                  std::span<std::uint8_t>(codes).subspan(j * col_bytes, col_bytes));
    }
  });

  return PackedQuantTensor(t.name(), scheme, layout, std::move(codes), std::move(scales),
                           t.tags());
}

}  // namespace

PackedQuantTensor::PackedQuantTensor(std::string name, QuantScheme scheme, GroupLayout layout,
                                     std::vector<std::uint8_t> codes, std::vector<float> scales,
                                     TagSet tags)
    : name_(std::move(name)),
      scheme_(scheme),
      layout_(layout),
      codes_(std::move(codes)),
      scales_(std::move(scales)),
      tags_(std::move(tags)) {
  const std::size_t expected = packed_column_bytes(layout_.rows(), scheme_.bits()) * layout_.cols();
  if (codes_.size() != expected) {
    throw CorruptionError("packed tensor '" + name_ + "': code stream has " +
                          std::to_string(codes_.size()) + " bytes, expected " +
                          std::to_string(expected));
  }
  if (scales_.size() != layout_.num_scales()) {
    throw CorruptionError("packed tensor '" + name_ + "': " + std::to_string(scales_.size()) +
                          " scales, expected " + std::to_string(layout_.num_scales()));
  }
  for (const float s : scales_) {
    if (!std::isfinite(s) || s < 0.0f) {
      throw ValidationError("packed tensor '" + name_ + "' has an invalid scale " +
                            std::to_string(s));
    }
    if (scheme_.scale_storage() == ScaleStorage::f16 && half_to_float(float_to_half(s)) != s) {
      throw ValidationError("packed tensor '" + name_ + "' declares f16 scales but " +
                            std::to_string(s) + " is not a half value");
    }
  }
}

PackedQuantTensor PackedQuantTensor::renamed(std::string name) const {
  PackedQuantTensor out = *this;
  out.name_ = std::move(name);
  return out;
}

PackedQuantTensor PackedQuantTensor::retagged(TagSet tags) const {
  PackedQuantTensor out = *this;
  out.tags_ = std::move(tags);
  return out;
}

bool operator==(const PackedQuantTensor& a, const PackedQuantTensor& b) {
  return a.name_ == b.name_ && a.scheme_ == b.scheme_ && a.layout_ == b.layout_ &&
         a.codes_ == b.codes_ && a.tags_ == b.tags_ && a.scales_.size() == b.scales_.size() &&
         std::memcmp(a.scales_.data(), b.scales_.data(), a.scales_.size() * sizeof(float)) == 0;
}

float linear_scale(float absmax, int bits) {
  check_bits(bits);
  return absmax == 0.0f ? 0.0f : static_cast<float>(2.0 * absmax / ((1 << bits) - 1));
}

int log_exponent(double ratio, int bits) {
  const int lo = 1 - (1 << (bits - 1));
  const double t = std::clamp(ratio, std::ldexp(1.0, lo), 1.0);
  int q = static_cast<int>(std::ceil(std::log2(t / 1.5)));
  q = std::clamp(q, lo, 0);
  // Settle rounding of log2 against the exact test 1.5 * 2^q >= t.
  while (q > lo && 1.5 * std::ldexp(1.0, q - 1) >= t) --q;
  while (q < 0 && 1.5 * std::ldexp(1.0, q) < t) ++q;
  return q;
}

float code_value(std::int32_t code, Mapping mapping, int bits) {
  if (mapping == Mapping::linear) return static_cast<float>(code);
  if (code < 0) return -std::ldexp(1.0f, -(code + (1 << (bits - 1))));
  return std::ldexp(1.0f, -code);
}

PackedQuantTensor quantize_linear(const Tensor& t, int bits, const GroupLayout& layout,
                                  const QuantOptions& opts) {
  return quantize_impl(t, QuantScheme::linear(bits, opts.scale_storage), layout, opts.threads);
}

PackedQuantTensor quantize_log(const Tensor& t, int bits, const GroupLayout& layout,
                               LogScaleMode mode, const QuantOptions& opts) {
  return quantize_impl(t, QuantScheme::log(bits, mode, opts.scale_storage), layout,
                       opts.threads);
}

PackedQuantTensor quantize(const Tensor& t, const QuantScheme& scheme, const GroupLayout& layout,
                           unsigned threads) {
  return quantize_impl(t, scheme, layout, threads);
}

Tensor dequantize(const PackedQuantTensor& q, unsigned threads) {
  const std::size_t rows = q.rows();
  const std::size_t cols = q.cols();
  const int bits = q.bits();
  const Mapping mapping = q.scheme().mapping();
  const GroupLayout& layout = q.layout();
  if (q.codes().size() != q.column_bytes() * cols) {
    throw CorruptionError("packed tensor '" + q.name() + "': code stream length mismatch");
  }
  std::vector<float> out(rows * cols);
  parallel_for(cols, threads, [&](std::size_t j0, std::size_t j1) {
    std::vector<std::int8_t> codes(rows);
    for (std::size_t j = j0; j < j1; ++j) {
      unpack_column(q.column_codes(j), 0, rows, bits, codes);
      for (std::size_t g = 0; g < layout.groups_per_column(); ++g) {
        const float s = q.scale(g, j);
        for (std::size_t r = layout.group_begin(g); r < layout.group_end(g); ++r) {
          out[r * cols + j] = code_value(codes[r], mapping, bits) * s;
        }
      }
    }
  });
  return Tensor(q.name(), rows, cols, std::move(out), q.tags());
}

PackedQuantTensor requantize_with_scales(const Tensor& t, const PackedQuantTensor& ref) {
  if (ref.scheme().mapping() != Mapping::linear) {
    throw InvalidArgument("requantize_with_scales supports the linear mapping only");
  }
  check_compatible(t, ref.layout());
  const int bits = ref.bits();
  const GroupLayout& layout = ref.layout();
  const std::size_t rows = t.rows();
  const std::size_t col_bytes = ref.column_bytes();
  std::vector<std::uint8_t> codes(col_bytes * t.cols());
  std::vector<std::int8_t> column(rows);
  const std::vector<float> cm = to_column_major(t);
  for (std::size_t j = 0; j < t.cols(); ++j) {
    for (std::size_t g = 0; g < layout.groups_per_column(); ++g) {
      const double s = ref.scale(g, j);
      for (std::size_t r = layout.group_begin(g); r < layout.group_end(g); ++r) {
        column[r] = s == 0.0 ? std::int8_t{0}
                             : clamp_code(std::round(cm[j * rows + r] / s),
                                          ref.scheme().clamp_lo(), ref.scheme().clamp_hi());
      }
    }
    pack_column(column, bits, std::span<std::uint8_t>(codes).subspan(j * col_bytes, col_bytes));
  }
  return PackedQuantTensor(t.name(), ref.scheme(), layout, std::move(codes),
                           std::vector<float>(ref.scales().begin(), ref.scales().end()), t.tags());
}

CodeMatrix codes_of(const PackedQuantTensor& q) {
  return unpack_codes(q.codes(), q.rows(), q.cols(), q.bits());
}

}  // namespace woqt
