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
#include <string>

namespace woqt {

enum class Mapping : std::uint8_t { linear = 0, log = 1 };
enum class LogScaleMode : std::uint8_t { absmax = 0, mse_optimal = 1 };
// On-disk width of the scale matrix. f32 keeps scales exact; f16 scales are
// rounded up to a half value at quantization time so storage is lossless.
enum class ScaleStorage : std::uint8_t { f16 = 1, f32 = 2 };

inline constexpr int kMinBits = 2;
inline constexpr int kMaxBits = 8;

std::string to_string(Mapping m);
std::string to_string(LogScaleMode m);
std::string to_string(ScaleStorage s);

// Symmetric quantization configuration. Rounding is always half away from
// zero; clamp bounds are derived from the bit width, never stored.
class QuantScheme {
 public:
  static QuantScheme linear(int bits, ScaleStorage storage = ScaleStorage::f32);
  static QuantScheme log(int bits, LogScaleMode mode = LogScaleMode::absmax,
                         ScaleStorage storage = ScaleStorage::f32);

  int bits() const { return bits_; }
  Mapping mapping() const { return mapping_; }
  LogScaleMode log_mode() const { return log_mode_; }
  ScaleStorage scale_storage() const { return storage_; }
  std::size_t scale_bytes() const { return storage_ == ScaleStorage::f16 ? 2 : 4; }

  int clamp_lo() const { return -(1 << (bits_ - 1)); }
  int clamp_hi() const { return (1 << (bits_ - 1)) - 1; }
  // Smallest log exponent, 1 - 2^(b-1).
  int min_exponent() const { return 1 - (1 << (bits_ - 1)); }

  std::string describe() const;

  friend bool operator==(const QuantScheme&, const QuantScheme&) = default;

 private:
  QuantScheme(int bits, Mapping mapping, LogScaleMode mode, ScaleStorage storage);

  int bits_ = 8;
  Mapping mapping_ = Mapping::linear;
  LogScaleMode log_mode_ = LogScaleMode::absmax;
  ScaleStorage storage_ = ScaleStorage::f32;
};

// Throws InvalidArgument unless kMinBits <= bits <= kMaxBits.
void check_bits(int bits);

}  // namespace woqt
