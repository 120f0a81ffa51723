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

#include "woqt/scheme.hpp"

#include "woqt/errors.hpp"

namespace woqt {

void check_bits(int bits) {
  if (bits < kMinBits || bits > kMaxBits) {
    throw InvalidArgument("bits must be in [" + std::to_string(kMinBits) + ", " +
                          std::to_string(kMaxBits) + "], got " + std::to_string(bits));
  }
}

QuantScheme::QuantScheme(int bits, Mapping mapping, LogScaleMode mode, ScaleStorage storage)
    : bits_(bits), mapping_(mapping), log_mode_(mode), storage_(storage) {
  check_bits(bits);
  if (storage != ScaleStorage::f16 && storage != ScaleStorage::f32) {
    throw InvalidArgument("unknown scale storage");
  }
}

QuantScheme QuantScheme::linear(int bits, ScaleStorage storage) {
  return QuantScheme(bits, Mapping::linear, LogScaleMode::absmax, storage);
}

QuantScheme QuantScheme::log(int bits, LogScaleMode mode, ScaleStorage storage) {
  return QuantScheme(bits, Mapping::log, mode, storage);
}

std::string QuantScheme::describe() const {
  std::string s = "int" + std::to_string(bits_) + " " + to_string(mapping_);
  if (mapping_ == Mapping::log) s += "/" + to_string(log_mode_);
  return s + " scales=" + to_string(storage_);
}

std::string to_string(Mapping m) { return m == Mapping::linear ? "linear" : "log"; }

std::string to_string(LogScaleMode m) {
  return m == LogScaleMode::absmax ? "absmax" : "mse_optimal";
}

std::string to_string(ScaleStorage s) { return s == ScaleStorage::f16 ? "f16" : "f32"; }

}  // namespace woqt
