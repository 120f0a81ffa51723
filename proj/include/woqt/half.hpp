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

#include <cstdint>

namespace woqt {

// IEEE 754 binary16 <-> binary32 conversion. Scales are stored as halves on
// disk and widened on load.
float half_to_float(std::uint16_t h);

// Round to nearest, ties to even. Values beyond the half range become Inf.
std::uint16_t float_to_half(float f);

// Smallest half whose value is >= f, for finite non-negative f. Returns the
// Inf pattern when f exceeds the largest finite half.
std::uint16_t float_to_half_ceil(float f);

inline constexpr float kHalfMax = 65504.0f;

}  // namespace woqt
