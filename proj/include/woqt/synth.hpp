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
#include <variant>

#include "woqt/tensor.hpp"

namespace woqt {

struct Gaussian {
  double mean = 0.0;
  double std = 1.0;
};

// Gaussian base plus exactly outlier_count entries of +-outlier_magnitude at
// distinct seeded positions.
struct GaussianWithOutliers {
  double mean = 0.0;
  double std = 1.0;
  std::size_t outlier_count = 1;
  double outlier_magnitude = 1.0;
};

// Narrow Gaussian core with a rare shifted tail on the side of the target's
// sign, tuned so the sample skewness lands near skew_target. scale multiplies
// the output.
struct Skewed {
  double skew_target = 0.0;
  double scale = 1.0;
};

using Distribution = std::variant<Gaussian, GaussianWithOutliers, Skewed>;

// Deterministic for a fixed (rows, cols, distribution, seed).
Tensor synth_weights(std::size_t rows, std::size_t cols, const Distribution& dist,
                     std::uint64_t seed, std::string name = "synthetic");

// Sample skewness the rejection loop in Skewed accepts, in absolute units.
inline constexpr double kSkewTolerance = 0.1;

}  // namespace woqt
