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
#include <string>
#include <vector>

#include "woqt/layout.hpp"
#include "woqt/tensor.hpp"

namespace woqt {

// Range ratios between one halving of the group size and the level above.
// range(X) = max|X|; a parent of range 0 gives ratio 1.
struct RangeLevel {
  int level = 0;
  std::size_t parent_size = 0;
  std::size_t group_size = 0;
  double min_ratio = 1.0;
  double max_ratio = 1.0;
  double mean_ratio = 1.0;
  std::size_t groups = 0;  // child groups examined, over all columns
};

// Halving ladder from per-column groups down to min_group. The first child
// size is the largest power of two <= rows/2; later levels halve. At most
// max_levels levels (0 = unlimited).
std::vector<RangeLevel> range_ladder(const Tensor& t, std::size_t min_group,
                                     std::size_t max_levels = 0);

enum class AdaptiveDecision { halve, stable };
std::string to_string(AdaptiveDecision d);

struct AdaptiveLevel {
  RangeLevel ratios;
  AdaptiveDecision decision = AdaptiveDecision::stable;
};

struct AdaptiveReport {
  std::vector<AdaptiveLevel> levels;
  std::size_t final_group = 0;
  double alpha = kDefaultAlpha;
  std::size_t min_group = kDefaultMinGroup;
  // True when the search stopped because the next halving would go below
  // min_group (or rows could not be halved at all).
  bool hit_floor = false;
};

struct AdaptiveResult {
  GroupLayout layout;
  AdaptiveReport report;
};

// Starts at per-column groups and keeps halving while some child group's
// range ratio to its parent is below alpha; stops once every ratio is
// >= alpha or the floor is reached. One group size for the whole matrix.
AdaptiveResult adapt_group_size(const Tensor& t, double alpha = kDefaultAlpha,
                                std::size_t min_group = kDefaultMinGroup);

}  // namespace woqt
