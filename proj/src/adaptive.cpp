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

#include "woqt/adaptive.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "woqt/errors.hpp"

namespace woqt {
namespace {

std::size_t group_count(std::size_t rows, std::size_t size) {
  return std::max<std::size_t>(1, rows / size);
}

// Group ranges for every column at one size, laid out [column][group].
std::vector<float> group_ranges(const std::vector<float>& cm, std::size_t rows, std::size_t cols,
                                std::size_t size) {
  const std::size_t n = group_count(rows, size);
  std::vector<float> out(n * cols, 0.0f);
  for (std::size_t j = 0; j < cols; ++j) {
    const float* col = cm.data() + j * rows;
    for (std::size_t g = 0; g < n; ++g) {
      const std::size_t b = g * size;
      const std::size_t e = g + 1 == n ? rows : b + size;
      float m = 0.0f;
      for (std::size_t r = b; r < e; ++r) m = std::max(m, std::fabs(col[r]));
      out[j * n + g] = m;
    }
  }
  return out;
}

}  // namespace

std::string to_string(AdaptiveDecision d) {
  switch (d) {
    case AdaptiveDecision::halve:
      return "halve";
    case AdaptiveDecision::stable:
      return "stable";
  }
  return "?";
}

std::vector<RangeLevel> range_ladder(const Tensor& t, std::size_t min_group,
                                     std::size_t max_levels) {
  if (min_group == 0 || !std::has_single_bit(min_group)) {
    throw InvalidArgument("min_group must be a power of two");
  }
  const std::size_t rows = t.rows();
  const std::size_t cols = t.cols();
  const std::vector<float> cm = to_column_major(t);

  std::vector<RangeLevel> ladder;
  std::size_t parent = rows;
  std::vector<float> parent_ranges = group_ranges(cm, rows, cols, parent);
  std::size_t child = rows >= 2 ? std::bit_floor(rows / 2) : 0;
  int level = 1;
  while (child >= min_group && child >= 1 && (max_levels == 0 || ladder.size() < max_levels)) {
    const std::vector<float> child_ranges = group_ranges(cm, rows, cols, child);
    const std::size_t nc = group_count(rows, child);
    const std::size_t np = group_count(rows, parent);
    RangeLevel rl;
    rl.level = level;
    rl.parent_size = parent;
    rl.group_size = child;
    rl.min_ratio = 1.0;
    rl.max_ratio = 0.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      for (std::size_t c = 0; c < nc; ++c) {
        const std::size_t p = std::min(c * child / parent, np - 1);
        const double pr = parent_ranges[j * np + p];
        const double ratio = pr == 0.0 ? 1.0 : child_ranges[j * nc + c] / pr;
        rl.min_ratio = std::min(rl.min_ratio, ratio);
        rl.max_ratio = std::max(rl.max_ratio, ratio);
        sum += ratio;
      }
    }
    rl.groups = nc * cols;
    rl.mean_ratio = sum / static_cast<double>(rl.groups);
    ladder.push_back(rl);
    parent_ranges = child_ranges;
    parent = child;
    child /= 2;
    ++level;
  }
  return ladder;
}

AdaptiveResult adapt_group_size(const Tensor& t, double alpha, std::size_t min_group) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw InvalidArgument("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  t.validate_finite();
  AdaptiveReport report;
  report.alpha = alpha;
  report.min_group = min_group;
  std::size_t resolved = t.rows();
  bool stopped = false;
  for (const RangeLevel& rl : range_ladder(t, min_group)) {
    if (rl.min_ratio < alpha) {
      report.levels.push_back({rl, AdaptiveDecision::halve});
      resolved = rl.group_size;
    } else {
      report.levels.push_back({rl, AdaptiveDecision::stable});
      stopped = true;
      break;
    }
  }
  report.hit_floor = !stopped;
  report.final_group = resolved;
  return {GroupLayout::adaptive(t.rows(), t.cols(), resolved, min_group, alpha), report};
}

}  // namespace woqt
