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

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "woqt/adaptive.hpp"
#include "woqt/errors.hpp"
#include "woqt/quant.hpp"
#include "woqt/synth.hpp"

using namespace woqt;

namespace {

// Brute force over power-of-two row counts: every range at every level,
// recomputed from scratch.
std::size_t oracle_group(const Tensor& t, double alpha, std::size_t min_group) {
  const std::size_t rows = t.rows();
  auto range = [&](std::size_t j, std::size_t b, std::size_t e) {
    double m = 0;
    for (std::size_t r = b; r < e; ++r) m = std::max(m, std::fabs(static_cast<double>(t.at(r, j))));
    return m;
  };
  std::size_t g = rows;
  while (g / 2 >= min_group) {
    const std::size_t child = g / 2;
    double lowest = 1.0;
    for (std::size_t j = 0; j < t.cols(); ++j) {
      for (std::size_t b = 0; b < rows; b += child) {
        const std::size_t pb = b / g * g;
        const double parent = range(j, pb, pb + g);
        const double ratio = parent == 0 ? 1.0 : range(j, b, b + child) / parent;
        lowest = std::min(lowest, ratio);
      }
    }
    if (lowest >= alpha) break;
    g = child;
  }
  return g;
}

Tensor planted(std::uint64_t seed) {
  Tensor t = synth_weights(128, 8, Gaussian{0.0, 0.01}, seed);
  std::vector<float> v(t.data().begin(), t.data().end());
  v[37 * 8 + 5] = 1.0f;
  return Tensor("planted", 128, 8, std::move(v));
}

}  // namespace

TEST_CASE("Gaussian 128x8 at alpha 0.5 stays per-column") {
  const Tensor t = synth_weights(128, 8, Gaussian{0.0, 1.0}, 7);
  const auto r = adapt_group_size(t, 0.5);
  CHECK(r.layout.group_size() == 128);
  CHECK(r.report.final_group == oracle_group(t, 0.5, 16));
  REQUIRE(r.report.levels.size() == 1);
  CHECK(r.report.levels[0].decision == AdaptiveDecision::stable);
  CHECK(r.report.levels[0].ratios.min_ratio >= 0.5);
}

TEST_CASE("planted outlier drives halving to the floor") {
  const Tensor t = planted(3);
  const auto r = adapt_group_size(t, 0.5);
  CHECK(r.layout.group_size() == 16);
  CHECK(oracle_group(t, 0.5, 16) == 16);
  CHECK(r.report.hit_floor);
  CHECK(r.report.levels.size() == 3);
  for (const auto& lvl : r.report.levels) {
    CHECK(lvl.decision == AdaptiveDecision::halve);
    CHECK(lvl.ratios.min_ratio < 0.1);
  }
}

TEST_CASE("zero matrix stays per-column") {
  const auto r = adapt_group_size(Tensor::zeros("z", 64, 3), 0.5);
  CHECK(r.layout.group_size() == 64);
  CHECK(r.report.levels.at(0).ratios.min_ratio == 1.0);
}

TEST_CASE("matches the exhaustive oracle across seeds, shapes and alpha") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t rows = std::size_t{16} << (trial % 5);
    const Distribution d = trial % 2 ? Distribution{GaussianWithOutliers{0.0, 1.0, 2, 6.0}}
                                     : Distribution{Gaussian{0.0, 1.0}};
    const Tensor t = synth_weights(rows, 4, d, rng());
    for (double alpha : {0.2, 0.5, 0.8, 0.95}) {
      const auto r = adapt_group_size(t, alpha, 16);
      REQUIRE(r.report.final_group == oracle_group(t, alpha, 16));
      REQUIRE(r.layout.group_size() == r.report.final_group);
    }
  }
}

TEST_CASE("report invariants: ratios in [0, 1], levels strictly halving") {
  const Tensor t = synth_weights(256, 6, GaussianWithOutliers{0.0, 1.0, 3, 20.0}, 11);
  const auto r = adapt_group_size(t, 0.9);
  std::size_t prev = 256;
  for (const auto& lvl : r.report.levels) {
    CHECK(lvl.ratios.parent_size == prev);
    CHECK(lvl.ratios.group_size * 2 == prev);
    CHECK(lvl.ratios.min_ratio >= 0.0);
    CHECK(lvl.ratios.max_ratio <= 1.0);
    CHECK(lvl.ratios.min_ratio <= lvl.ratios.mean_ratio);
    CHECK(lvl.ratios.mean_ratio <= lvl.ratios.max_ratio);
    prev = lvl.ratios.group_size;
  }
  const std::size_t g = r.layout.group_size();
  CHECK(std::has_single_bit(g));
  CHECK(g >= 16);
  CHECK(256 % g == 0);
}

TEST_CASE("resolved group size is monotone in alpha") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor t = synth_weights(512, 4, GaussianWithOutliers{0.0, 1.0, 1, 3.0}, seed);
    std::size_t prev = 1u << 30;
    for (double alpha : {0.05, 0.2, 0.5, 0.8, 0.95}) {
      const std::size_t g = adapt_group_size(t, alpha).layout.group_size();
      REQUIRE(g <= prev);
      prev = g;
    }
  }
}

TEST_CASE("a 10x outlier never coarsens the resolved size") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Tensor base = synth_weights(256, 4, Gaussian{0.0, 1.0}, seed);
    float absmax = 0;
    for (std::size_t r = 0; r < 256; ++r) absmax = std::max(absmax, std::fabs(base.at(r, 2)));
    std::vector<float> v(base.data().begin(), base.data().end());
    v[(seed * 23 % 256) * 4 + 2] = 10.0f * absmax;
    const Tensor spiked("s", 256, 4, std::move(v));
    for (double alpha : {0.2, 0.5, 0.8, 0.95}) {
      const std::size_t before = adapt_group_size(base, alpha).layout.group_size();
      const std::size_t after = adapt_group_size(spiked, alpha).layout.group_size();
      CHECK((after < before || after == 16));
    }
  }
}

TEST_CASE("every accepted halving shrinks some scale below alpha times its parent") {
  const Tensor t = planted(9);
  for (double alpha : {0.2, 0.5, 0.8}) {
    const auto r = adapt_group_size(t, alpha);
    for (const auto& lvl : r.report.levels) {
      if (lvl.decision != AdaptiveDecision::halve) continue;
      const std::size_t pg = lvl.ratios.parent_size, cg = lvl.ratios.group_size;
      const auto parent = quantize_linear(t, 4, pg == 128 ? GroupLayout::per_column(128, 8)
                                                          : GroupLayout::fixed_group(128, 8, pg));
      const auto child = quantize_linear(t, 4, GroupLayout::fixed_group(128, 8, cg));
      bool witness = false;
      for (std::size_t j = 0; j < 8; ++j) {
        for (std::size_t c = 0; c < 128 / cg; ++c) {
          witness |= child.scale(c, j) < alpha * parent.scale(c * cg / pg, j);
        }
      }
      CHECK(witness);
    }
  }
}

TEST_CASE("deterministic and validated") {
  const Tensor t = planted(1);
  const auto a = adapt_group_size(t, 0.3, 32);
  const auto b = adapt_group_size(t, 0.3, 32);
  CHECK(a.layout == b.layout);
  CHECK(a.layout.group_size() == 32);
  CHECK_THROWS_AS(adapt_group_size(t, 0.0), InvalidArgument);
  CHECK_THROWS_AS(adapt_group_size(t, 1.0), InvalidArgument);
  CHECK_THROWS_AS(adapt_group_size(t, 0.5, 12), InvalidArgument);
}
