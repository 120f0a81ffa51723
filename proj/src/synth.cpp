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

#include "woqt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_set>
#include <utility>
#include <vector>

#include "woqt/errors.hpp"

namespace woqt {
namespace {

constexpr int kMaxSkewAttempts = 64;
constexpr double kTailStd = 1.0;

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

void check_std(double std) {
  if (!(std > 0.0) || !std::isfinite(std)) {
    throw InvalidArgument("distribution std must be positive and finite");
  }
}

std::vector<float> gaussian(std::size_t n, double mean, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(mean, std);
  std::vector<float> out(n);
  for (float& v : out) v = static_cast<float>(dist(rng));
  return out;
}

// Two-component mixture (1-p) N(0, 1) + p N(mu, tail_std^2).
struct Mixture {
  double p;
  double mu;
};

double mixture_skew(const Mixture& m) {
  const double mean = m.p * m.mu;
  const double d1 = -mean;
  const double d2 = m.mu - mean;
  const double v2 = kTailStd * kTailStd;
  const double m2 = (1 - m.p) * (1.0 + d1 * d1) + m.p * (v2 + d2 * d2);
  const double m3 = (1 - m.p) * (d1 * d1 * d1 + 3 * d1) + m.p * (d2 * d2 * d2 + 3 * d2 * v2);
  return m3 / std::pow(m2, 1.5);
}

Mixture fit_mixture(double target) {
  const double goal = std::fabs(target);
  for (const double p : {0.05, 0.02, 0.01, 0.005, 0.002, 0.001}) {
    // Scan for the first mean offset whose skewness reaches the goal, then
    // bisect inside that bracket.
    double lo = 0.0;
    for (double hi = 0.25; hi <= 400.0; hi *= 1.25) {
      if (mixture_skew({p, hi}) >= goal) {
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (lo + hi);
          (mixture_skew({p, mid}) < goal ? lo : hi) = mid;
        }
        return {p, 0.5 * (lo + hi)};
      }
      lo = hi;
    }
  }
  throw InvalidArgument("skew target " + std::to_string(target) + " is out of reach");
}

double sample_skew(const std::vector<float>& x) {
  double mean = 0.0;
  for (const float v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double m2 = 0.0;
  double m3 = 0.0;
  for (const float v : x) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m3 /= static_cast<double>(x.size());
  return m2 == 0.0 ? 0.0 : m3 / std::pow(m2, 1.5);
}

std::vector<float> skewed(std::size_t n, const Skewed& s, std::uint64_t seed) {
  if (!std::isfinite(s.skew_target)) throw InvalidArgument("skew target must be finite");
  check_std(s.scale);
  if (s.skew_target == 0.0) {
    auto rng = make_rng(seed, 0);
    return gaussian(n, 0.0, s.scale, rng);
  }
  const Mixture mix = fit_mixture(s.skew_target);
  const double sign = s.skew_target < 0 ? -1.0 : 1.0;
  const double center = mix.p * mix.mu;

  std::vector<float> best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < kMaxSkewAttempts; ++attempt) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(attempt) + 1);
    std::bernoulli_distribution in_tail(mix.p);
    std::normal_distribution<double> core(0.0, 1.0);
    std::normal_distribution<double> tail(mix.mu, kTailStd);
    std::vector<float> x(n);
    for (float& v : x) {
      const double raw = in_tail(rng) ? tail(rng) : core(rng);
      v = static_cast<float>(sign * (raw - center) * s.scale);
    }
    const double gap = std::fabs(sample_skew(x) - s.skew_target);
    if (gap < best_gap) {
      best_gap = gap;
      best = std::move(x);
    }
    if (best_gap <= kSkewTolerance) break;
  }
  return best;
}

void plant_outliers(std::vector<float>& data, const GaussianWithOutliers& d,
                    std::mt19937_64& rng) {
  const std::size_t n = data.size();
  if (d.outlier_count > n) {
    throw InvalidArgument("outlier_count exceeds the number of elements");
  }
  if (!(d.outlier_magnitude > 0.0) || !std::isfinite(d.outlier_magnitude)) {
    throw InvalidArgument("outlier_magnitude must be positive and finite");
  }
  std::vector<std::size_t> positions;
  if (d.outlier_count * 2 > n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    std::shuffle(all.begin(), all.end(), rng);
    positions.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(d.outlier_count));
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::unordered_set<std::size_t> seen;
    while (positions.size() < d.outlier_count) {
      const std::size_t i = pick(rng);
      if (seen.insert(i).second) positions.push_back(i);
    }
  }
  std::bernoulli_distribution negative(0.5);
  const auto mag = static_cast<float>(d.outlier_magnitude);
  for (const std::size_t i : positions) data[i] = negative(rng) ? -mag : mag;
}

}  // namespace

Tensor synth_weights(std::size_t rows, std::size_t cols, const Distribution& dist,
                     std::uint64_t seed, std::string name) {
  if (rows == 0 || cols == 0) throw ShapeError("synth_weights needs rows, cols >= 1");
  const std::size_t n = rows * cols;
  std::vector<float> data = std::visit(
      [&](const auto& d) -> std::vector<float> {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Gaussian>) {
          check_std(d.std);
          auto rng = make_rng(seed, 0);
          return gaussian(n, d.mean, d.std, rng);
        } else if constexpr (std::is_same_v<D, GaussianWithOutliers>) {
          check_std(d.std);
          auto rng = make_rng(seed, 0);
          std::vector<float> x = gaussian(n, d.mean, d.std, rng);
          plant_outliers(x, d, rng);
          return x;
        } else {
          return skewed(n, d, seed);
        }
      },
      dist);
  return Tensor(std::move(name), rows, cols, std::move(data));
}

}  // namespace woqt
