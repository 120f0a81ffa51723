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
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "woqt/adaptive.hpp"
#include "woqt/container.hpp"
#include "woqt/quant.hpp"
#include "woqt/tensor.hpp"

namespace woqt {

// Passing kPerColumn (or rows) as a group size selects per-column scales.
inline constexpr std::size_t kPerColumn = 0;

struct ErrorStats {
  double mse = 0.0;
  double max_abs_err = 0.0;
};

// Elementwise error between two tensors of equal shape, in double precision.
ErrorStats error_stats(const Tensor& a, const Tensor& b);

struct MsePoint {
  std::size_t group = 0;  // resolved group size (rows for per-column)
  double mse = 0.0;
  double max_abs_err = 0.0;
};

// Quantize/dequantize round trip for each group size.
std::vector<MsePoint> mse_sweep(const Tensor& t, const QuantScheme& scheme,
                                const std::vector<std::size_t>& group_sizes,
                                unsigned threads = 1);
std::vector<MsePoint> mse_sweep(const Tensor& t, int bits,
                                const std::vector<std::size_t>& group_sizes,
                                unsigned threads = 1);

inline constexpr std::size_t kHistogramBins = 256;

struct DistributionStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;           // population
  double skewness = 0.0;         // Fisher g1 = m3 / m2^(3/2)
  double excess_kurtosis = 0.0;  // m4 / m2^2 - 3
  double absmax = 0.0;
  // kHistogramBins equal bins over [-absmax, absmax]; an all-zero tensor
  // puts every element in the bin containing 0.
  std::vector<std::uint64_t> histogram;
};

// Throws InvalidArgument for fewer than 3 elements. Constant data has zero
// skewness and kurtosis.
DistributionStats skewness(const Tensor& t);

// Bytes of one quantized tensor under size accounting: packed codes with
// per-column padding plus two bytes per scale.
std::uint64_t quantized_bytes(std::size_t rows, std::size_t cols, int bits,
                              const GroupLayout& layout);
inline std::uint64_t fp16_bytes(std::size_t rows, std::size_t cols) {
  return 2ull * rows * cols;
}

struct WeightSpec {
  int bits = 4;
  LayoutKind kind = LayoutKind::fixed_group;
  std::size_t group = 64;
};

struct TensorFootprint {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool exempt = false;
  int bits = 16;
  std::size_t group = 0;
  std::size_t num_scales = 0;
  std::uint64_t fp16_bytes = 0;
  std::uint64_t bytes = 0;
};

struct FootprintReport {
  std::vector<TensorFootprint> tensors;
  std::uint64_t fp16_bytes = 0;
  std::uint64_t bytes = 0;
  double ratio() const {
    return fp16_bytes == 0 ? 1.0 : static_cast<double>(bytes) / static_cast<double>(fp16_bytes);
  }
};

// Every tensor must appear in exactly one of specs / exempt (InvalidArgument
// otherwise). Exempt tensors count at fp16 size.
FootprintReport footprint(const TensorBundle& bundle, const std::map<std::string, WeightSpec>& specs,
                          const std::set<std::string>& exempt);

// Footprint of a bundle as stored: packed entries by their own layout, float
// entries as fp16-exempt.
FootprintReport footprint(const TensorBundle& bundle);

// Total ratio when a fraction f of fp16 bytes stays unquantized and the rest
// compresses by tensor_ratio.
inline double total_ratio(double exempt_fraction, double tensor_ratio) {
  return exempt_fraction + (1.0 - exempt_fraction) * tensor_ratio;
}

struct RatioObservation {
  double tensor_ratio = 0.0;    // quantized / fp16 for the quantized tensors
  double observed_ratio = 0.0;  // reported total / fp16 total
};

// Least-squares exempt fraction minimizing the relative residuals
// (total_ratio(f, t) - r) / r over all observations.
double fit_exempt_fraction(const std::vector<RatioObservation>& obs);

// Range-ratio ladder, the same numbers adapt_group_size consumes.
std::vector<RangeLevel> range_diagnostics(const Tensor& t, std::size_t min_group = kDefaultMinGroup,
                                          std::size_t levels = 0);

struct TensorQuantReport {
  std::string name;
  std::string scheme;
  std::string layout;
  std::size_t group = 0;
  double mse = 0.0;
  double max_abs_err = 0.0;
  double scale_min = 0.0;
  double scale_max = 0.0;
  double scale_mean = 0.0;
  std::uint64_t fp16_bytes = 0;
  std::uint64_t bytes = 0;
};

TensorQuantReport quant_report(const Tensor& original, const PackedQuantTensor& q,
                               unsigned threads = 1);

void write_mse_csv(std::ostream& os, const std::string& tensor, const QuantScheme& scheme,
                   const std::vector<MsePoint>& points, bool header = true);
void write_stats_csv(std::ostream& os, const std::string& tensor, const DistributionStats& s,
                     bool header = true);
void write_histogram_csv(std::ostream& os, const DistributionStats& s);
void write_footprint_csv(std::ostream& os, const FootprintReport& r);
void write_range_csv(std::ostream& os, const std::string& tensor,
                     const std::vector<RangeLevel>& levels, bool header = true);
void write_quant_report_csv(std::ostream& os, const std::vector<TensorQuantReport>& reports);

}  // namespace woqt
