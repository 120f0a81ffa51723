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
#include <ostream>
#include <span>
#include <vector>

#include "woqt/quant.hpp"
#include "woqt/tensor.hpp"

namespace woqt {

// Row-major m x k float activations; m = batch_size * sequence_length.
class Activation {
 public:
  Activation() = default;
  Activation(std::size_t m, std::size_t k, std::vector<float> data);

  std::size_t m() const { return m_; }
  std::size_t k() const { return k_; }
  std::span<const float> data() const { return data_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(data_).subspan(i * k_, k_);
  }

 private:
  std::size_t m_ = 0;
  std::size_t k_ = 0;
  std::vector<float> data_;
};

struct GemmStats {
  std::uint64_t bytes_weights_read = 0;
  std::uint64_t bytes_scales_read = 0;
  std::uint64_t bytes_activations_read = 0;
  std::uint64_t bytes_output_written = 0;
  std::uint64_t flops = 0;
  double wall_ms = 0.0;
};

// C[i, j] = sum_k act[i, k] * w[k, j], float accumulation, k ascending.
// Parallel over disjoint column ranges of the output.
Tensor gemm_ref(const Activation& act, const Tensor& w, unsigned threads = 1);

enum class AccumulationOrder {
  // Per group: sum of act * code, then one multiply by the group scale.
  native,
  // Dequantize each weight (code * scale) and accumulate k ascending exactly
  // like gemm_ref; bit-identical to gemm_ref(act, dequantize(q)).
  matched,
};

struct FusedOptions {
  AccumulationOrder order = AccumulationOrder::native;
  unsigned threads = 1;
  // Output columns decoded together in matched order.
  std::size_t tile_n = 16;
};

// Multiplies float activations by packed weights, unpacking group by group
// along K. The dequantized weight matrix is never materialized; each worker
// holds at most one group x tile_n scratch tile.
Tensor gemm_fused(const Activation& act, const PackedQuantTensor& q,
                  const FusedOptions& opts = {}, GemmStats* stats = nullptr);

// Byte and flop counts for one pass, derived from the layout alone.
// Weight bytes include per-column padding.
GemmStats analytic_stats(std::size_t m, const PackedQuantTensor& q);

struct WeightTraffic {
  std::uint64_t weight_bytes = 0;
  std::uint64_t scale_bytes = 0;
  std::uint64_t fp16_bytes = 0;  // 2 * K * N
};

WeightTraffic weight_traffic(std::size_t k, std::size_t n, int bits, const GroupLayout& layout,
                             std::size_t bytes_per_scale = 2);

// Instrumentation of the fused kernel's dequantized-weight scratch buffers.
struct ScratchStats {
  std::size_t peak_elements = 0;  // largest single scratch buffer, in floats
  std::size_t allocations = 0;
};
ScratchStats fused_scratch_stats();
void reset_fused_scratch_stats();

struct BenchConfig {
  std::size_t k = 4096;
  std::size_t n = 4096;
  int bits = 4;
  std::size_t group = 64;  // 0 selects per-column scales
  std::vector<std::size_t> m_values = {1, 2, 4, 8, 16, 32};
  int runs = 5;
  int warmups = 2;
  unsigned threads = 1;
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t n = 0;
  int bits = 0;
  std::size_t group = 0;  // resolved group size; k for per-column
  double fused_ms = 0.0;  // median
  double ref_ms = 0.0;    // median
  double speedup = 0.0;   // ref_ms / fused_ms
  GemmStats stats;        // analytic byte counts
};

// Times gemm_fused (native order) against gemm_ref on the dequantized
// weights for each m. Weights are synthetic Gaussian, scales stored as f16.
std::vector<BenchRow> bench_sweep(const BenchConfig& cfg);

// Header: m,k,n,bits,group,fused_ms,ref_ms,speedup,weight_bytes,scale_bytes
void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows);

double geometric_mean(const std::vector<double>& values);

}  // namespace woqt
