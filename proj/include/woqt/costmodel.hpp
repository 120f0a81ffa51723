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
#include <istream>
#include <string>
#include <vector>

namespace woqt {

inline constexpr unsigned kNodeGpus = 8;

struct LatencyRow {
  std::size_t batch = 0;
  std::size_t input_len = 0;
  double context_ms = 0.0;
  double per_step_ms = 0.0;
};

// Measured context and per-decoder-step latency for one deployment
// (precision label, GPUs per instance). An 8-GPU node holds
// kNodeGpus / gpus replicas unless overridden.
class LatencyTable {
 public:
  // Throws InvalidArgument for non-positive times, duplicate keys, or a GPU
  // count that is zero.
  LatencyTable(std::string precision, unsigned gpus, std::vector<LatencyRow> rows,
               unsigned replicas = 0);

  const std::string& precision() const { return precision_; }
  unsigned gpus() const { return gpus_; }
  unsigned replicas() const { return replicas_; }
  const std::vector<LatencyRow>& rows() const { return rows_; }
  // Throws LookupError when (batch, input_len) is absent.
  const LatencyRow& at(std::size_t batch, std::size_t input_len) const;
  bool contains(std::size_t batch, std::size_t input_len) const;

 private:
  std::string precision_;
  unsigned gpus_ = 1;
  unsigned replicas_ = 1;
  std::vector<LatencyRow> rows_;
};

// CSV with header precision,gpus,batch,input_len,context_ms,per_step_ms.
// One table per (precision, gpus), in order of first appearance.
std::vector<LatencyTable> parse_latency_csv(std::istream& in);
std::vector<LatencyTable> load_latency_csv(const std::string& path);
const LatencyTable& find_table(const std::vector<LatencyTable>& tables,
                               const std::string& precision);

// context_ms + output_len * per_step_ms. output_len must be >= 1.
double end_to_end_ms(const LatencyTable& t, std::size_t batch, std::size_t input_len,
                     std::size_t output_len);

struct ThroughputResult {
  double per_instance = 0.0;  // generated tokens / s
  double per_node = 0.0;      // replicas * per_instance
  std::int64_t per_node_rounded = 0;  // round half up
  unsigned replicas = 1;
};

ThroughputResult node_throughput(const LatencyTable& t, std::size_t batch, std::size_t input_len,
                                 std::size_t output_len, unsigned replicas);
// Uses the table's replica count.
ThroughputResult node_throughput(const LatencyTable& t, std::size_t batch, std::size_t input_len,
                                 std::size_t output_len);

struct Shape {
  std::size_t batch = 1;
  std::size_t input_len = 0;
  std::size_t output_len = 0;
};

struct SpeedupRow {
  Shape shape;
  ThroughputResult base;
  ThroughputResult other;
  double ratio = 0.0;  // other.per_node / base.per_node
};

// Every shape must be present in both tables (LookupError otherwise); an
// empty shape list means every shared (batch, input_len) key at output 1.
std::vector<SpeedupRow> speedup_report(const LatencyTable& base, const LatencyTable& other,
                                       const std::vector<Shape>& shapes);

}  // namespace woqt
