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

#include "woqt/costmodel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "woqt/errors.hpp"

namespace woqt {
namespace {

constexpr const char* kHeader = "precision,gpus,batch,input_len,context_ms,per_step_ms";

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line_no) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("latency CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

LatencyTable::LatencyTable(std::string precision, unsigned gpus, std::vector<LatencyRow> rows,
                           unsigned replicas)
    : precision_(std::move(precision)), gpus_(gpus), rows_(std::move(rows)) {
  if (gpus_ == 0) throw InvalidArgument("latency table: gpus must be positive");
  replicas_ = replicas != 0 ? replicas : std::max(1u, kNodeGpus / gpus_);
  std::set<std::pair<std::size_t, std::size_t>> keys;
  for (const LatencyRow& r : rows_) {
    if (!(r.context_ms > 0.0) || !(r.per_step_ms > 0.0)) {
      throw InvalidArgument("latency table '" + precision_ + "': times must be positive");
    }
    if (!keys.emplace(r.batch, r.input_len).second) {
      throw InvalidArgument("latency table '" + precision_ + "': duplicate (batch " +
                            std::to_string(r.batch) + ", input " + std::to_string(r.input_len) +
                            ")");
    }
  }
}

bool LatencyTable::contains(std::size_t batch, std::size_t input_len) const {
  return std::any_of(rows_.begin(), rows_.end(), [&](const LatencyRow& r) {
    return r.batch == batch && r.input_len == input_len;
  });
}

const LatencyRow& LatencyTable::at(std::size_t batch, std::size_t input_len) const {
  for (const LatencyRow& r : rows_) {
    if (r.batch == batch && r.input_len == input_len) return r;
  }
  throw LookupError("latency table '" + precision_ + "' has no entry for batch " +
                    std::to_string(batch) + ", input length " + std::to_string(input_len));
}

std::vector<LatencyTable> parse_latency_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line) != kHeader) {
    throw FormatError(std::string("latency CSV: expected header '") + kHeader + "'");
  }
  struct Pending {
    std::string precision;
    unsigned gpus;
    std::vector<LatencyRow> rows;
  };
  std::vector<Pending> pending;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line);
    if (f.size() != 6) {
      throw FormatError("latency CSV line " + std::to_string(line_no) + ": expected 6 fields");
    }
    const unsigned gpus = parse_number<unsigned>(f[1], line_no);
    LatencyRow row{parse_number<std::size_t>(f[2], line_no), parse_number<std::size_t>(f[3], line_no),
                   parse_number<double>(f[4], line_no), parse_number<double>(f[5], line_no)};
    auto it = std::find_if(pending.begin(), pending.end(), [&](const Pending& p) {
      return p.precision == f[0] && p.gpus == gpus;
    });
    if (it == pending.end()) {
      pending.push_back({f[0], gpus, {}});
      it = std::prev(pending.end());
    }
    it->rows.push_back(row);
  }
  std::vector<LatencyTable> tables;
  for (Pending& p : pending) {
    try {
      tables.emplace_back(p.precision, p.gpus, std::move(p.rows));
    } catch (const InvalidArgument& e) {
      throw FormatError(std::string("latency CSV: ") + e.what());
    }
  }
  if (tables.empty()) throw FormatError("latency CSV: no rows");
  return tables;
}

std::vector<LatencyTable> load_latency_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open latency CSV '" + path + "'");
  return parse_latency_csv(in);
}

const LatencyTable& find_table(const std::vector<LatencyTable>& tables,
                               const std::string& precision) {
  for (const LatencyTable& t : tables) {
    if (t.precision() == precision) return t;
  }
  throw LookupError("no latency table for precision '" + precision + "'");
}

double end_to_end_ms(const LatencyTable& t, std::size_t batch, std::size_t input_len,
                     std::size_t output_len) {
  if (output_len == 0) throw InvalidArgument("output length must be at least 1");
  const LatencyRow& r = t.at(batch, input_len);
  return r.context_ms + static_cast<double>(output_len) * r.per_step_ms;
}

ThroughputResult node_throughput(const LatencyTable& t, std::size_t batch, std::size_t input_len,
                                 std::size_t output_len, unsigned replicas) {
  if (replicas == 0) throw InvalidArgument("replicas must be at least 1");
  const double ms = end_to_end_ms(t, batch, input_len, output_len);
  ThroughputResult r;
  r.replicas = replicas;
  r.per_instance = static_cast<double>(batch * output_len) / (ms / 1000.0);
  r.per_node = replicas * r.per_instance;
  r.per_node_rounded = static_cast<std::int64_t>(std::floor(r.per_node + 0.5));
  return r;
}

ThroughputResult node_throughput(const LatencyTable& t, std::size_t batch, std::size_t input_len,
                                 std::size_t output_len) {
  return node_throughput(t, batch, input_len, output_len, t.replicas());
}

std::vector<SpeedupRow> speedup_report(const LatencyTable& base, const LatencyTable& other,
                                       const std::vector<Shape>& shapes) {
  std::vector<Shape> todo = shapes;
  if (todo.empty()) {
    for (const LatencyRow& r : base.rows()) {
      if (other.contains(r.batch, r.input_len)) todo.push_back({r.batch, r.input_len, 1});
    }
    if (todo.empty()) {
      throw LookupError("tables '" + base.precision() + "' and '" + other.precision() +
                        "' share no (batch, input length) keys");
    }
  }
  std::vector<SpeedupRow> out;
  for (const Shape& s : todo) {
    SpeedupRow row;
    row.shape = s;
    row.base = node_throughput(base, s.batch, s.input_len, s.output_len);
    row.other = node_throughput(other, s.batch, s.input_len, s.output_len);
    row.ratio = row.other.per_node / row.base.per_node;
    out.push_back(row);
  }
  return out;
}

}  // namespace woqt
