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

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "woqt/costmodel.hpp"
#include "woqt/errors.hpp"

using namespace woqt;

namespace {

std::vector<LatencyTable> shipped() {
  return load_latency_csv(std::string(WOQT_DATA_DIR) + "/opt175b_latency.csv");
}

}  // namespace

TEST_CASE("shipped table layout") {
  const auto tables = shipped();
  REQUIRE(tables.size() == 3);
  CHECK(find_table(tables, "fp16").gpus() == 8);
  CHECK(find_table(tables, "fp16").replicas() == 1);
  CHECK(find_table(tables, "int8").replicas() == 2);
  CHECK(find_table(tables, "int4-g64").replicas() == 4);
  for (const auto& t : tables) CHECK(t.rows().size() == 14);
  CHECK_THROWS_AS(find_table(tables, "int2"), LookupError);
}

TEST_CASE("end-to-end time") {
  const auto tables = shipped();
  CHECK(end_to_end_ms(find_table(tables, "fp16"), 1, 128, 32) == 1340.0);
  CHECK(end_to_end_ms(find_table(tables, "int8"), 1, 512, 128) == 5400.0);
  CHECK_THROWS_AS(end_to_end_ms(find_table(tables, "fp16"), 1, 128, 0), InvalidArgument);
  CHECK_THROWS_AS(end_to_end_ms(find_table(tables, "fp16"), 3, 128, 32), LookupError);
}

TEST_CASE("node throughput fixtures") {
  const auto tables = shipped();
  const auto fp16 = node_throughput(find_table(tables, "fp16"), 1, 128, 32);
  CHECK(fp16.per_instance == doctest::Approx(32.0 / 1.340));
  CHECK(fp16.per_node_rounded == 24);
  const auto int8 = node_throughput(find_table(tables, "int8"), 1, 128, 32);
  CHECK(int8.per_node == doctest::Approx(2 * 32.0 / 1.292));
  CHECK(std::fabs(int8.per_node - 49.5) <= 0.5);
  const auto int4 = node_throughput(find_table(tables, "int4-g64"), 1, 128, 128);
  CHECK(int4.per_node == doctest::Approx(4 * 128.0 / 5.625));
  CHECK(int4.per_node_rounded == 91);
}

TEST_CASE("speedup ratios") {
  const auto tables = shipped();
  const auto& fp16 = find_table(tables, "fp16");
  const auto r4 = speedup_report(fp16, find_table(tables, "int4-g64"), {{1, 512, 128}});
  CHECK(std::fabs(r4.at(0).ratio - 3.65) <= 0.05);
  const auto r8 = speedup_report(fp16, find_table(tables, "int8"), {{1, 1024, 32}});
  CHECK(std::fabs(r8.at(0).ratio - 1.85) <= 0.05);
  for (const auto& row : speedup_report(fp16, fp16, {}))
    CHECK(row.ratio == 1.0);
  CHECK(speedup_report(fp16, fp16, {}).size() == 14);
  CHECK_THROWS_AS(speedup_report(fp16, fp16, {{1, 77, 1}}), LookupError);
  const LatencyTable other("x", 8, {{1, 2048, 1.0, 1.0}});
  CHECK_THROWS_AS(speedup_report(fp16, other, {}), LookupError);
}

TEST_CASE("replicas scale throughput exactly") {
  const auto tables = shipped();
  const auto& t = find_table(tables, "int8");
  for (unsigned r : {1u, 2u, 3u, 8u}) {
    const auto one = node_throughput(t, 4, 512, 32, 1);
    const auto many = node_throughput(t, 4, 512, 32, r);
    CHECK(many.per_node == r * one.per_node);
    CHECK(many.per_instance == one.per_instance);
  }
  CHECK(node_throughput(t, 1, 128, 32, 1).per_node == node_throughput(t, 1, 128, 32).per_instance);
  CHECK(node_throughput(t, 1, 128, 32).per_node == 2 * node_throughput(t, 1, 128, 32, 1).per_node);
}

TEST_CASE("throughput decreases as latency grows") {
  double prev_ctx = 1e300, prev_step = 1e300;
  for (double slow : {1.0, 1.5, 2.0, 4.0}) {
    const LatencyTable ctx("p", 1, {{2, 128, 100.0 * slow, 40.0}});
    const LatencyTable step("p", 1, {{2, 128, 100.0, 40.0 * slow}});
    const double a = node_throughput(ctx, 2, 128, 16).per_node;
    const double b = node_throughput(step, 2, 128, 16).per_node;
    CHECK(a < prev_ctx);
    CHECK(b < prev_step);
    prev_ctx = a;
    prev_step = b;
  }
  // Batch multiplies generated tokens.
  const LatencyTable t("p", 8, {{4, 128, 100.0, 10.0}});
  CHECK(node_throughput(t, 4, 128, 10).per_instance == doctest::Approx(4 * 10 / 0.2));
}

TEST_CASE("table validation") {
  CHECK_THROWS_AS(LatencyTable("p", 8, {{1, 128, 0.0, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(LatencyTable("p", 8, {{1, 128, 1.0, -1.0}}), InvalidArgument);
  CHECK_THROWS_AS(LatencyTable("p", 8, {{1, 128, 1.0, 1.0}, {1, 128, 2.0, 2.0}}), InvalidArgument);
  CHECK_THROWS_AS(LatencyTable("p", 0, {{1, 128, 1.0, 1.0}}), InvalidArgument);
  CHECK(LatencyTable("p", 3, {{1, 1, 1, 1}}).replicas() == 2);
  CHECK(LatencyTable("p", 3, {{1, 1, 1, 1}}, 5).replicas() == 5);
}

TEST_CASE("CSV parsing") {
  std::istringstream good(
      "precision,gpus,batch,input_len,context_ms,per_step_ms\n"
      "a,8,1,128,60,40\n"
      "b,2,1,128,50,30\n"
      "a,8,2,128,70,41\n");
  const auto tables = parse_latency_csv(good);
  REQUIRE(tables.size() == 2);
  CHECK(tables[0].precision() == "a");
  CHECK(tables[0].rows().size() == 2);
  CHECK(tables[1].replicas() == 4);

  for (const char* text : {"wrong,header\n", "precision,gpus,batch,input_len,context_ms,per_step_ms\na,8,1\n",
                           "precision,gpus,batch,input_len,context_ms,per_step_ms\na,8,x,128,1,1\n",
                           "precision,gpus,batch,input_len,context_ms,per_step_ms\na,8,1,128,1,-1\n", ""}) {
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_latency_csv(in), FormatError);
  }
  CHECK_THROWS_AS(load_latency_csv("/nonexistent/latency.csv"), IoError);
}
