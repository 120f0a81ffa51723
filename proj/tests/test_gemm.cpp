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
#include <sstream>
#include <vector>

#include "doctest.h"
#include "woqt/errors.hpp"
#include "woqt/gemm.hpp"
#include "woqt/quant.hpp"
#include "woqt/synth.hpp"

using namespace woqt;

namespace {

Activation random_act(std::size_t m, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(m * k);
  for (auto& x : v) x = d(rng);
  return Activation(m, k, std::move(v));
}

// Triple loop in double.
std::vector<double> oracle(const Activation& a, const Tensor& w) {
  std::vector<double> c(a.m() * w.cols(), 0.0);
  for (std::size_t i = 0; i < a.m(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      for (std::size_t k = 0; k < a.k(); ++k)
        c[i * w.cols() + j] += static_cast<double>(a.row(i)[k]) * w.at(k, j);
  return c;
}

double rel_frobenius(const Tensor& x, const std::vector<double>& ref) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    num += (x.data()[i] - ref[i]) * (x.data()[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

double rel_frobenius(const Tensor& x, const Tensor& y) {
  return rel_frobenius(x, std::vector<double>(y.data().begin(), y.data().end()));
}

struct Case {
  const char* label;
  QuantScheme scheme;
  GroupLayout layout;
};

std::vector<Case> cases(std::size_t k, std::size_t n) {
  return {
      {"int4 group64", QuantScheme::linear(4), GroupLayout::fixed_group(k, n, 64)},
      {"int4 group16 f16", QuantScheme::linear(4, ScaleStorage::f16), GroupLayout::fixed_group(k, n, 16)},
      {"int4 per-column", QuantScheme::linear(4), GroupLayout::per_column(k, n)},
      {"int4 per-tensor", QuantScheme::linear(4), GroupLayout::per_tensor(k, n)},
      {"int3 group32", QuantScheme::linear(3), GroupLayout::fixed_group(k, n, 32)},
      {"int8 per-column", QuantScheme::linear(8), GroupLayout::per_column(k, n)},
      {"int2 group64", QuantScheme::linear(2), GroupLayout::fixed_group(k, n, 64)},
      {"log4 group32", QuantScheme::log(4), GroupLayout::fixed_group(k, n, 32)},
      {"log5 mse", QuantScheme::log(5, LogScaleMode::mse_optimal), GroupLayout::per_column(k, n)},
  };
}

}  // namespace

TEST_CASE("reference: identity, tiny product, double oracle") {
  const Tensor w = synth_weights(3, 4, Gaussian{0.0, 1.0}, 1);
  const Activation eye(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(gemm_ref(eye, w) == w.renamed(gemm_ref(eye, w).name()));
  const Tensor c = gemm_ref(Activation(1, 2, {1, 1}), Tensor("w", 2, 1, {2, 3}));
  CHECK(c.data()[0] == 5.0f);
  const Activation a = random_act(3, 5, 2);
  const Tensor w2 = synth_weights(5, 4, Gaussian{0.0, 1.0}, 3);
  CHECK(rel_frobenius(gemm_ref(a, w2), oracle(a, w2)) <= 1e-6);
}

TEST_CASE("reference is independent of thread count") {
  const Activation a = random_act(5, 64, 4);
  const Tensor w = synth_weights(64, 37, Gaussian{0.0, 1.0}, 5);
  CHECK(gemm_ref(a, w, 1) == gemm_ref(a, w, 3));
}

TEST_CASE("one-hot activation selects a dequantized row") {
  const Tensor w = synth_weights(64, 20, Gaussian{0.0, 1.0}, 6);
  for (const auto& c : cases(64, 20)) {
    if (c.layout.kind() == LayoutKind::fixed_group && c.layout.group_size() > 64) continue;
    const auto q = quantize(w, c.scheme, c.layout);
    const Tensor d = dequantize(q);
    for (std::size_t r : {0u, 17u, 63u}) {
      std::vector<float> v(64, 0.0f);
      v[r] = 1.0f;
      for (auto order : {AccumulationOrder::native, AccumulationOrder::matched}) {
        const Tensor out = gemm_fused(Activation(1, 64, v), q, {order});
        for (std::size_t j = 0; j < 20; ++j) REQUIRE(out.at(0, j) == d.at(r, j));
      }
    }
  }
}

TEST_CASE("all-ones activation sums the quantized fixture column") {
  const auto q = quantize_linear(Tensor("w", 4, 1, {1, -2, 3, -4}), 4, GroupLayout::per_column(4, 1));
  for (auto order : {AccumulationOrder::native, AccumulationOrder::matched}) {
    const Tensor out = gemm_fused(Activation(1, 4, {1, 1, 1, 1}), q, {order});
    CHECK(std::fabs(out.data()[0] - (-2.1333333)) <= 1e-5);
  }
}

TEST_CASE("matched order is bit-identical to dequantize then reference") {
  const Activation a = random_act(4, 128, 7);
  const Tensor w = synth_weights(128, 64, Gaussian{0.0, 0.02}, 8);
  const auto q = quantize_linear(w, 4, GroupLayout::fixed_group(128, 64, 64));
  const Tensor ref = gemm_ref(a, dequantize(q));
  CHECK(gemm_fused(a, q, {AccumulationOrder::matched}) == ref);
  for (const auto& c : cases(128, 64)) {
    const auto qc = quantize(w, c.scheme, c.layout);
    for (std::size_t tile : {1u, 5u, 16u, 64u}) {
      CHECK_MESSAGE(gemm_fused(a, qc, {AccumulationOrder::matched, 1, tile}) ==
                        gemm_ref(a, dequantize(qc)),
                    c.label);
    }
  }
}

TEST_CASE("native order stays within 1e-6 relative Frobenius of the reference") {
  for (std::size_t k : {64u, 128u, 512u, 1024u}) {
    const Activation a = random_act(6, k, 9 + k);
    const Tensor w = synth_weights(k, 48, Gaussian{0.0, 0.02}, 10 + k);
    for (const auto& c : cases(k, 48)) {
      const auto q = quantize(w, c.scheme, c.layout);
      const Tensor d = dequantize(q);
      const Tensor native = gemm_fused(a, q);
      CHECK_MESSAGE(rel_frobenius(native, gemm_ref(a, d)) <= 1e-6, c.label, " k=", k);
      CHECK_MESSAGE(rel_frobenius(native, oracle(a, d)) <= 1e-6, c.label, " k=", k);
    }
  }
}

TEST_CASE("ragged adaptive groups") {
  const Activation a = random_act(3, 80, 11);
  const Tensor w = synth_weights(80, 24, Gaussian{0.0, 1.0}, 12);
  const auto q = quantize_linear(w, 4, GroupLayout::adaptive(80, 24, 32, 16, 0.5));
  const Tensor d = dequantize(q);
  CHECK(gemm_fused(a, q, {AccumulationOrder::matched}) == gemm_ref(a, d));
  CHECK(rel_frobenius(gemm_fused(a, q), oracle(a, d)) <= 1e-6);
}

TEST_CASE("linearity in the activation") {
  const std::size_t k = 256;
  const Tensor w = synth_weights(k, 32, Gaussian{0.0, 0.05}, 13);
  const auto q = quantize_linear(w, 4, GroupLayout::fixed_group(k, 32, 64));
  const Activation x = random_act(2, k, 14), y = random_act(2, k, 15);
  const float alpha = 0.75f, beta = -1.5f;
  std::vector<float> mix(2 * k);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x.data()[i] + beta * y.data()[i];
  for (auto order : {AccumulationOrder::native, AccumulationOrder::matched}) {
    const Tensor lhs = gemm_fused(Activation(2, k, mix), q, {order});
    const Tensor fx = gemm_fused(x, q, {order}), fy = gemm_fused(y, q, {order});
    std::vector<double> rhs(lhs.size());
    for (std::size_t i = 0; i < rhs.size(); ++i)
      rhs[i] = alpha * static_cast<double>(fx.data()[i]) + beta * static_cast<double>(fy.data()[i]);
    CHECK(rel_frobenius(lhs, rhs) <= 1e-5);
  }
}

TEST_CASE("scratch never exceeds one group x tile_n tile") {
  const Activation a = random_act(4, 256, 16);
  const Tensor w = synth_weights(256, 40, Gaussian{0.0, 1.0}, 17);
  for (const auto& c : cases(256, 40)) {
    const auto q = quantize(w, c.scheme, c.layout);
    for (std::size_t tile : {1u, 8u, 16u}) {
      for (auto order : {AccumulationOrder::native, AccumulationOrder::matched}) {
        reset_fused_scratch_stats();
        gemm_fused(a, q, {order, 2, tile});
        const ScratchStats s = fused_scratch_stats();
        CHECK(s.allocations > 0);
        CHECK_MESSAGE(s.peak_elements <= q.layout().largest_group() * tile, c.label);
        CHECK(s.peak_elements < 256 * 40);
      }
    }
  }
}

TEST_CASE("fused result is independent of thread count") {
  const Activation a = random_act(3, 128, 18);
  const Tensor w = synth_weights(128, 53, Gaussian{0.0, 1.0}, 19);
  for (const auto& c : cases(128, 53)) {
    const auto q = quantize(w, c.scheme, c.layout);
    for (auto order : {AccumulationOrder::native, AccumulationOrder::matched}) {
      const Tensor one = gemm_fused(a, q, {order, 1});
      CHECK(gemm_fused(a, q, {order, 4}) == one);
      CHECK(gemm_fused(a, q, {order, 7}) == one);
    }
  }
}

TEST_CASE("traffic: int4 group 64 reads 0.265625 of fp16") {
  for (auto [k, n] : {std::pair<std::size_t, std::size_t>{128, 64}, {4096, 4096}, {7168, 7168}}) {
    const WeightTraffic t = weight_traffic(k, n, 4, GroupLayout::fixed_group(k, n, 64));
    CHECK(static_cast<double>(t.weight_bytes + t.scale_bytes) / t.fp16_bytes == 0.265625);
    CHECK(t.fp16_bytes == 2 * k * n);
  }
  const WeightTraffic t8 = weight_traffic(4096, 4096, 8, GroupLayout::per_column(4096, 4096));
  CHECK(2 * t8.weight_bytes == t8.fp16_bytes);
  CHECK(t8.scale_bytes == 2 * 4096);
  // Per-column padding: 3 bits over 10 rows is 4 bytes per column.
  CHECK(weight_traffic(10, 7, 3, GroupLayout::per_column(10, 7)).weight_bytes == 28);
}

TEST_CASE("analytic stats follow the layout") {
  const Tensor w = synth_weights(128, 64, Gaussian{0.0, 1.0}, 20);
  const auto q = quantize(w, QuantScheme::linear(4, ScaleStorage::f16), GroupLayout::fixed_group(128, 64, 64));
  GemmStats s;
  gemm_fused(random_act(4, 128, 21), q, {}, &s);
  CHECK(s.bytes_weights_read == 64 * 64);
  CHECK(s.bytes_scales_read == 2 * 128);
  CHECK(s.bytes_activations_read == 4 * 4 * 128);
  CHECK(s.bytes_output_written == 4 * 4 * 64);
  CHECK(s.flops == 2 * 4 * 128 * 64);
  CHECK(s.wall_ms >= 0.0);
  const GemmStats a = analytic_stats(4, q);
  CHECK(a.bytes_weights_read == s.bytes_weights_read);
}

TEST_CASE("shape and argument errors") {
  const auto q = quantize_linear(synth_weights(64, 8, Gaussian{}, 1), 4, GroupLayout::per_column(64, 8));
  CHECK_THROWS_AS(gemm_fused(random_act(1, 32, 1), q), ShapeError);
  CHECK_THROWS_AS(gemm_ref(random_act(1, 32, 1), Tensor::zeros("w", 64, 8)), ShapeError);
  CHECK_THROWS_AS(Activation(2, 3, std::vector<float>(5)), ShapeError);
  CHECK_THROWS_AS(gemm_fused(random_act(1, 64, 1), q, {AccumulationOrder::matched, 1, 0}),
                  InvalidArgument);
}

TEST_CASE("bench sweep and CSV") {
  BenchConfig cfg;
  cfg.k = 128;
  cfg.n = 64;
  cfg.m_values = {1, 3};
  const auto rows = bench_sweep(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].m == 3);
  CHECK(rows[0].group == 64);
  CHECK(rows[0].stats.bytes_weights_read == 64 * 64);
  CHECK(rows[0].fused_ms > 0);
  CHECK(rows[0].speedup == doctest::Approx(rows[0].ref_ms / rows[0].fused_ms));
  std::ostringstream os;
  write_bench_csv(os, rows);
  const std::string text = os.str();
  CHECK(text.rfind("m,k,n,bits,group,fused_ms,ref_ms,speedup,weight_bytes,scale_bytes\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  cfg.runs = 4;
  CHECK_THROWS_AS(bench_sweep(cfg), InvalidArgument);
  cfg.runs = 5;
  cfg.group = 0;
  CHECK(bench_sweep(cfg)[0].group == 128);
}

TEST_CASE("geometric mean") {
  CHECK(geometric_mean({2.0, 8.0}) == doctest::Approx(4.0));
  CHECK(geometric_mean({3.0}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(geometric_mean({}), InvalidArgument);
  CHECK_THROWS_AS(geometric_mean({1.0, 0.0}), InvalidArgument);
}
