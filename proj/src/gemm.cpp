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

#include "woqt/gemm.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <cstring>
#include <utility>

#if defined(__AVX2__)
#include <immintrin.h>
#endif

#include "woqt/errors.hpp"
#include "woqt/parallel.hpp"
#include "woqt/synth.hpp"

namespace woqt {
namespace {

std::atomic<std::size_t> g_scratch_peak{0};
std::atomic<std::size_t> g_scratch_allocs{0};

std::vector<float> scratch_buffer(std::size_t elems) {
  std::size_t prev = g_scratch_peak.load(std::memory_order_relaxed);
  while (prev < elems &&
         !g_scratch_peak.compare_exchange_weak(prev, elems, std::memory_order_relaxed)) {
  }
  g_scratch_allocs.fetch_add(1, std::memory_order_relaxed);
  return std::vector<float>(elems);
}

constexpr std::size_t kLanes = 16;

// Nibble-planar order for 4-bit linear codes: within each block of 16 codes
// (8 bytes) the low nibbles come first, then the high nibbles. Activations
// are permuted the same way once per call so both sides stay contiguous.
constexpr std::size_t kPlanarBlock = 16;

#if defined(__AVX2__)
constexpr bool kPlanarSimd = true;
#else
constexpr bool kPlanarSimd = false;
#endif

bool planar_eligible(const PackedQuantTensor& q) {
  if (q.bits() != 4 || q.scheme().mapping() != Mapping::linear) return false;
  const GroupLayout& layout = q.layout();
  for (std::size_t g = 0; g < layout.groups_per_column(); ++g) {
    if (layout.group_begin(g) % kPlanarBlock != 0 || layout.group_end(g) % kPlanarBlock != 0) {
      return false;
    }
  }
  return true;
}

std::vector<float> planar_activations(const Activation& act) {
  const std::size_t k = act.k();
  std::vector<float> out(act.m() * k);
  const std::size_t half = kPlanarBlock / 2;
  for (std::size_t i = 0; i < act.m(); ++i) {
    const float* a = act.data().data() + i * k;
    float* o = out.data() + i * k;
    for (std::size_t t = 0; t < k; t += kPlanarBlock) {
      for (std::size_t l = 0; l < half; ++l) {
        o[t + l] = a[t + 2 * l];
        o[t + half + l] = a[t + 2 * l + 1];
      }
    }
  }
  return out;
}

void decode_planar4(const std::uint8_t* __restrict src, std::size_t len, float* __restrict out) {
  const std::size_t half = kPlanarBlock / 2;
  for (std::size_t t = 0; t < len; t += kPlanarBlock) {
    const std::uint8_t* bytes = src + t / 2;
#if defined(__AVX2__)
    const __m256i v = _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(bytes)));
    const __m256i mask = _mm256_set1_epi32(15);
    const __m256i bias = _mm256_set1_epi32(8);
    const __m256i lo = _mm256_sub_epi32(_mm256_xor_si256(_mm256_and_si256(v, mask), bias), bias);
    const __m256i hi = _mm256_sub_epi32(_mm256_xor_si256(_mm256_srli_epi32(v, 4), bias), bias);
    _mm256_storeu_ps(out + t, _mm256_cvtepi32_ps(lo));
    _mm256_storeu_ps(out + t + half, _mm256_cvtepi32_ps(hi));
#else
    for (std::size_t l = 0; l < half; ++l) {
      const std::int32_t v = bytes[l];
      out[t + l] = static_cast<float>(((v & 15) ^ 8) - 8);
      out[t + half + l] = static_cast<float>(((v >> 4) ^ 8) - 8);
    }
#endif
  }
}

std::array<float, 256> value_lut(Mapping mapping, int bits) {
  std::array<float, 256> lut{};
  for (int c = -(1 << (bits - 1)); c < (1 << (bits - 1)); ++c) {
    lut[static_cast<std::uint8_t>(static_cast<std::int8_t>(c))] = code_value(c, mapping, bits);
  }
  return lut;
}

// Decodes codes [b, e) of one column as exact unscaled values, natural order.
void decode_values(std::span<const std::uint8_t> column, std::size_t b, std::size_t e, int bits,
                   Mapping mapping, const std::array<float, 256>& lut, std::int8_t* codes,
                   float* out) {
  const std::size_t len = e - b;
  if (bits == 8 && mapping == Mapping::linear) {
    const auto* src = reinterpret_cast<const std::int8_t*>(column.data()) + b;
    for (std::size_t i = 0; i < len; ++i) out[i] = static_cast<float>(src[i]);
    return;
  }
  unpack_column(column, b, e, bits, std::span<std::int8_t>(codes, len));
  for (std::size_t i = 0; i < len; ++i) out[i] = lut[static_cast<std::uint8_t>(codes[i])];
}

// Lane partial sums of a * v: lanes[l] = sum over k = l (mod kLanes).
void lane_dot(const float* __restrict a, const float* __restrict v, std::size_t n,
              float* __restrict lanes) {
  std::fill(lanes, lanes + kLanes, 0.0f);
  std::size_t k = 0;
#if defined(__AVX2__)
  __m256 lo = _mm256_setzero_ps();
  __m256 hi = _mm256_setzero_ps();
  for (; k + kLanes <= n; k += kLanes) {
    lo = _mm256_add_ps(lo, _mm256_mul_ps(_mm256_loadu_ps(a + k), _mm256_loadu_ps(v + k)));
    hi = _mm256_add_ps(hi, _mm256_mul_ps(_mm256_loadu_ps(a + k + 8), _mm256_loadu_ps(v + k + 8)));
  }
  _mm256_storeu_ps(lanes, lo);
  _mm256_storeu_ps(lanes + 8, hi);
#else
  for (; k + kLanes <= n; k += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) lanes[l] += a[k + l] * v[k + l];
  }
#endif
  for (std::size_t l = 0; k < n; ++k, ++l) lanes[l] += a[k] * v[k];
}

void scale_add(float s, const float* __restrict part, float* __restrict total) {
  for (std::size_t l = 0; l < kLanes; ++l) total[l] += s * part[l];
}

#if defined(__AVX2__)
inline __m256 madd(__m256 a, __m256 b, __m256 c) {
  return _mm256_add_ps(_mm256_mul_ps(a, b), c);
}

// One 4-bit planar column against R activation rows. Each block of 16 codes
// is decoded once into registers; lane totals stay in registers across
// groups and receive s * (group lane partials) once per group.
template <int R>
void planar4_column(const std::uint8_t* __restrict column, const std::size_t* bounds,
                    std::size_t groups, const float* scales, std::size_t scale_stride,
                    const float* const* a, float* const* totals) {
  __m256 tlo[R];
  __m256 thi[R];
  for (int r = 0; r < R; ++r) tlo[r] = thi[r] = _mm256_setzero_ps();
  const __m256i mask = _mm256_set1_epi32(15);
  const __m256i bias = _mm256_set1_epi32(8);
  for (std::size_t g = 0; g < groups; ++g) {
    __m256 lo[R];
    __m256 hi[R];
    for (int r = 0; r < R; ++r) lo[r] = hi[r] = _mm256_setzero_ps();
    for (std::size_t t = bounds[g]; t < bounds[g + 1]; t += kPlanarBlock) {
      const __m256i v = _mm256_cvtepu8_epi32(
          _mm_loadl_epi64(reinterpret_cast<const __m128i*>(column + t / 2)));
      const __m256 vlo = _mm256_cvtepi32_ps(
          _mm256_sub_epi32(_mm256_xor_si256(_mm256_and_si256(v, mask), bias), bias));
      const __m256 vhi = _mm256_cvtepi32_ps(
          _mm256_sub_epi32(_mm256_xor_si256(_mm256_srli_epi32(v, 4), bias), bias));
      for (int r = 0; r < R; ++r) {
        lo[r] = madd(_mm256_loadu_ps(a[r] + t), vlo, lo[r]);
        hi[r] = madd(_mm256_loadu_ps(a[r] + t + 8), vhi, hi[r]);
      }
    }
    const __m256 vs = _mm256_set1_ps(scales[g * scale_stride]);
    for (int r = 0; r < R; ++r) {
      tlo[r] = madd(vs, lo[r], tlo[r]);
      thi[r] = madd(vs, hi[r], thi[r]);
    }
  }
  for (int r = 0; r < R; ++r) {
    _mm256_storeu_ps(totals[r], tlo[r]);
    _mm256_storeu_ps(totals[r] + 8, thi[r]);
  }
}
#endif

// Group boundaries and scale addressing, resolved once per call so the inner
// loops do no layout arithmetic.
struct GroupPlan {
  std::vector<std::size_t> bounds;  // groups + 1 row offsets
  std::size_t group_stride = 0;     // scale index step between groups
  std::size_t column_stride = 0;    // scale index step between columns

  explicit GroupPlan(const GroupLayout& layout) {
    const std::size_t groups = layout.groups_per_column();
    bounds.reserve(groups + 1);
    for (std::size_t g = 0; g < groups; ++g) bounds.push_back(layout.group_begin(g));
    bounds.push_back(layout.rows());
    if (layout.kind() != LayoutKind::per_tensor) {
      group_stride = layout.cols();
      column_stride = 1;
    }
  }
  std::size_t groups() const { return bounds.size() - 1; }
};

void fused_native(const Activation& act, const PackedQuantTensor& q, float* out,
                  std::size_t j0, std::size_t j1) {
  const GroupLayout& layout = q.layout();
  const GroupPlan plan(layout);
  const std::size_t m = act.m();
  const std::size_t n = q.cols();
  const std::size_t k = act.k();
  const int bits = q.bits();
  const Mapping mapping = q.scheme().mapping();
  const auto lut = value_lut(mapping, bits);
  const bool planar = planar_eligible(q);
  const std::vector<float> permuted = planar ? planar_activations(act) : std::vector<float>{};
  const float* a = planar ? permuted.data() : act.data().data();
  const float* scales = q.scales().data();
  const std::size_t col_bytes = q.column_bytes();
  const std::uint8_t* stream = q.codes().data();
  std::vector<float> values = scratch_buffer(layout.largest_group());
  std::vector<std::int8_t> codes(layout.largest_group());
  float part[kLanes];
  // Per row: lane totals of scale * group partial sums.
  std::vector<float> total(m * kLanes);
  for (std::size_t j = j0; j < j1; ++j) {
    std::fill(total.begin(), total.end(), 0.0f);
    const std::span<const std::uint8_t> column(stream + j * col_bytes, col_bytes);
    const float* sj = scales + j * plan.column_stride;
#if defined(__AVX2__)
    if (planar) {
      std::size_t i = 0;
      for (; i + 4 <= m; i += 4) {
        const float* rows[4] = {a + i * k, a + (i + 1) * k, a + (i + 2) * k, a + (i + 3) * k};
        float* tots[4] = {&total[i * kLanes], &total[(i + 1) * kLanes],
                          &total[(i + 2) * kLanes], &total[(i + 3) * kLanes]};
        planar4_column<4>(column.data(), plan.bounds.data(), plan.groups(), sj,
                          plan.group_stride, rows, tots);
      }
      for (; i < m; ++i) {
        const float* rows[1] = {a + i * k};
        float* tots[1] = {&total[i * kLanes]};
        planar4_column<1>(column.data(), plan.bounds.data(), plan.groups(), sj,
                          plan.group_stride, rows, tots);
      }
    }
#endif
    for (std::size_t g = 0; g < plan.groups() && !(planar && kPlanarSimd); ++g) {
      const std::size_t b = plan.bounds[g];
      const std::size_t len = plan.bounds[g + 1] - b;
      const float s = sj[g * plan.group_stride];
      if (planar) {
        decode_planar4(column.data() + b / 2, len, values.data());
      } else {
        decode_values(column, b, b + len, bits, mapping, lut, codes.data(), values.data());
      }
      for (std::size_t i = 0; i < m; ++i) {
        lane_dot(a + i * k + b, values.data(), len, part);
        scale_add(s, part, &total[i * kLanes]);
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      double sum = 0.0;
      for (std::size_t l = 0; l < kLanes; ++l) sum += total[i * kLanes + l];
      out[i * n + j] = static_cast<float>(sum);
    }
  }
}

void fused_matched(const Activation& act, const PackedQuantTensor& q, std::size_t tile_n,
                   float* out, std::size_t j0, std::size_t j1) {
  const GroupLayout& layout = q.layout();
  const std::size_t m = act.m();
  const std::size_t n = q.cols();
  const std::size_t k = act.k();
  const int bits = q.bits();
  const Mapping mapping = q.scheme().mapping();
  const auto lut = value_lut(mapping, bits);
  std::vector<float> tile = scratch_buffer(layout.largest_group() * tile_n);
  std::vector<float> values(layout.largest_group());
  std::vector<std::int8_t> codes(layout.largest_group());
  std::vector<float> acc(m * tile_n);
  const float* a = act.data().data();
  for (std::size_t t0 = j0; t0 < j1; t0 += tile_n) {
    const std::size_t tn = std::min(tile_n, j1 - t0);
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (std::size_t g = 0; g < layout.groups_per_column(); ++g) {
      const std::size_t b = layout.group_begin(g);
      const std::size_t e = layout.group_end(g);
      const std::size_t len = e - b;
      // tile[kk * tn + jj] = code * scale, the same float product dequantize() forms.
      for (std::size_t jj = 0; jj < tn; ++jj) {
        decode_values(q.column_codes(t0 + jj), b, e, bits, mapping, lut, codes.data(),
                      values.data());
        const float s = q.scale(g, t0 + jj);
        for (std::size_t kk = 0; kk < len; ++kk) tile[kk * tn + jj] = values[kk] * s;
      }
      for (std::size_t i = 0; i < m; ++i) {
        float* c = acc.data() + i * tile_n;
        const float* ai = a + i * k + b;
        for (std::size_t kk = 0; kk < len; ++kk) {
          const float av = ai[kk];
          const float* w = tile.data() + kk * tn;
          for (std::size_t jj = 0; jj < tn; ++jj) c[jj] += av * w[jj];
        }
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::memcpy(out + i * n + t0, acc.data() + i * tile_n, tn * sizeof(float));
    }
  }
}

}  // namespace

Activation::Activation(std::size_t m, std::size_t k, std::vector<float> data)
    : m_(m), k_(k), data_(std::move(data)) {
  if (m_ == 0 || k_ == 0) throw ShapeError("activation needs m >= 1 and k >= 1");
  if (data_.size() != m_ * k_) throw ShapeError("activation data length != m*k");
}

Tensor gemm_ref(const Activation& act, const Tensor& w, unsigned threads) {
  if (act.k() != w.rows()) {
    throw ShapeError("gemm_ref: activation k " + std::to_string(act.k()) + " != weight rows " +
                     std::to_string(w.rows()));
  }
  const std::size_t m = act.m();
  const std::size_t k = act.k();
  const std::size_t n = w.cols();
  std::vector<float> c(m * n, 0.0f);
  const float* a = act.data().data();
  const float* wd = w.data().data();
  parallel_for(n, threads, [&](std::size_t j0, std::size_t j1) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const float* wrow = wd + kk * n;
      for (std::size_t i = 0; i < m; ++i) {
        const float av = a[i * k + kk];
        float* crow = c.data() + i * n;
        for (std::size_t j = j0; j < j1; ++j) crow[j] += av * wrow[j];
      }
    }
  });
  return Tensor("output", m, n, std::move(c));
}

Tensor gemm_fused(const Activation& act, const PackedQuantTensor& q, const FusedOptions& opts,
                  GemmStats* stats) {
  if (act.k() != q.rows()) {
    throw ShapeError("gemm_fused: activation k " + std::to_string(act.k()) +
                     " != weight rows " + std::to_string(q.rows()));
  }
  if (q.codes().size() != q.column_bytes() * q.cols()) {
    throw CorruptionError("gemm_fused: packed stream length mismatch");
  }
  if (opts.tile_n == 0) throw InvalidArgument("tile_n must be positive");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = act.m();
  const std::size_t n = q.cols();
  std::vector<float> c(m * n, 0.0f);
  parallel_for(n, opts.threads, [&](std::size_t j0, std::size_t j1) {
    if (opts.order == AccumulationOrder::native) {
      fused_native(act, q, c.data(), j0, j1);
    } else {
      fused_matched(act, q, opts.tile_n, c.data(), j0, j1);
    }
  });
  if (stats != nullptr) {
    *stats = analytic_stats(m, q);
    stats->wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
  }
  return Tensor("output", m, n, std::move(c));
}

WeightTraffic weight_traffic(std::size_t k, std::size_t n, int bits, const GroupLayout& layout,
                             std::size_t bytes_per_scale) {
  check_bits(bits);
  WeightTraffic t;
  t.weight_bytes = static_cast<std::uint64_t>(packed_column_bytes(k, bits)) * n;
  t.scale_bytes = static_cast<std::uint64_t>(layout.num_scales()) * bytes_per_scale;
  t.fp16_bytes = 2ull * k * n;
  return t;
}

GemmStats analytic_stats(std::size_t m, const PackedQuantTensor& q) {
  const WeightTraffic t =
      weight_traffic(q.rows(), q.cols(), q.bits(), q.layout(), q.scheme().scale_bytes());
  GemmStats s;
  s.bytes_weights_read = t.weight_bytes;
  s.bytes_scales_read = t.scale_bytes;
  s.bytes_activations_read = 4ull * m * q.rows();
  s.bytes_output_written = 4ull * m * q.cols();
  s.flops = 2ull * m * q.rows() * q.cols();
  return s;
}

namespace {

template <typename Fn>
double median_ms(int runs, int warmups, Fn&& fn) {
  for (int i = 0; i < warmups; ++i) fn();
  std::vector<double> times;
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    times.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

}  // namespace

std::vector<BenchRow> bench_sweep(const BenchConfig& cfg) {
  if (cfg.m_values.empty()) throw InvalidArgument("bench_sweep: no m values");
  if (cfg.runs < 5) throw InvalidArgument("bench_sweep: at least 5 timed runs");
  if (cfg.warmups < 0) throw InvalidArgument("bench_sweep: negative warm-up count");
  for (const std::size_t m : cfg.m_values) {
    if (m == 0) throw ShapeError("bench_sweep: m must be positive");
  }
  const GroupLayout layout = cfg.group == 0
                                 ? GroupLayout::per_column(cfg.k, cfg.n)
                                 : GroupLayout::fixed_group(cfg.k, cfg.n, cfg.group);
  const Tensor w = synth_weights(cfg.k, cfg.n, Gaussian{0.0, 0.02}, cfg.seed, "bench");
  const PackedQuantTensor q =
      quantize(w, QuantScheme::linear(cfg.bits, ScaleStorage::f16), layout, cfg.threads);
  const Tensor dq = dequantize(q, cfg.threads);
  FusedOptions opts;
  opts.threads = cfg.threads;

  std::vector<BenchRow> rows;
  for (const std::size_t m : cfg.m_values) {
    std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ull * (m + 1)));
    std::normal_distribution<float> dist(0.0f, 1.0f);
    std::vector<float> data(m * cfg.k);
    for (float& x : data) x = dist(rng);
    const Activation act(m, cfg.k, std::move(data));
    BenchRow row;
    row.m = m;
    row.k = cfg.k;
    row.n = cfg.n;
    row.bits = cfg.bits;
    row.group = layout.group_size();
    row.fused_ms = median_ms(cfg.runs, cfg.warmups, [&] { gemm_fused(act, q, opts); });
    row.ref_ms = median_ms(cfg.runs, cfg.warmups, [&] { gemm_ref(act, dq, cfg.threads); });
    row.speedup = row.ref_ms / row.fused_ms;
    row.stats = analytic_stats(m, q);
    row.stats.wall_ms = row.fused_ms;
    rows.push_back(row);
  }
  return rows;
}

void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "m,k,n,bits,group,fused_ms,ref_ms,speedup,weight_bytes,scale_bytes\n";
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::defaultfloat << std::setprecision(10);
  for (const BenchRow& r : rows) {
    os << r.m << ',' << r.k << ',' << r.n << ',' << r.bits << ',' << r.group << ','
       << r.fused_ms << ',' << r.ref_ms << ',' << r.speedup << ',' << r.stats.bytes_weights_read
       << ',' << r.stats.bytes_scales_read << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

double geometric_mean(const std::vector<double>& values) {
  if (values.empty()) throw InvalidArgument("geometric mean of an empty list");
  double log_sum = 0.0;
  for (const double v : values) {
    if (!(v > 0.0)) throw InvalidArgument("geometric mean needs positive values");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

ScratchStats fused_scratch_stats() {
  return {g_scratch_peak.load(), g_scratch_allocs.load()};
}

void reset_fused_scratch_stats() {
  g_scratch_peak.store(0);
  g_scratch_allocs.store(0);
}

}  // namespace woqt
