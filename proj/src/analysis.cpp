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

#include "woqt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "woqt/errors.hpp"
#include "woqt/gemm.hpp"
#include "woqt/parallel.hpp"

namespace woqt {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

GroupLayout sweep_layout(const Tensor& t, std::size_t group) {
  if (group == kPerColumn || group == t.rows()) return GroupLayout::per_column(t.rows(), t.cols());
  return GroupLayout::fixed_group(t.rows(), t.cols(), group);
}

GroupLayout spec_layout(const WeightSpec& spec, std::size_t rows, std::size_t cols) {
  if (spec.kind == LayoutKind::adaptive) {
    throw InvalidArgument("footprint: adaptive specs need a resolved group size");
  }
  return make_layout(spec.kind, rows, cols, spec.group);
}

TensorFootprint exempt_entry(const std::string& name, std::size_t rows, std::size_t cols) {
  TensorFootprint f;
  f.name = name;
  f.rows = rows;
  f.cols = cols;
  f.exempt = true;
  f.fp16_bytes = fp16_bytes(rows, cols);
  f.bytes = f.fp16_bytes;
  return f;
}

TensorFootprint quantized_entry(const std::string& name, int bits, const GroupLayout& layout) {
  TensorFootprint f;
  f.name = name;
  f.rows = layout.rows();
  f.cols = layout.cols();
  f.bits = bits;
  f.group = layout.kind() == LayoutKind::per_tensor ? layout.rows() * layout.cols()
                                                    : layout.group_size();
  f.num_scales = layout.num_scales();
  f.fp16_bytes = fp16_bytes(f.rows, f.cols);
  f.bytes = quantized_bytes(f.rows, f.cols, bits, layout);
  return f;
}

void add(FootprintReport& r, TensorFootprint f) {
  r.fp16_bytes += f.fp16_bytes;
  r.bytes += f.bytes;
  r.tensors.push_back(std::move(f));
}

}  // namespace

ErrorStats error_stats(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("error_stats: shape mismatch");
  }
  ErrorStats s;
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]);
    sum += d * d;
    s.max_abs_err = std::max(s.max_abs_err, std::abs(d));
  }
  s.mse = sum / static_cast<double>(a.size());
  return s;
}

std::vector<MsePoint> mse_sweep(const Tensor& t, const QuantScheme& scheme,
                                const std::vector<std::size_t>& group_sizes, unsigned threads) {
  std::vector<GroupLayout> layouts;
  layouts.reserve(group_sizes.size());
  for (const std::size_t g : group_sizes) layouts.push_back(sweep_layout(t, g));
  std::vector<MsePoint> out(layouts.size());
  parallel_for(layouts.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Tensor back = dequantize(quantize(t, scheme, layouts[i]));
      const ErrorStats es = error_stats(t, back);
      out[i] = {layouts[i].group_size(), es.mse, es.max_abs_err};
    }
  });
  return out;
}

std::vector<MsePoint> mse_sweep(const Tensor& t, int bits, const std::vector<std::size_t>& group_sizes,
                                unsigned threads) {
  return mse_sweep(t, QuantScheme::linear(bits), group_sizes, threads);
}

DistributionStats skewness(const Tensor& t) {
  const std::size_t n = t.size();
  if (n < 3) throw InvalidArgument("skewness needs at least 3 elements");
  const auto data = t.data();
  DistributionStats s;
  s.count = n;
  double sum = 0.0;
  for (const float v : data) {
    sum += v;
    s.absmax = std::max(s.absmax, std::abs(static_cast<double>(v)));
  }
  s.mean = sum / static_cast<double>(n);
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (const float v : data) {
    const double d = static_cast<double>(v) - s.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  s.stddev = std::sqrt(m2);
  if (m2 > 0.0) {
    s.skewness = m3 / std::pow(m2, 1.5);
    s.excess_kurtosis = m4 / (m2 * m2) - 3.0;
  }
  s.histogram.assign(kHistogramBins, 0);
  for (const float v : data) {
    std::size_t bin = kHistogramBins / 2;
    if (s.absmax > 0.0) {
      const double pos = (static_cast<double>(v) + s.absmax) / (2.0 * s.absmax);
      bin = std::min(kHistogramBins - 1, static_cast<std::size_t>(pos * kHistogramBins));
    }
    ++s.histogram[bin];
  }
  return s;
}

std::uint64_t quantized_bytes(std::size_t rows, std::size_t cols, int bits,
                              const GroupLayout& layout) {
  if (layout.rows() != rows || layout.cols() != cols) {
    throw ShapeError("quantized_bytes: layout does not match the tensor shape");
  }
  const WeightTraffic t = weight_traffic(rows, cols, bits, layout, 2);
  return t.weight_bytes + t.scale_bytes;
}

FootprintReport footprint(const TensorBundle& bundle, const std::map<std::string, WeightSpec>& specs,
                          const std::set<std::string>& exempt) {
  for (const auto& [name, spec] : specs) {
    if (bundle.find(name) == nullptr) throw InvalidArgument("footprint: no tensor named '" + name + "'");
    if (exempt.count(name) != 0) {
      throw InvalidArgument("footprint: tensor '" + name + "' is both quantized and exempt");
    }
  }
  for (const std::string& name : exempt) {
    if (bundle.find(name) == nullptr) throw InvalidArgument("footprint: no tensor named '" + name + "'");
  }
  FootprintReport r;
  for (const BundleEntry& e : bundle.entries()) {
    const std::string& name = entry_name(e);
    const std::size_t rows = entry_rows(e);
    const std::size_t cols = entry_cols(e);
    const auto it = specs.find(name);
    if (it != specs.end()) {
      check_bits(it->second.bits);
      add(r, quantized_entry(name, it->second.bits, spec_layout(it->second, rows, cols)));
    } else if (exempt.count(name) != 0) {
      add(r, exempt_entry(name, rows, cols));
    } else {
      throw InvalidArgument("footprint: tensor '" + name + "' has no scheme and is not exempt");
    }
  }
  return r;
}

FootprintReport footprint(const TensorBundle& bundle) {
  FootprintReport r;
  for (const BundleEntry& e : bundle.entries()) {
    if (const auto* q = std::get_if<PackedQuantTensor>(&e)) {
      add(r, quantized_entry(q->name(), q->bits(), q->layout()));
    } else {
      add(r, exempt_entry(entry_name(e), entry_rows(e), entry_cols(e)));
    }
  }
  return r;
}

double fit_exempt_fraction(const std::vector<RatioObservation>& obs) {
  if (obs.empty()) throw InvalidArgument("fit_exempt_fraction: no observations");
  // residual_i = f * a_i + c_i with a_i = (1 - t_i) / r_i, c_i = (t_i - r_i) / r_i.
  double aa = 0.0, ac = 0.0;
  for (const RatioObservation& o : obs) {
    if (!(o.observed_ratio > 0.0)) throw InvalidArgument("fit_exempt_fraction: ratio must be > 0");
    const double a = (1.0 - o.tensor_ratio) / o.observed_ratio;
    const double c = (o.tensor_ratio - o.observed_ratio) / o.observed_ratio;
    aa += a * a;
    ac += a * c;
  }
  if (aa == 0.0) throw InvalidArgument("fit_exempt_fraction: degenerate observations");
  return std::clamp(-ac / aa, 0.0, 1.0);
}

std::vector<RangeLevel> range_diagnostics(const Tensor& t, std::size_t min_group, std::size_t levels) {
  return range_ladder(t, min_group, levels);
}

TensorQuantReport quant_report(const Tensor& original, const PackedQuantTensor& q, unsigned threads) {
  TensorQuantReport r;
  r.name = q.name();
  r.scheme = q.scheme().describe();
  r.layout = q.layout().describe();
  r.group = q.layout().group_size();
  const ErrorStats es = error_stats(original, dequantize(q, threads));
  r.mse = es.mse;
  r.max_abs_err = es.max_abs_err;
  const auto scales = q.scales();
  if (!scales.empty()) {
    double sum = 0.0;
    r.scale_min = scales[0];
    r.scale_max = scales[0];
    for (const float s : scales) {
      r.scale_min = std::min<double>(r.scale_min, s);
      r.scale_max = std::max<double>(r.scale_max, s);
      sum += s;
    }
    r.scale_mean = sum / static_cast<double>(scales.size());
  }
  r.fp16_bytes = fp16_bytes(q.rows(), q.cols());
  r.bytes = quantized_bytes(q.rows(), q.cols(), q.bits(), q.layout());
  return r;
}

void write_mse_csv(std::ostream& os, const std::string& tensor, const QuantScheme& scheme,
                   const std::vector<MsePoint>& points, bool header) {
  if (header) os << "tensor,bits,mapping,group,mse,max_abs_err\n";
  for (const MsePoint& p : points) {
    os << tensor << ',' << scheme.bits() << ',' << to_string(scheme.mapping()) << ',' << p.group
       << ',' << num(p.mse) << ',' << num(p.max_abs_err) << '\n';
  }
}

void write_stats_csv(std::ostream& os, const std::string& tensor, const DistributionStats& s,
                     bool header) {
  if (header) os << "tensor,count,mean,std,skewness,excess_kurtosis,absmax\n";
  os << tensor << ',' << s.count << ',' << num(s.mean) << ',' << num(s.stddev) << ','
     << num(s.skewness) << ',' << num(s.excess_kurtosis) << ',' << num(s.absmax) << '\n';
}

void write_histogram_csv(std::ostream& os, const DistributionStats& s) {
  os << "bin_left,bin_right,count\n";
  const double width = 2.0 * s.absmax / static_cast<double>(s.histogram.size());
  for (std::size_t b = 0; b < s.histogram.size(); ++b) {
    const double left = -s.absmax + width * static_cast<double>(b);
    os << num(left) << ',' << num(left + width) << ',' << s.histogram[b] << '\n';
  }
}

void write_footprint_csv(std::ostream& os, const FootprintReport& r) {
  os << "tensor,rows,cols,bits,group,num_scales,fp16_bytes,bytes,ratio\n";
  for (const TensorFootprint& t : r.tensors) {
    os << t.name << ',' << t.rows << ',' << t.cols << ',' << t.bits << ',' << t.group << ','
       << t.num_scales << ',' << t.fp16_bytes << ',' << t.bytes << ','
       << num(static_cast<double>(t.bytes) / static_cast<double>(t.fp16_bytes)) << '\n';
  }
  os << "total,,,,,," << r.fp16_bytes << ',' << r.bytes << ',' << num(r.ratio()) << '\n';
}

void write_range_csv(std::ostream& os, const std::string& tensor,
                     const std::vector<RangeLevel>& levels, bool header) {
  if (header) os << "tensor,level,parent_size,group_size,min_ratio,max_ratio,mean_ratio,groups\n";
  for (const RangeLevel& l : levels) {
    os << tensor << ',' << l.level << ',' << l.parent_size << ',' << l.group_size << ','
       << num(l.min_ratio) << ',' << num(l.max_ratio) << ',' << num(l.mean_ratio) << ','
       << l.groups << '\n';
  }
}

void write_quant_report_csv(std::ostream& os, const std::vector<TensorQuantReport>& reports) {
  os << "tensor,scheme,layout,group,mse,max_abs_err,scale_min,scale_max,scale_mean,fp16_bytes,"
        "bytes\n";
  for (const TensorQuantReport& r : reports) {
    os << r.name << ',' << r.scheme << ',' << r.layout << ',' << r.group << ',' << num(r.mse)
       << ',' << num(r.max_abs_err) << ',' << num(r.scale_min) << ',' << num(r.scale_max) << ','
       << num(r.scale_mean) << ',' << r.fp16_bytes << ',' << r.bytes << '\n';
  }
}

}  // namespace woqt
