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

#include "cli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "woqt/adaptive.hpp"
#include "woqt/analysis.hpp"
#include "woqt/container.hpp"
#include "woqt/costmodel.hpp"
#include "woqt/errors.hpp"
#include "woqt/gemm.hpp"
#include "woqt/quant.hpp"
#include "woqt/selection.hpp"
#include "woqt/synth.hpp"

namespace woqt::cli {
namespace {

struct RunConfig {
  std::string input;
  std::string output;
  int bits = 4;
  std::string mapping = "linear";
  std::string log_scale = "absmax";
  std::string granularity = "group";
  std::size_t group = 64;
  double alpha = kDefaultAlpha;
  std::size_t min_group = kDefaultMinGroup;
  std::string scale_dtype = "f16";
  std::string select = "all";
  std::uint64_t seed = 0;
  std::optional<unsigned> threads;
  std::string format = "csv";
  std::string report;

  // synth
  std::size_t rows = 256;
  std::size_t cols = 256;
  std::size_t layers = 0;
  std::string dist = "gaussian";
  double stddev = 0.02;
  std::size_t outliers = 4;
  double magnitude = 1.0;
  double skew = -1.8;

  // bench
  std::vector<std::string> shapes;
  std::size_t k = 0;
  std::size_t n = 0;
  std::string m_values = "1,2,4,8,16,32";
  std::string bench_group = "64";
  int runs = 5;
  int warmups = 2;
  std::string summary;

  // analyze
  std::string groups = "16,64,256,column";
  std::string what = "mse,stats,footprint,range";
  std::string out_dir;
  std::size_t levels = 0;

  // costmodel
  std::string table;
  std::string precision;
  std::string baseline;
  std::size_t batch = 1;
  std::string inputs;
  std::string outputs = "32,128";
  unsigned replicas = 0;
};

const CLI::Validator kPowerOfTwo(
    [](std::string& s) -> std::string {
      std::size_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size() || !std::has_single_bit(v)) {
        return "expected a power of two, got '" + s + "'";
      }
      return {};
    },
    "POW2");

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_size(const std::string& s, const std::string& what) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw InvalidArgument("bad " + what + " '" + s + "'");
  }
  return v;
}

std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& what) {
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(s)) out.push_back(parse_size(item, what));
  if (out.empty()) throw InvalidArgument("empty " + what + " list");
  return out;
}

// --threads, then WOQT_THREADS, then all cores (0).
unsigned resolve_thread_flag(const RunConfig& cfg) {
  if (cfg.threads) {
    if (*cfg.threads == 0) throw InvalidArgument("--threads must be at least 1");
    return *cfg.threads;
  }
  if (const char* env = std::getenv("WOQT_THREADS"); env != nullptr && *env != '\0') {
    const std::size_t v = parse_size(env, "WOQT_THREADS value");
    if (v == 0) throw InvalidArgument("WOQT_THREADS must be at least 1");
    return static_cast<unsigned>(v);
  }
  return 0;
}

QuantScheme scheme_of(const RunConfig& cfg) {
  const ScaleStorage storage = cfg.scale_dtype == "f32" ? ScaleStorage::f32 : ScaleStorage::f16;
  if (cfg.mapping == "log") {
    const LogScaleMode mode = cfg.log_scale == "mse" ? LogScaleMode::mse_optimal
                                                     : LogScaleMode::absmax;
    return QuantScheme::log(cfg.bits, mode, storage);
  }
  return QuantScheme::linear(cfg.bits, storage);
}

struct Resolved {
  GroupLayout layout;
  std::optional<AdaptiveReport> report;
};

Resolved resolve_layout(const RunConfig& cfg, const Tensor& t) {
  const LayoutKind kind = layout_kind_from_string(cfg.granularity);
  if (kind == LayoutKind::adaptive) {
    AdaptiveResult r = adapt_group_size(t, cfg.alpha, cfg.min_group);
    return {r.layout, std::move(r.report)};
  }
  return {make_layout(kind, t.rows(), t.cols(), cfg.group, cfg.min_group), std::nullopt};
}

Selection select(const TensorBundle& bundle, const RunConfig& cfg, std::ostream& err) {
  Selection sel = select_tensors(bundle, SelectionPolicy::parse(cfg.select));
  for (const std::string& w : sel.warnings) err << "warning: " << w << '\n';
  return sel;
}

void write_adaptive_csv(std::ostream& os,
                        const std::vector<std::pair<std::string, AdaptiveReport>>& reports) {
  os << "tensor,level,parent_size,group_size,min_ratio,max_ratio,mean_ratio,decision,"
        "final_group,hit_floor\n";
  for (const auto& [name, r] : reports) {
    for (const AdaptiveLevel& l : r.levels) {
      os << name << ',' << l.ratios.level << ',' << l.ratios.parent_size << ','
         << l.ratios.group_size << ',' << num(l.ratios.min_ratio) << ','
         << num(l.ratios.max_ratio) << ',' << num(l.ratios.mean_ratio) << ','
         << to_string(l.decision) << ',' << r.final_group << ',' << (r.hit_floor ? 1 : 0)
         << '\n';
    }
    if (r.levels.empty()) {
      os << name << ",0,,,,,,," << r.final_group << ',' << (r.hit_floor ? 1 : 0) << '\n';
    }
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  return f;
}

int cmd_synth(const RunConfig& cfg, std::ostream&, std::ostream&) {
  Distribution dist;
  if (cfg.dist == "gaussian") {
    dist = Gaussian{0.0, cfg.stddev};
  } else if (cfg.dist == "outliers") {
    dist = GaussianWithOutliers{0.0, cfg.stddev, cfg.outliers, cfg.magnitude};
  } else {
    dist = Skewed{cfg.skew, cfg.stddev};
  }
  TensorBundle bundle;
  if (cfg.layers == 0) {
    bundle.add(synth_weights(cfg.rows, cfg.cols, dist, cfg.seed, "weight"));
  } else {
    std::uint64_t stream = 0;
    for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
      for (const char* part : {"attn", "ffn"}) {
        const std::string name = "layers." + std::to_string(layer) + "." + part;
        const Tensor t = synth_weights(cfg.rows, cfg.cols, dist, cfg.seed + stream++, name);
        bundle.add(t.retagged({"layer=" + std::to_string(layer), std::string("part=") + part}));
      }
    }
  }
  save_bundle(bundle, cfg.output);
  return 0;
}

int cmd_quantize(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const unsigned threads = resolve_thread_flag(cfg);
  const QuantScheme scheme = scheme_of(cfg);
  const TensorBundle in = load_bundle(cfg.input);
  const Selection sel = select(in, cfg, err);
  const std::set<std::string> chosen(sel.names.begin(), sel.names.end());
  TensorBundle result;
  std::vector<TensorQuantReport> reports;
  std::vector<std::pair<std::string, AdaptiveReport>> adaptive;
  for (const BundleEntry& e : in.entries()) {
    const auto* t = std::get_if<Tensor>(&e);
    if (t == nullptr || chosen.count(t->name()) == 0) {
      if (t == nullptr && chosen.count(entry_name(e)) != 0) {
        err << "warning: '" << entry_name(e) << "' is already packed; passed through\n";
      }
      result.add(e);
      continue;
    }
    Resolved r = resolve_layout(cfg, *t);
    PackedQuantTensor q = quantize(*t, scheme, r.layout, threads);
    reports.push_back(quant_report(*t, q, threads));
    if (r.report) adaptive.emplace_back(t->name(), std::move(*r.report));
    result.add(std::move(q));
  }
  save_bundle(result, cfg.output);
  if (!cfg.report.empty()) {
    auto f = open_output(cfg.report);
    write_quant_report_csv(f, reports);
  } else {
    write_quant_report_csv(out, reports);
  }
  if (!adaptive.empty()) {
    if (cfg.report.empty()) out << '\n';
    write_adaptive_csv(out, adaptive);
  }
  return 0;
}

int cmd_dequantize(const RunConfig& cfg, std::ostream&, std::ostream&) {
  const unsigned threads = resolve_thread_flag(cfg);
  const TensorBundle in = load_bundle(cfg.input);
  TensorBundle result;
  for (const BundleEntry& e : in.entries()) {
    if (const auto* q = std::get_if<PackedQuantTensor>(&e)) {
      result.add(dequantize(*q, threads));
    } else {
      result.add(e);
    }
  }
  save_bundle(result, cfg.output);
  return 0;
}

std::vector<std::pair<std::size_t, std::size_t>> bench_shapes(const RunConfig& cfg) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  for (const std::string& s : cfg.shapes) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw InvalidArgument("shape must be KxN, got '" + s + "'");
    shapes.emplace_back(parse_size(s.substr(0, x), "K"), parse_size(s.substr(x + 1), "N"));
  }
  if (cfg.k != 0 || cfg.n != 0) {
    if (cfg.k == 0 || cfg.n == 0) throw InvalidArgument("--k and --n must be given together");
    shapes.emplace_back(cfg.k, cfg.n);
  }
  if (shapes.empty()) throw InvalidArgument("bench needs --shape KxN or --k/--n");
  return shapes;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto shapes = bench_shapes(cfg);
  const auto ms = parse_sizes(cfg.m_values, "m value");
  std::vector<BenchRow> rows;
  for (const auto& [k, n] : shapes) {
    BenchConfig bc;
    bc.k = k;
    bc.n = n;
    bc.bits = cfg.bits;
    bc.group = cfg.bench_group == "column" ? 0 : parse_size(cfg.bench_group, "group");
    bc.m_values = ms;
    bc.runs = cfg.runs;
    bc.warmups = cfg.warmups;
    bc.threads = resolve_thread_flag(cfg);
    bc.seed = cfg.seed;
    const auto shape_rows = bench_sweep(bc);
    rows.insert(rows.end(), shape_rows.begin(), shape_rows.end());
    err << "bench " << k << 'x' << n << " done\n";
  }
  if (!cfg.output.empty()) {
    auto f = open_output(cfg.output);
    write_bench_csv(f, rows);
  } else {
    write_bench_csv(out, rows);
  }
  if (!cfg.summary.empty()) {
    auto f = open_output(cfg.summary);
    f << "m,shapes,geomean_speedup\n";
    for (const std::size_t m : ms) {
      std::vector<double> speedups;
      for (const BenchRow& r : rows) {
        if (r.m == m) speedups.push_back(r.speedup);
      }
      f << m << ',' << speedups.size() << ',' << num(geometric_mean(speedups)) << '\n';
    }
  }
  return 0;
}

std::string file_safe(const std::string& name) {
  std::string s = name;
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) c = '_';
  }
  return s;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const unsigned threads = resolve_thread_flag(cfg);
  const QuantScheme scheme = scheme_of(cfg);
  const TensorBundle bundle = load_bundle(cfg.input);
  const Selection sel = select(bundle, cfg, err);
  std::set<std::string> what;
  for (const std::string& w : split_list(cfg.what)) {
    if (w != "mse" && w != "stats" && w != "footprint" && w != "range") {
      throw InvalidArgument("unknown analysis '" + w + "'");
    }
    what.insert(w);
  }
  std::vector<std::size_t> groups;
  for (const std::string& g : split_list(cfg.groups)) {
    groups.push_back(g == "column" ? kPerColumn : parse_size(g, "group size"));
  }

  std::ostringstream mse_csv, stats_csv, range_csv;
  mse_csv << "tensor,bits,mapping,group,mse,max_abs_err\n";
  stats_csv << "tensor,count,mean,std,skewness,excess_kurtosis,absmax\n";
  range_csv << "tensor,level,parent_size,group_size,min_ratio,max_ratio,mean_ratio,groups\n";
  std::map<std::string, DistributionStats> histograms;
  std::map<std::string, WeightSpec> specs;
  const std::set<std::string> chosen(sel.names.begin(), sel.names.end());
  std::set<std::string> exempt;

  for (const BundleEntry& e : bundle.entries()) {
    const std::string& name = entry_name(e);
    const auto* packed = std::get_if<PackedQuantTensor>(&e);
    if (packed != nullptr) {
      const GroupLayout& l = packed->layout();
      const LayoutKind kind = l.kind() == LayoutKind::adaptive ? LayoutKind::fixed_group : l.kind();
      specs[name] = {packed->bits(), kind, l.group_size()};
    }
    if (chosen.count(name) == 0) {
      if (packed == nullptr) exempt.insert(name);
      continue;
    }
    const Tensor t = packed != nullptr ? dequantize(*packed, threads) : std::get<Tensor>(e);
    if (packed == nullptr && what.count("footprint") != 0) {
      const GroupLayout l = resolve_layout(cfg, t).layout;
      const LayoutKind kind = l.kind() == LayoutKind::adaptive ? LayoutKind::fixed_group : l.kind();
      specs[name] = {cfg.bits, kind, l.group_size()};
    }
    if (what.count("mse") != 0) {
      write_mse_csv(mse_csv, name, scheme, mse_sweep(t, scheme, groups, threads), false);
    }
    if (what.count("stats") != 0) {
      const DistributionStats s = skewness(t);
      write_stats_csv(stats_csv, name, s, false);
      histograms.emplace(name, s);
    }
    if (what.count("range") != 0) {
      write_range_csv(range_csv, name, range_diagnostics(t, cfg.min_group, cfg.levels), false);
    }
  }

  std::ostringstream fp_csv;
  if (what.count("footprint") != 0) write_footprint_csv(fp_csv, footprint(bundle, specs, exempt));

  const std::vector<std::pair<std::string, std::string>> sections = {
      {"mse", mse_csv.str()}, {"stats", stats_csv.str()}, {"footprint", fp_csv.str()},
      {"range", range_csv.str()}};
  if (!cfg.out_dir.empty()) {
    const std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& [key, text] : sections) {
      if (what.count(key) == 0) continue;
      auto f = open_output(dir / (key + ".csv"));
      f << text;
    }
    for (const auto& [name, s] : histograms) {
      auto f = open_output(dir / ("histogram_" + file_safe(name) + ".csv"));
      write_histogram_csv(f, s);
    }
  } else {
    bool first = true;
    for (const auto& [key, text] : sections) {
      if (what.count(key) == 0) continue;
      if (!first) out << '\n';
      out << text;
      first = false;
    }
  }
  return 0;
}

int cmd_costmodel(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const std::vector<LatencyTable> tables = load_latency_csv(cfg.table);
  std::vector<const LatencyTable*> chosen;
  if (cfg.precision.empty()) {
    for (const LatencyTable& t : tables) chosen.push_back(&t);
  } else {
    for (const std::string& p : split_list(cfg.precision)) chosen.push_back(&find_table(tables, p));
  }
  const LatencyTable* base = cfg.baseline.empty() ? nullptr : &find_table(tables, cfg.baseline);
  const auto outputs = parse_sizes(cfg.outputs, "output length");

  out << "precision,gpus,replicas,batch,input_len,output_len,end_to_end_ms,per_instance_tps,"
         "per_node_tps,per_node_tps_rounded";
  if (base != nullptr) out << ",speedup";
  out << '\n';
  for (const LatencyTable* t : chosen) {
    std::vector<std::size_t> inputs;
    if (!cfg.inputs.empty()) {
      inputs = parse_sizes(cfg.inputs, "input length");
    } else {
      for (const LatencyRow& r : t->rows()) {
        if (r.batch == cfg.batch &&
            std::find(inputs.begin(), inputs.end(), r.input_len) == inputs.end()) {
          inputs.push_back(r.input_len);
        }
      }
      if (inputs.empty()) {
        throw LookupError("table '" + t->precision() + "' has no rows for batch " +
                          std::to_string(cfg.batch));
      }
    }
    const unsigned replicas = cfg.replicas != 0 ? cfg.replicas : t->replicas();
    for (const std::size_t in_len : inputs) {
      for (const std::size_t out_len : outputs) {
        const double ms = end_to_end_ms(*t, cfg.batch, in_len, out_len);
        const ThroughputResult r = node_throughput(*t, cfg.batch, in_len, out_len, replicas);
        out << t->precision() << ',' << t->gpus() << ',' << replicas << ',' << cfg.batch << ','
            << in_len << ',' << out_len << ',' << num(ms) << ',' << num(r.per_instance) << ','
            << num(r.per_node) << ',' << r.per_node_rounded;
        if (base != nullptr) {
          const unsigned base_replicas = cfg.replicas != 0 ? cfg.replicas : base->replicas();
          const ThroughputResult b =
              node_throughput(*base, cfg.batch, in_len, out_len, base_replicas);
          out << ',' << num(r.per_node / b.per_node);
        }
        out << '\n';
      }
    }
  }
  return 0;
}

void add_scheme_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--bits", cfg.bits, "Bit width")->check(CLI::Range(kMinBits, kMaxBits))
      ->capture_default_str();
  sub->add_option("--mapping", cfg.mapping, "Code mapping")
      ->check(CLI::IsMember({"linear", "log"}))->capture_default_str();
  sub->add_option("--log-scale", cfg.log_scale, "Log mapping scale choice")
      ->check(CLI::IsMember({"absmax", "mse"}))->capture_default_str();
  sub->add_option("--granularity", cfg.granularity, "Scale granularity")
      ->check(CLI::IsMember({"tensor", "column", "group", "adaptive"}))->capture_default_str();
  sub->add_option("--group", cfg.group, "Group size for --granularity group")
      ->check(kPowerOfTwo)->capture_default_str();
  sub->add_option("--alpha", cfg.alpha, "Adaptive range-ratio threshold")
      ->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sub->add_option("--min-group", cfg.min_group, "Smallest adaptive group")
      ->check(kPowerOfTwo)->capture_default_str();
  sub->add_option("--scale-dtype", cfg.scale_dtype, "Stored scale precision")
      ->check(CLI::IsMember({"f16", "f32"}))->capture_default_str();
  sub->add_option("--select", cfg.select, "Tensor selection predicate")->capture_default_str();
}

void add_common_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", cfg.threads, "Worker threads (default: WOQT_THREADS or all cores)");
  sub->add_option("--format", cfg.format, "Report format")
      ->check(CLI::IsMember({"csv"}))->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Weight-only quantization toolkit", "woqt"};
  app.require_subcommand(1);

  CLI::App* synth = app.add_subcommand("synth", "Write a bundle of synthetic weights");
  synth->add_option("output", cfg.output, "Output bundle")->required();
  synth->add_option("--rows", cfg.rows, "Rows (K)")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--cols", cfg.cols, "Columns (N)")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--layers", cfg.layers, "Layers of attn/ffn pairs (0: one tensor)")
      ->capture_default_str();
  synth->add_option("--dist", cfg.dist, "Distribution")
      ->check(CLI::IsMember({"gaussian", "outliers", "skewed"}))->capture_default_str();
  synth->add_option("--std", cfg.stddev, "Standard deviation or scale")->capture_default_str();
  synth->add_option("--outliers", cfg.outliers, "Planted outliers")->capture_default_str();
  synth->add_option("--magnitude", cfg.magnitude, "Outlier magnitude")->capture_default_str();
  synth->add_option("--skew", cfg.skew, "Target skewness")->capture_default_str();
  add_common_options(synth, cfg);

  CLI::App* quant = app.add_subcommand("quantize", "Quantize selected tensors of a bundle");
  quant->add_option("input", cfg.input, "Input bundle")->required();
  quant->add_option("output", cfg.output, "Output bundle")->required();
  quant->add_option("--report", cfg.report, "Write the per-tensor report here");
  add_scheme_options(quant, cfg);
  add_common_options(quant, cfg);

  CLI::App* deq = app.add_subcommand("dequantize", "Expand packed tensors back to f32");
  deq->add_option("input", cfg.input, "Input bundle")->required();
  deq->add_option("output", cfg.output, "Output bundle")->required();
  add_common_options(deq, cfg);

  CLI::App* bench = app.add_subcommand("bench", "Fused GEMM versus reference timing sweep");
  bench->add_option("--shape", cfg.shapes, "Weight shape KxN (repeatable)");
  bench->add_option("--k", cfg.k, "Weight rows");
  bench->add_option("--n", cfg.n, "Weight columns");
  bench->add_option("--bits", cfg.bits, "Bit width")->check(CLI::Range(kMinBits, kMaxBits))
      ->capture_default_str();
  bench->add_option("--group", cfg.bench_group, "Group size or 'column'")->capture_default_str();
  bench->add_option("--m", cfg.m_values, "Comma-separated activation rows")->capture_default_str();
  bench->add_option("--runs", cfg.runs, "Timed runs per cell (>= 5)")
      ->check(CLI::Range(5, 1000))->capture_default_str();
  bench->add_option("--warmups", cfg.warmups, "Untimed warm-up runs")
      ->check(CLI::Range(0, 1000))->capture_default_str();
  bench->add_option("--output", cfg.output, "CSV path (default: standard output)");
  bench->add_option("--summary", cfg.summary, "Per-m geometric mean speedup CSV");
  add_common_options(bench, cfg);

  CLI::App* analyze = app.add_subcommand("analyze", "MSE, distribution, footprint, range reports");
  analyze->add_option("input", cfg.input, "Input bundle")->required();
  analyze->add_option("--groups", cfg.groups, "Group sizes for the MSE sweep")
      ->capture_default_str();
  analyze->add_option("--what", cfg.what, "Reports to produce")->capture_default_str();
  analyze->add_option("--out-dir", cfg.out_dir, "Write one CSV per report here");
  analyze->add_option("--levels", cfg.levels, "Range ladder depth (0: to the floor)")
      ->capture_default_str();
  add_scheme_options(analyze, cfg);
  add_common_options(analyze, cfg);

  CLI::App* cost = app.add_subcommand("costmodel", "End-to-end latency and node throughput");
  cost->add_option("--table", cfg.table, "Latency CSV")->required();
  cost->add_option("--precision", cfg.precision, "Comma-separated table labels (default: all)");
  cost->add_option("--baseline", cfg.baseline, "Label to compute speedups against");
  cost->add_option("--batch", cfg.batch, "Batch size")->check(CLI::PositiveNumber)
      ->capture_default_str();
  cost->add_option("--input", cfg.inputs, "Comma-separated input lengths (default: all)");
  cost->add_option("--output", cfg.outputs, "Comma-separated output lengths")
      ->capture_default_str();
  cost->add_option("--replicas", cfg.replicas, "Replicas per node (default: 8 / gpus)")
      ->check(CLI::PositiveNumber);
  add_common_options(cost, cfg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth->parsed()) return cmd_synth(cfg, out, err);
    if (quant->parsed()) return cmd_quantize(cfg, out, err);
    if (deq->parsed()) return cmd_dequantize(cfg, out, err);
    if (bench->parsed()) return cmd_bench(cfg, out, err);
    if (analyze->parsed()) return cmd_analyze(cfg, out, err);
    if (cost->parsed()) return cmd_costmodel(cfg, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace woqt::cli
