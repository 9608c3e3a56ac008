#include "moldiv/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "moldiv/diversity.hpp"
#include "moldiv/oracle.hpp"
#include "moldiv/rnd.hpp"
#include "moldiv/rng.hpp"

namespace moldiv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view value, std::string_view key, std::string_view origin, int line) {
  T out{};
  const std::string buf(value);
  const char* begin = buf.c_str();
  char* end = nullptr;
  errno = 0;
  if constexpr (std::is_floating_point_v<T>) {
    out = static_cast<T>(std::strtod(begin, &end));
  } else if constexpr (std::is_signed_v<T>) {
    out = static_cast<T>(std::strtoll(begin, &end, 10));
  } else {
    out = static_cast<T>(std::strtoull(begin, &end, 10));
  }
  if (end == begin || *end != '\0' || errno == ERANGE) {
    throw ConfigError(std::string(origin) + ":" + std::to_string(line) + ": bad value for '" +
                      std::string(key) + "': " + buf);
  }
  return out;
}

// Fixed-format doubles so identical runs serialize identically.
std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}

}  // namespace

ShapingParams RunConfig::shaping_params() const {
  ShapingParams p;
  p.h = h;
  p.m = m;
  p.D = D;
  p.c = c;
  p.c_tanh = c_tanh;
  p.coreset_size = coreset_size;
  return p;
}

SigmaParams RunConfig::sigma_params() const {
  SigmaParams p;
  p.sigma_init = sigma_init;
  p.margin = sigma_margin;
  p.window = sigma_window;
  p.d_min = d_min;
  return p;
}

RunConfig parse_config_text(std::string_view text, std::string_view origin) {
  RunConfig cfg;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got: " + std::string(line));
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": empty key or value");
    }

    if (key == "oracle") {
      cfg.oracle = value;
    } else if (key == "strategy") {
      cfg.strategy = value;
    } else if (key == "steps") {
      cfg.steps = parse_number<int>(value, key, origin, line_no);
    } else if (key == "batch") {
      cfg.batch = parse_number<int>(value, key, origin, line_no);
    } else if (key == "max_tokens") {
      cfg.max_tokens = parse_number<int>(value, key, origin, line_no);
    } else if (key == "seed") {
      cfg.seed = parse_number<std::uint64_t>(value, key, origin, line_no);
    } else if (key == "reruns") {
      cfg.reruns = parse_number<int>(value, key, origin, line_no);
    } else if (key == "h") {
      cfg.h = parse_number<double>(value, key, origin, line_no);
    } else if (key == "m") {
      cfg.m = parse_number<int>(value, key, origin, line_no);
    } else if (key == "D") {
      cfg.D = parse_number<double>(value, key, origin, line_no);
    } else if (key == "c") {
      cfg.c = parse_number<double>(value, key, origin, line_no);
    } else if (key == "c_tanh") {
      cfg.c_tanh = parse_number<double>(value, key, origin, line_no);
    } else if (key == "coreset_size") {
      cfg.coreset_size = parse_number<int>(value, key, origin, line_no);
    } else if (key == "vocab") {
      cfg.vocab = parse_number<int>(value, key, origin, line_no);
    } else if (key == "emb") {
      cfg.emb = parse_number<int>(value, key, origin, line_no);
    } else if (key == "hidden") {
      cfg.hidden = parse_number<int>(value, key, origin, line_no);
    } else if (key == "layers") {
      cfg.layers = parse_number<int>(value, key, origin, line_no);
    } else if (key == "lr") {
      cfg.lr = parse_number<double>(value, key, origin, line_no);
    } else if (key == "sigma_init") {
      cfg.sigma_init = parse_number<double>(value, key, origin, line_no);
    } else if (key == "sigma_margin") {
      cfg.sigma_margin = parse_number<double>(value, key, origin, line_no);
    } else if (key == "sigma_window") {
      cfg.sigma_window = parse_number<int>(value, key, origin, line_no);
    } else if (key == "d_min") {
      cfg.d_min = parse_number<double>(value, key, origin, line_no);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "prior") {
      cfg.prior = value;
    } else {
      throw ConfigError(std::string(origin) + ":" + std::to_string(line_no) + ": unknown key '" +
                        std::string(key) + "'");
    }
  }

  if (cfg.steps <= 0 || cfg.batch <= 0 || cfg.max_tokens < 2 || cfg.reruns <= 0 ||
      cfg.m <= 0 || cfg.h <= 0.0 || cfg.h >= 1.0 || cfg.D <= 0.0 || cfg.D > 1.0 ||
      cfg.coreset_size <= 0 || cfg.vocab < Vocabulary::kCoreSize || cfg.emb <= 0 ||
      cfg.hidden <= 0 || cfg.layers <= 0 || cfg.lr <= 0.0 || cfg.sigma_init < 0.0 ||
      cfg.sigma_margin < 0.0 || cfg.sigma_window <= 0 || cfg.d_min <= 0.0) {
    throw ConfigError(std::string(origin) + ": values out of range");
  }
  if (!strategy_from_name(cfg.strategy).has_value()) {
    throw ConfigError(std::string(origin) + ": unknown strategy '" + cfg.strategy + "'");
  }
  try {
    resolve_oracle(cfg.oracle);
  } catch (const std::exception& e) {
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

PolicyNet load_prior(const RunConfig& cfg) {
  if (!std::filesystem::exists(cfg.prior)) {
    throw CheckpointMissing("prior checkpoint not found: " + cfg.prior);
  }
  return load_checkpoint(cfg.prior);
}

// ---------------------------------------------------------------------------
// The generative loop
// ---------------------------------------------------------------------------

namespace {

BatchMolecule molecule_from_tokens(std::span<const int> tokens, const Vocabulary& vocab,
                                   const OracleSpec& oracle) {
  BatchMolecule mol;
  const ParseResult parsed = parse(tokens, vocab);
  if (!parsed.ok()) return mol;  // reward stays -1
  mol.valid = true;
  mol.canonical = canonical_string(*parsed.graph);
  mol.mol_scaffold = molecular_scaffold(*parsed.graph);
  mol.topo_scaffold = topological_scaffold(*parsed.graph);
  mol.fp = fingerprint(*parsed.graph);
  mol.reward = oracle.evaluate_graph(*parsed.graph);
  return mol;
}

void write_row(std::ofstream& out, const StepRecord& r) {
  out << r.step << ',' << fmt(r.mean_extrinsic) << ',' << fmt(r.mean_shaped) << ',' << r.actives
      << ',' << r.mol_scaffolds << ',' << r.topo_scaffolds << ',' << r.diverse_actives << ','
      << fmt(r.sigma) << ',' << fmt(r.loss) << ',' << fmt(r.valid_frac) << '\n';
  out.flush();
}

}  // namespace

RunSummary run_single(const RunConfig& cfg, std::uint64_t seed, const PolicyNet& prior) {
  const Strategy strategy = *strategy_from_name(cfg.strategy);
  const OracleSpec oracle = resolve_oracle(cfg.oracle);
  const ShapingParams shaping = cfg.shaping_params();
  const SigmaParams sigma_params = cfg.sigma_params();
  const Vocabulary vocab(prior.dims.vocab - Vocabulary::kCoreSize);
  const bool wants_rnd = strategy == Strategy::RND || strategy == Strategy::TanhRND;

  std::filesystem::create_directories(cfg.output_dir);
  RunSummary summary;
  summary.seed = seed;
  summary.csv_path = cfg.output_dir + "/run_" + cfg.strategy + "_seed" + std::to_string(seed) + ".csv";
  std::ofstream csv(summary.csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + summary.csv_path);
  csv << kCsvHeader << '\n';
  csv.flush();

  PolicyNet agent = prior;
  Adam opt;
  opt.lr = cfg.lr;
  AdamState opt_state;
  ScaffoldMemory memory;
  SigmaState sigma;
  sigma.sigma = sigma_params.sigma_init;
  RndState rnd;
  if (wants_rnd) rnd = make_rnd_state(prior, mix64(seed, 0xd157ull));

  for (int step = 1; step <= cfg.steps; ++step) {
    const std::uint64_t step_seed = mix64(seed, static_cast<std::uint64_t>(step));

    auto batch = sample_batch(agent, cfg.batch, cfg.max_tokens, step_seed);
    std::vector<std::vector<int>> seqs;
    seqs.reserve(batch.size());
    for (const auto& traj : batch) seqs.push_back(traj.tokens);
    const auto prior_ll = log_likelihood_batch(prior, seqs);
    for (std::size_t b = 0; b < batch.size(); ++b) batch[b].prior_loglik = prior_ll[b];

    std::vector<BatchMolecule> mols;
    mols.reserve(batch.size());
    std::vector<double> extrinsic(batch.size());
    int valid = 0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      mols.push_back(molecule_from_tokens(batch[b].tokens, vocab, oracle));
      extrinsic[b] = mols.back().reward;
      if (mols.back().valid) ++valid;
    }

    std::vector<double> deltas;
    if (wants_rnd) deltas = rnd_delta_batch(rnd, seqs);
    const auto shaped =
        shape_batch(strategy, shaping, memory, mols, step_seed, wants_rnd ? &deltas : nullptr);

    double loss = 0.0;
    try {
      loss = gradient_step(agent, batch, shaped, sigma.sigma, opt, opt_state);
    } catch (const NonFiniteGradient& e) {
      summary.aborted = true;
      summary.error = e.what();
      break;
    }

    if (wants_rnd) {
      std::vector<std::vector<int>> active_seqs;
      for (std::size_t b = 0; b < batch.size(); ++b) {
        if (mols[b].valid && mols[b].reward >= shaping.h) active_seqs.push_back(batch[b].tokens);
      }
      rnd_train(rnd, active_seqs);
    }

    std::vector<double> residuals(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      residuals[b] = batch[b].prior_loglik + sigma.sigma * shaped[b] - batch[b].agent_loglik;
    }
    sigma_observe(sigma, residuals, extrinsic);
    if (sigma_update(sigma, sigma_params)) {
      agent = prior;
      opt_state.reset();
    }

    StepRecord rec;
    rec.step = step;
    double ext_sum = 0.0, shaped_sum = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      ext_sum += extrinsic[b];
      shaped_sum += shaped[b];
    }
    rec.mean_extrinsic = ext_sum / static_cast<double>(batch.size());
    rec.mean_shaped = shaped_sum / static_cast<double>(batch.size());
    rec.actives = static_cast<long long>(memory.actives().size());
    const auto counts = count_scaffolds(memory);
    rec.mol_scaffolds = counts.molecular;
    rec.topo_scaffolds = counts.topological;
    rec.diverse_actives = diverse_actives_count(memory);
    rec.sigma = sigma.sigma;
    rec.loss = loss;
    rec.valid_frac = static_cast<double>(valid) / static_cast<double>(batch.size());
    write_row(csv, rec);
    summary.records.push_back(rec);
  }

  if (!summary.records.empty()) {
    const auto& last = summary.records.back();
    summary.actives = last.actives;
    summary.mol_scaffolds = last.mol_scaffolds;
    summary.topo_scaffolds = last.topo_scaffolds;
    summary.diverse_actives = last.diverse_actives;
    summary.final_sigma = last.sigma;
    const std::size_t tail = std::min<std::size_t>(100, summary.records.size());
    double sum = 0.0;
    for (std::size_t i = summary.records.size() - tail; i < summary.records.size(); ++i) {
      sum += summary.records[i].mean_extrinsic;
    }
    summary.tail_mean_extrinsic = sum / static_cast<double>(tail);
  }

  save_checkpoint(agent, cfg.output_dir + "/agent_" + cfg.strategy + "_seed" + std::to_string(seed) +
                             ".ckpt");
  return summary;
}

std::vector<RunSummary> run_all(const RunConfig& cfg) {
  const PolicyNet prior = load_prior(cfg);
  if (prior.dims.vocab < Vocabulary::kCoreSize) {
    throw ConfigError("prior checkpoint vocabulary is smaller than the grammar core");
  }

  std::vector<RunSummary> summaries(static_cast<std::size_t>(cfg.reruns));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(cfg.reruns));
  if (workers <= 1) {
    for (int k = 0; k < cfg.reruns; ++k) {
      summaries[static_cast<std::size_t>(k)] =
          run_single(cfg, cfg.seed + static_cast<std::uint64_t>(k), prior);
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int k = next.fetch_add(1); k < cfg.reruns; k = next.fetch_add(1)) {
          summaries[static_cast<std::size_t>(k)] =
              run_single(cfg, cfg.seed + static_cast<std::uint64_t>(k), prior);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::ofstream out(cfg.output_dir + "/summary_" + cfg.strategy + ".csv", std::ios::binary);
  out << "seed,actives,mol_scaffolds,topo_scaffolds,diverse_actives,tail_mean_extrinsic,"
         "final_sigma,aborted\n";
  for (const auto& s : summaries) {
    out << s.seed << ',' << s.actives << ',' << s.mol_scaffolds << ',' << s.topo_scaffolds << ','
        << s.diverse_actives << ',' << fmt(s.tail_mean_extrinsic) << ',' << fmt(s.final_sigma)
        << ',' << (s.aborted ? 1 : 0) << '\n';
  }
  return summaries;
}

// ---------------------------------------------------------------------------
// Statistics and comparison
// ---------------------------------------------------------------------------

std::vector<double> trailing_moving_average(const std::vector<double>& xs, int window) {
  std::vector<double> out(xs.size(), 0.0);
  if (window < 1) window = 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= static_cast<std::size_t>(window)) sum -= xs[i - static_cast<std::size_t>(window)];
    const std::size_t n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

double quantile_of(std::vector<double> xs, double p) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const double idx = p * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

double median_of(std::vector<double> xs) { return quantile_of(std::move(xs), 0.5); }

CompareResult compare_runs(const std::vector<RunConfig>& cfgs, const std::vector<std::string>& labels,
                           const std::string& out_dir, int ma_window) {
  if (cfgs.size() != labels.size()) throw std::invalid_argument("one label per config");
  std::filesystem::create_directories(out_dir);

  CompareResult result;
  struct MetricSamples {
    std::vector<double> mol, topo, diverse;
  };
  std::vector<MetricSamples> samples(cfgs.size());

  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    RunConfig cfg = cfgs[i];
    cfg.output_dir = out_dir + "/" + labels[i];
    const auto summaries = run_all(cfg);

    std::vector<double> per_step_sum;
    int completed = 0;
    for (const auto& s : summaries) {
      if (s.aborted) continue;
      samples[i].mol.push_back(static_cast<double>(s.mol_scaffolds));
      samples[i].topo.push_back(static_cast<double>(s.topo_scaffolds));
      samples[i].diverse.push_back(static_cast<double>(s.diverse_actives));
      if (per_step_sum.size() < s.records.size()) per_step_sum.resize(s.records.size(), 0.0);
      for (std::size_t t = 0; t < s.records.size(); ++t) {
        per_step_sum[t] += s.records[t].mean_extrinsic;
      }
      ++completed;
    }
    std::vector<double> curve(per_step_sum.size(), 0.0);
    for (std::size_t t = 0; t < curve.size(); ++t) {
      curve[t] = completed ? per_step_sum[t] / static_cast<double>(completed) : 0.0;
    }
    result.curves.emplace_back(labels[i], trailing_moving_average(curve, ma_window));

    const auto add_rows = [&](const char* metric, const std::vector<double>& xs) {
      CompareRow row;
      row.label = labels[i];
      row.metric = metric;
      row.median = median_of(xs);
      double mean = 0.0;
      for (double x : xs) mean += x;
      row.mean = xs.empty() ? 0.0 : mean / static_cast<double>(xs.size());
      row.iqr = quantile_of(xs, 0.75) - quantile_of(xs, 0.25);
      result.rows.push_back(row);
    };
    add_rows("mol_scaffolds", samples[i].mol);
    add_rows("topo_scaffolds", samples[i].topo);
    add_rows("diverse_actives", samples[i].diverse);
  }

  std::ofstream table(out_dir + "/compare_summary.csv", std::ios::binary);
  table << "label,metric,median,mean,iqr\n";
  for (const auto& row : result.rows) {
    table << row.label << ',' << row.metric << ',' << fmt(row.median) << ',' << fmt(row.mean)
          << ',' << fmt(row.iqr) << '\n';
  }

  std::ofstream curves(out_dir + "/compare_curves.csv", std::ios::binary);
  curves << "step";
  for (const auto& [label, _] : result.curves) curves << ',' << label;
  curves << '\n';
  std::size_t max_len = 0;
  for (const auto& [_, xs] : result.curves) max_len = std::max(max_len, xs.size());
  for (std::size_t t = 0; t < max_len; ++t) {
    curves << (t + 1);
    for (const auto& [_, xs] : result.curves) {
      curves << ',';
      if (t < xs.size()) curves << fmt(xs[t]);
    }
    curves << '\n';
  }

  write_line_svg(out_dir + "/compare_curves.svg", result.curves,
                 "Moving-average extrinsic reward", "mean extrinsic (MA)");
  const auto box_for = [&](const char* metric, auto member) {
    std::vector<std::pair<std::string, std::vector<double>>> groups;
    for (std::size_t i = 0; i < cfgs.size(); ++i) groups.emplace_back(labels[i], samples[i].*member);
    write_box_svg(out_dir + "/compare_box_" + metric + ".svg", groups, metric);
  };
  box_for("mol_scaffolds", &MetricSamples::mol);
  box_for("topo_scaffolds", &MetricSamples::topo);
  box_for("diverse_actives", &MetricSamples::diverse);
  return result;
}

void plot_csvs(const std::vector<std::string>& csv_paths, const std::string& out_svg, int ma_window) {
  std::vector<std::pair<std::string, std::vector<double>>> series;
  for (const auto& path : csv_paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
    // Locate the mean_extrinsic column by header name.
    int col = -1, idx = 0;
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      if (cell == "mean_extrinsic") col = idx;
      ++idx;
    }
    if (col < 0) throw std::runtime_error(path + ": no mean_extrinsic column");
    std::vector<double> xs;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream row(line);
      int k = 0;
      while (std::getline(row, cell, ',')) {
        if (k == col) xs.push_back(std::strtod(cell.c_str(), nullptr));
        ++k;
      }
    }
    series.emplace_back(std::filesystem::path(path).stem().string(),
                        trailing_moving_average(xs, ma_window));
  }
  write_line_svg(out_svg, series, "Moving-average extrinsic reward", "mean extrinsic (MA)");
}

// ---------------------------------------------------------------------------
// SVG output
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Frame {
  double width = 860, height = 520;
  double left = 70, right = 840, top = 50, bottom = 470;

  double x(double frac) const { return left + frac * (right - left); }
  double y(double frac) const { return bottom - frac * (bottom - top); }
};

void svg_header(std::ofstream& out, const Frame& f, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\""
      << f.height << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << (f.width / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">"
      << title << "</text>\n"
      << "<line x1=\"" << f.left << "\" y1=\"" << f.bottom << "\" x2=\"" << f.right << "\" y2=\""
      << f.bottom << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << f.left << "\" y1=\"" << f.top << "\" x2=\"" << f.left << "\" y2=\""
      << f.bottom << "\" stroke=\"black\"/>\n";
}

}  // namespace

void write_line_svg(const std::string& path,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    const std::string& title, const std::string& y_label) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  Frame f;
  svg_header(out, f, title);

  double lo = 0.0, hi = 1.0;
  std::size_t max_len = 1;
  bool first = true;
  for (const auto& [_, xs] : series) {
    for (double v : xs) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    max_len = std::max(max_len, xs.size());
  }
  if (hi <= lo) hi = lo + 1.0;

  out << "<text x=\"20\" y=\"" << f.y(0.5) << "\" font-size=\"12\" font-family=\"sans-serif\" "
         "transform=\"rotate(-90 20 "
      << f.y(0.5) << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  out << "<text x=\"" << f.x(0.5) << "\" y=\"" << (f.bottom + 35)
      << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">step</text>\n";
  for (double frac : {0.0, 0.5, 1.0}) {
    out << "<text x=\"" << (f.left - 8) << "\" y=\"" << (f.y(frac) + 4)
        << "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"end\">"
        << fmt(lo + frac * (hi - lo)) << "</text>\n";
    out << "<text x=\"" << f.x(frac) << "\" y=\"" << (f.bottom + 18)
        << "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"middle\">"
        << static_cast<long long>(frac * static_cast<double>(max_len)) << "</text>\n";
  }

  int color = 0;
  double legend_y = f.top + 8;
  for (const auto& [label, xs] : series) {
    const char* stroke = kPalette[color % 8];
    out << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double xf = max_len > 1 ? static_cast<double>(i) / static_cast<double>(max_len - 1) : 0.0;
      const double yf = (xs[i] - lo) / (hi - lo);
      out << f.x(xf) << ',' << f.y(yf) << ' ';
    }
    out << "\"/>\n";
    out << "<rect x=\"" << (f.right - 150) << "\" y=\"" << (legend_y - 9)
        << "\" width=\"18\" height=\"4\" fill=\"" << stroke << "\"/>\n";
    out << "<text x=\"" << (f.right - 126) << "\" y=\"" << legend_y
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << label << "</text>\n";
    legend_y += 18;
    ++color;
  }
  out << "</svg>\n";
}

void write_box_svg(const std::string& path,
                   const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                   const std::string& title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  Frame f;
  svg_header(out, f, title);

  double lo = 0.0, hi = 1.0;
  bool first = true;
  for (const auto& [_, xs] : groups) {
    for (double v : xs) {
      if (first) {
        lo = hi = v;
        first = false;
      }
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto yof = [&](double v) { return f.y((v - lo) / (hi - lo)); };

  for (double frac : {0.0, 0.5, 1.0}) {
    out << "<text x=\"" << (f.left - 8) << "\" y=\"" << (f.y(frac) + 4)
        << "\" font-size=\"11\" font-family=\"sans-serif\" text-anchor=\"end\">"
        << fmt(lo + frac * (hi - lo)) << "</text>\n";
  }

  const double slot = (f.right - f.left) / static_cast<double>(std::max<std::size_t>(1, groups.size()));
  int color = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& xs = groups[g].second;
    const double cx = f.left + slot * (static_cast<double>(g) + 0.5);
    const double half = std::min(40.0, slot * 0.3);
    out << "<text x=\"" << cx << "\" y=\"" << (f.bottom + 18)
        << "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"middle\">"
        << groups[g].first << "</text>\n";
    if (xs.empty()) continue;
    std::vector<double> sorted = xs;
    std::sort(sorted.begin(), sorted.end());
    const double q1 = quantile_of(sorted, 0.25);
    const double q2 = quantile_of(sorted, 0.5);
    const double q3 = quantile_of(sorted, 0.75);
    const double mn = sorted.front(), mx = sorted.back();
    const char* stroke = kPalette[color % 8];
    out << "<line x1=\"" << cx << "\" y1=\"" << yof(mn) << "\" x2=\"" << cx << "\" y2=\""
        << yof(mx) << "\" stroke=\"" << stroke << "\"/>\n";
    for (double w : {mn, mx}) {
      out << "<line x1=\"" << (cx - half / 2) << "\" y1=\"" << yof(w) << "\" x2=\""
          << (cx + half / 2) << "\" y2=\"" << yof(w) << "\" stroke=\"" << stroke << "\"/>\n";
    }
    out << "<rect x=\"" << (cx - half) << "\" y=\"" << yof(q3) << "\" width=\"" << (2 * half)
        << "\" height=\"" << std::max(1.0, yof(q1) - yof(q3)) << "\" fill=\"" << stroke
        << "\" fill-opacity=\"0.25\" stroke=\"" << stroke << "\"/>\n";
    out << "<line x1=\"" << (cx - half) << "\" y1=\"" << yof(q2) << "\" x2=\"" << (cx + half)
        << "\" y2=\"" << yof(q2) << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n";
    ++color;
  }
  out << "</svg>\n";
}

}  // namespace moldiv
