#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moldiv/policy.hpp"
#include "moldiv/shaping.hpp"

namespace moldiv {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One experiment definition. Config files are line-oriented `key = value`
// text; every field below is settable under exactly its own name.
struct RunConfig {
  std::string oracle = "dense-easy";  // builtin name or file:<path>
  std::string strategy = "none";
  int steps = 300;       // generative steps per run
  int batch = 32;        // molecules per step
  int max_tokens = 40;   // sequence budget, start/stop tokens included
  std::uint64_t seed = 1;
  int reruns = 10;       // independent repeats at seeds seed..seed+reruns-1
  // reward shaping
  double h = 0.5;
  int m = 25;
  double D = 0.7;
  double c = 0.0;
  double c_tanh = 3.0;
  int coreset_size = 5000;
  // policy architecture (pretraining; runs take dims from the checkpoint)
  int vocab = 15;
  int emb = 32;
  int hidden = 64;
  int layers = 2;
  double lr = 1e-4;
  // adaptive-sigma guard
  double sigma_init = 128.0;
  double sigma_margin = 50.0;
  int sigma_window = 10;
  double d_min = 0.15;
  std::string output_dir = "runs";
  std::string prior = "prior.ckpt";

  ShapingParams shaping_params() const;
  SigmaParams sigma_params() const;
};

RunConfig parse_config_text(std::string_view text, std::string_view origin = "<config>");
RunConfig parse_config_file(const std::string& path);  // throws ConfigError

// One CSV row of the generative loop.
struct StepRecord {
  int step = 0;
  double mean_extrinsic = 0.0;
  double mean_shaped = 0.0;
  long long actives = 0;
  long long mol_scaffolds = 0;
  long long topo_scaffolds = 0;
  long long diverse_actives = 0;
  double sigma = 0.0;
  double loss = 0.0;
  double valid_frac = 0.0;
};

inline constexpr std::string_view kCsvHeader =
    "step,mean_extrinsic,mean_shaped,actives,mol_scaffolds,topo_scaffolds,diverse_actives,sigma,"
    "loss,valid_frac";

struct RunSummary {
  std::uint64_t seed = 0;
  long long actives = 0;
  long long mol_scaffolds = 0;
  long long topo_scaffolds = 0;
  long long diverse_actives = 0;
  double tail_mean_extrinsic = 0.0;  // mean extrinsic over the last <=100 steps
  double final_sigma = 0.0;
  bool aborted = false;
  std::string error;
  std::string csv_path;
  std::vector<StepRecord> records;
};

// One seeded experiment: the full generative loop, CSV flushed row by row,
// final agent checkpoint beside it. A non-finite gradient aborts the run but
// keeps the completed rows.
RunSummary run_single(const RunConfig& cfg, std::uint64_t seed, const PolicyNet& prior);

// The whole rerun set at seeds seed..seed+reruns-1 (parallel when the
// hardware allows), plus a per-run summary CSV.
std::vector<RunSummary> run_all(const RunConfig& cfg);

// Loads the prior checkpoint; throws CheckpointMissing when absent.
PolicyNet load_prior(const RunConfig& cfg);

// Trailing moving average; the window is clipped at the series start.
std::vector<double> trailing_moving_average(const std::vector<double>& xs, int window);

double median_of(std::vector<double> xs);
double quantile_of(std::vector<double> xs, double p);  // linear interpolation

struct CompareRow {
  std::string label;
  std::string metric;
  double median = 0.0;
  double mean = 0.0;
  double iqr = 0.0;
};

struct CompareResult {
  std::vector<CompareRow> rows;
  // Per label: moving-average extrinsic curve (mean across reruns per step).
  std::vector<std::pair<std::string, std::vector<double>>> curves;
};

// Runs every config (artifacts under out_dir/<label>/), then writes the
// comparison table, curve CSV and SVG charts into out_dir.
CompareResult compare_runs(const std::vector<RunConfig>& cfgs,
                           const std::vector<std::string>& labels, const std::string& out_dir,
                           int ma_window = 101);

// Reads run CSVs and draws their moving-average extrinsic curves.
void plot_csvs(const std::vector<std::string>& csv_paths, const std::string& out_svg,
               int ma_window = 101);

// Minimal hand-rolled SVG charts (no external plotting dependency).
void write_line_svg(const std::string& path,
                    const std::vector<std::pair<std::string, std::vector<double>>>& series,
                    const std::string& title, const std::string& y_label);
void write_box_svg(const std::string& path,
                   const std::vector<std::pair<std::string, std::vector<double>>>& groups,
                   const std::string& title);

}  // namespace moldiv
