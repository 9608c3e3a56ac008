#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "moldiv/corpus.hpp"
#include "moldiv/policy.hpp"
#include "moldiv/runner.hpp"

namespace {

int cmd_pretrain(const std::string& corpus_path, int generate, const std::string& out,
                 int epochs, int batch, double lr, std::uint64_t seed, int vocab, int emb,
                 int hidden, int layers) {
  std::vector<std::string> corpus;
  if (!corpus_path.empty()) {
    std::ifstream in(corpus_path, std::ios::binary);
    if (!in) {
      std::fprintf(stderr, "error: cannot open corpus file: %s\n", corpus_path.c_str());
      return 2;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      corpus.push_back(line);
    }
  } else {
    corpus = moldiv::generate_corpus(generate, moldiv::mix64(seed, 0xC0A9ull), {});
  }

  moldiv::PretrainConfig cfg;
  cfg.dims = {vocab, emb, hidden, layers};
  cfg.epochs = epochs;
  cfg.batch = batch;
  cfg.lr = lr;
  const moldiv::PolicyNet net = moldiv::pretrain(corpus, cfg, seed);
  moldiv::save_checkpoint(net, out);
  const double ce = moldiv::corpus_cross_entropy(net, corpus);
  std::printf("pretrained on %zu molecules, cross-entropy %.4f nats/token -> %s\n",
              corpus.size(), ce, out.c_str());
  return 0;
}

int cmd_run(const std::string& config_path) {
  const moldiv::RunConfig cfg = moldiv::parse_config_file(config_path);
  const auto summaries = moldiv::run_all(cfg);
  bool any_aborted = false;
  for (const auto& s : summaries) {
    if (s.aborted) {
      any_aborted = true;
      std::fprintf(stderr, "seed %llu aborted: %s\n",
                   static_cast<unsigned long long>(s.seed), s.error.c_str());
      continue;
    }
    std::printf("seed %llu: actives=%lld mol_scaffolds=%lld topo_scaffolds=%lld "
                "diverse=%lld tail_extrinsic=%.4f sigma=%.1f\n",
                static_cast<unsigned long long>(s.seed), s.actives, s.mol_scaffolds,
                s.topo_scaffolds, s.diverse_actives, s.tail_mean_extrinsic, s.final_sigma);
  }
  std::printf("results in %s\n", cfg.output_dir.c_str());
  return any_aborted ? 3 : 0;
}

int cmd_compare(const std::vector<std::string>& config_paths, const std::string& out_dir,
                int ma_window) {
  std::vector<moldiv::RunConfig> cfgs;
  std::vector<std::string> labels;
  for (const auto& path : config_paths) {
    cfgs.push_back(moldiv::parse_config_file(path));
    std::string label = cfgs.back().strategy;
    for (std::size_t i = 1; std::find(labels.begin(), labels.end(), label) != labels.end(); ++i) {
      label = cfgs.back().strategy + "_" + std::to_string(i);
    }
    labels.push_back(label);
  }
  const auto result = moldiv::compare_runs(cfgs, labels, out_dir, ma_window);
  std::printf("%-16s %-16s %10s %10s %10s\n", "label", "metric", "median", "mean", "iqr");
  for (const auto& row : result.rows) {
    std::printf("%-16s %-16s %10.2f %10.2f %10.2f\n", row.label.c_str(), row.metric.c_str(),
                row.median, row.mean, row.iqr);
  }
  std::printf("artifacts in %s\n", out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moldiv: diversity-aware RL molecule generation"};
  app.require_subcommand(1);

  auto* pretrain = app.add_subcommand("pretrain", "train the prior on a corpus");
  std::string corpus_path, pretrain_out = "prior.ckpt";
  int generate = 10000, epochs = 3, pre_batch = 64;
  double pre_lr = 1e-3;
  std::uint64_t pre_seed = 1;
  int vocab = 15, emb = 32, hidden = 64, layers = 2;
  pretrain->add_option("--corpus", corpus_path, "corpus file, one molecule per line");
  pretrain->add_option("--generate", generate, "sample a synthetic corpus of this size instead");
  pretrain->add_option("--out", pretrain_out, "checkpoint path");
  pretrain->add_option("--epochs", epochs, "training epochs");
  pretrain->add_option("--batch", pre_batch, "minibatch size");
  pretrain->add_option("--lr", pre_lr, "learning rate");
  pretrain->add_option("--seed", pre_seed, "random seed");
  pretrain->add_option("--vocab", vocab, "vocabulary size");
  pretrain->add_option("--emb", emb, "embedding width");
  pretrain->add_option("--hidden", hidden, "recurrent width");
  pretrain->add_option("--layers", layers, "recurrent layers");

  auto* run = app.add_subcommand("run", "fine-tune against an oracle");
  std::string run_config;
  run->add_option("config", run_config, "key = value config file")->required();

  auto* compare = app.add_subcommand("compare", "run several configs and aggregate");
  std::vector<std::string> compare_configs;
  std::string compare_out = "compare";
  int ma_window = 101;
  compare->add_option("configs", compare_configs, "config files, one per arm")->required();
  compare->add_option("--out", compare_out, "output directory");
  compare->add_option("--ma-window", ma_window, "moving-average window for curves");

  auto* plot = app.add_subcommand("plot", "render learning curves as SVG");
  std::vector<std::string> plot_csvs;
  std::string plot_out = "curves.svg";
  int plot_window = 101;
  plot->add_option("csvs", plot_csvs, "run CSV files")->required();
  plot->add_option("--out", plot_out, "output SVG path");
  plot->add_option("--ma-window", plot_window, "moving-average window");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits cleanly; usage errors -> 2
  }

  try {
    if (pretrain->parsed()) {
      return cmd_pretrain(corpus_path, generate, pretrain_out, epochs, pre_batch, pre_lr,
                          pre_seed, vocab, emb, hidden, layers);
    }
    if (run->parsed()) return cmd_run(run_config);
    if (compare->parsed()) return cmd_compare(compare_configs, compare_out, ma_window);
    if (plot->parsed()) {
      moldiv::plot_csvs(plot_csvs, plot_out, plot_window);
      std::printf("wrote %s\n", plot_out.c_str());
      return 0;
    }
  } catch (const moldiv::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const moldiv::CheckpointMissing& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
