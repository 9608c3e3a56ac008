#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "moldiv/chem.hpp"
#include "moldiv/corpus.hpp"
#include "moldiv/fingerprint.hpp"
#include "moldiv/oracle.hpp"
#include "moldiv/policy.hpp"
#include "moldiv/runner.hpp"
#include "moldiv/shaping.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
  m.doc() = "moldiv core bindings";

  py::class_<moldiv::ParseError>(m, "ParseError")
      .def_property_readonly("kind",
                             [](const moldiv::ParseError& e) { return std::string(moldiv::to_string(e.kind)); })
      .def_readonly("position", &moldiv::ParseError::position)
      .def_readonly("message", &moldiv::ParseError::message);

  m.def("parse_ok", [](const std::string& body) { return moldiv::parse(body).ok(); },
        "True if the body string parses as a valid molecule");
  m.def("parse_error", [](const std::string& body) -> py::object {
    auto res = moldiv::parse(body);
    if (res.ok()) return py::none();
    return py::cast(res.error);
  });
  m.def("canonical", [](const std::string& body) -> py::object {
    auto res = moldiv::parse(body);
    if (!res.ok()) return py::none();
    return py::cast(moldiv::canonical_string(*res.graph));
  });
  m.def("molecular_scaffold", [](const std::string& body) -> py::object {
    auto res = moldiv::parse(body);
    if (!res.ok()) return py::none();
    return py::cast(moldiv::molecular_scaffold(*res.graph).canonical);
  });
  m.def("topological_scaffold", [](const std::string& body) -> py::object {
    auto res = moldiv::parse(body);
    if (!res.ok()) return py::none();
    return py::cast(moldiv::topological_scaffold(*res.graph).canonical);
  });

  // Fingerprints and similarity.
  m.def("fingerprint_bits", [](const std::string& body) -> py::object {
    auto res = moldiv::parse(body);
    if (!res.ok()) return py::none();
    const auto fp = moldiv::fingerprint(*res.graph);
    std::vector<int> bits;
    for (int i = 0; i < moldiv::Fingerprint::kBits; ++i) {
      if (fp.test(i)) bits.push_back(i);
    }
    return py::cast(bits);
  });
  m.def("tanimoto_distance", [](const std::string& a, const std::string& b) -> py::object {
    auto ra = moldiv::parse(a);
    auto rb = moldiv::parse(b);
    if (!ra.ok() || !rb.ok()) return py::none();
    return py::cast(
        moldiv::tanimoto_distance(moldiv::fingerprint(*ra.graph), moldiv::fingerprint(*rb.graph)));
  });

  // Synthetic chemistry: corpus sampling and reward oracles.
  m.def(
      "generate_corpus",
      [](int count, std::uint64_t seed) { return moldiv::generate_corpus(count, seed, {}); },
      py::arg("count"), py::arg("seed"), "Sample `count` valid molecules from the corpus generator");
  m.def(
      "oracle_score",
      [](const std::string& selector, const std::string& body) {
        return moldiv::evaluate(moldiv::resolve_oracle(selector), body);
      },
      py::arg("oracle"), py::arg("body"),
      "Extrinsic reward in [0,1], or -1 for an unparseable body");

  // Scaffold-bucket penalties.
  m.def("penalty_ims", &moldiv::penalty_ims, py::arg("N"), py::arg("m"));
  m.def("penalty_erf", &moldiv::penalty_erf, py::arg("N"), py::arg("m"));
  m.def("penalty_linear", &moldiv::penalty_linear, py::arg("N"), py::arg("m"));
  m.def("penalty_sigmoid", &moldiv::penalty_sigmoid, py::arg("N"), py::arg("m"));
  m.def("penalty_tanh", &moldiv::penalty_tanh, py::arg("N"), py::arg("m"), py::arg("c_tanh"));
  m.def("klucb_solve", &moldiv::klucb_solve, py::arg("p_hat"), py::arg("N"), py::arg("n"),
        py::arg("c"), py::arg("tol") = 1e-6);
  m.def("strategies", [] {
    std::vector<std::string> names;
    for (const auto s : moldiv::all_strategies()) names.emplace_back(moldiv::strategy_name(s));
    return names;
  });

  // Policy training and the experiment runner.
  m.def(
      "pretrain",
      [](const std::vector<std::string>& corpus, const std::string& out, int epochs, int batch,
         double lr, std::uint64_t seed, int vocab, int emb, int hidden, int layers) {
        moldiv::PretrainConfig cfg;
        cfg.dims = {vocab, emb, hidden, layers};
        cfg.epochs = epochs;
        cfg.batch = batch;
        cfg.lr = lr;
        const auto net = moldiv::pretrain(corpus, cfg, seed);
        moldiv::save_checkpoint(net, out);
        return moldiv::corpus_cross_entropy(net, corpus);
      },
      py::arg("corpus"), py::arg("out"), py::arg("epochs") = 3, py::arg("batch") = 64,
      py::arg("lr") = 1e-3, py::arg("seed") = 1, py::arg("vocab") = 15, py::arg("emb") = 32,
      py::arg("hidden") = 64, py::arg("layers") = 2,
      "Train a prior on the corpus, save it, and return the final cross-entropy per token");
  m.def(
      "sample",
      [](const std::string& checkpoint, int count, int max_tokens, std::uint64_t seed) {
        const auto net = moldiv::load_checkpoint(checkpoint);
        const moldiv::Vocabulary vocab(net.dims.vocab - moldiv::Vocabulary::kCoreSize);
        std::vector<std::pair<std::string, bool>> out;
        for (const auto& t : moldiv::sample_batch(net, count, max_tokens, seed)) {
          out.emplace_back(vocab.decode_body(t.tokens), moldiv::parse(t.tokens, vocab).ok());
        }
        return out;
      },
      py::arg("checkpoint"), py::arg("count"), py::arg("max_tokens") = 40, py::arg("seed") = 1,
      "Draw molecules from a saved policy; returns (body, is_valid) pairs");

  py::register_exception<moldiv::ConfigError>(m, "ConfigError");
  m.def("parse_config", [](const std::string& text) {
    const auto cfg = moldiv::parse_config_text(text);
    py::dict d;
    d["oracle"] = cfg.oracle;
    d["strategy"] = cfg.strategy;
    d["steps"] = cfg.steps;
    d["batch"] = cfg.batch;
    d["max_tokens"] = cfg.max_tokens;
    d["seed"] = cfg.seed;
    d["reruns"] = cfg.reruns;
    d["h"] = cfg.h;
    d["m"] = cfg.m;
    d["D"] = cfg.D;
    d["c"] = cfg.c;
    d["c_tanh"] = cfg.c_tanh;
    d["coreset_size"] = cfg.coreset_size;
    d["output_dir"] = cfg.output_dir;
    d["prior"] = cfg.prior;
    return d;
  });
  m.def(
      "run",
      [](const std::string& config_path) {
        const auto cfg = moldiv::parse_config_file(config_path);
        const auto summaries = moldiv::run_all(cfg);
        std::vector<py::dict> out;
        for (const auto& s : summaries) {
          py::dict d;
          d["seed"] = s.seed;
          d["actives"] = s.actives;
          d["mol_scaffolds"] = s.mol_scaffolds;
          d["topo_scaffolds"] = s.topo_scaffolds;
          d["diverse_actives"] = s.diverse_actives;
          d["tail_mean_extrinsic"] = s.tail_mean_extrinsic;
          d["final_sigma"] = s.final_sigma;
          d["aborted"] = s.aborted;
          d["csv"] = s.csv_path;
          out.push_back(std::move(d));
        }
        return out;
      },
      py::arg("config_path"), "Execute a config file's rerun set; returns per-seed summaries");
}
