#include "moldiv/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace moldiv {

bool FeaturePredicate::matches(const MolGraph& g) const {
  switch (kind) {
    case FeatureKind::RingOfSize: {
      const auto sizes = ring_sizes(g);
      return std::find(sizes.begin(), sizes.end(), arg0) != sizes.end();
    }
    case FeatureKind::ContainsElement:
      for (Element e : g.atoms) {
        if (static_cast<int>(e) == arg0) return true;
      }
      return false;
    case FeatureKind::BondOrderPresent:
      for (const Bond& b : g.bonds) {
        if (b.order == arg0) return true;
      }
      return false;
    case FeatureKind::AtomCountInRange:
      return g.num_atoms() >= arg0 && g.num_atoms() <= arg1;
    case FeatureKind::ScaffoldNonempty:
      for (std::size_t a = 0; a < g.in_ring.size(); ++a) {
        if (g.in_ring[a]) return true;
      }
      return false;
  }
  return false;
}

double OracleSpec::evaluate_graph(const MolGraph& g) const {
  double total = 0.0;
  double matched = 0.0;
  int matched_count = 0;
  for (const FeaturePredicate& f : features) {
    total += f.weight;
    if (f.matches(g)) {
      matched += f.weight;
      ++matched_count;
    }
  }
  if (features.empty() || total <= 0.0) return 0.0;
  if (mode == OracleMode::Dense) return matched / total;
  if (matched_count == static_cast<int>(features.size())) return sparse_full;
  return 0.2 * static_cast<double>(matched_count) / static_cast<double>(features.size());
}

double evaluate(const OracleSpec& spec, std::string_view body) {
  ParseResult res = parse(body);
  if (!res.ok()) return -1.0;
  return spec.evaluate_graph(*res.graph);
}

double evaluate(const OracleSpec& spec, std::span<const int> ids, const Vocabulary& vocab) {
  ParseResult res = parse(ids, vocab);
  if (!res.ok()) return -1.0;
  return spec.evaluate_graph(*res.graph);
}

const std::vector<OracleSpec>& builtin_oracles() {
  static const std::vector<OracleSpec> oracles = [] {
    std::vector<OracleSpec> out;

    OracleSpec easy;
    easy.name = "dense-easy";
    easy.mode = OracleMode::Dense;
    easy.features = {
        {FeatureKind::ScaffoldNonempty, 0, 0, 2.0},
        {FeatureKind::RingOfSize, 5, 0, 1.0},
        {FeatureKind::RingOfSize, 6, 0, 1.0},
        {FeatureKind::ContainsElement, static_cast<int>(Element::N), 0, 1.0},
        {FeatureKind::ContainsElement, static_cast<int>(Element::O), 0, 1.0},
        {FeatureKind::BondOrderPresent, 2, 0, 1.0},
        {FeatureKind::AtomCountInRange, 6, 24, 1.0},
    };
    out.push_back(std::move(easy));

    OracleSpec hard;
    hard.name = "sparse-hard";
    hard.mode = OracleMode::Sparse;
    hard.features = {
        {FeatureKind::RingOfSize, 6, 0, 1.0},
        {FeatureKind::ContainsElement, static_cast<int>(Element::N), 0, 1.0},
        {FeatureKind::BondOrderPresent, 2, 0, 1.0},
        {FeatureKind::AtomCountInRange, 8, 20, 1.0},
    };
    out.push_back(std::move(hard));

    return out;
  }();
  return oracles;
}

namespace {

int parse_element_arg(const std::string& word) {
  if (word.size() == 1) {
    switch (word[0]) {
      case 'C': return static_cast<int>(Element::C);
      case 'N': return static_cast<int>(Element::N);
      case 'O': return static_cast<int>(Element::O);
      case 'S': return static_cast<int>(Element::S);
      case 'F': return static_cast<int>(Element::F);
      default: break;
    }
  }
  throw std::runtime_error("unknown element: " + word);
}

}  // namespace

OracleSpec load_oracle_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open oracle file: " + path);
  OracleSpec spec;
  spec.name = "file:" + path;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string kind;
    if (!(ss >> kind)) continue;
    auto bad = [&](const std::string& why) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + why);
    };
    FeaturePredicate f;
    if (kind == "mode") {
      std::string mode;
      if (!(ss >> mode)) bad("missing mode");
      if (mode == "dense") {
        spec.mode = OracleMode::Dense;
      } else if (mode == "sparse") {
        spec.mode = OracleMode::Sparse;
      } else {
        bad("mode must be dense or sparse");
      }
      continue;
    } else if (kind == "ring_of_size") {
      f.kind = FeatureKind::RingOfSize;
      if (!(ss >> f.arg0 >> f.weight)) bad("expected: ring_of_size <size> <weight>");
    } else if (kind == "contains_element") {
      f.kind = FeatureKind::ContainsElement;
      std::string elem;
      if (!(ss >> elem >> f.weight)) bad("expected: contains_element <C|N|O|S|F> <weight>");
      f.arg0 = parse_element_arg(elem);
    } else if (kind == "bond_order_present") {
      f.kind = FeatureKind::BondOrderPresent;
      if (!(ss >> f.arg0 >> f.weight)) bad("expected: bond_order_present <order> <weight>");
    } else if (kind == "atom_count_in_range") {
      f.kind = FeatureKind::AtomCountInRange;
      if (!(ss >> f.arg0 >> f.arg1 >> f.weight)) bad("expected: atom_count_in_range <lo> <hi> <weight>");
    } else if (kind == "scaffold_nonempty") {
      f.kind = FeatureKind::ScaffoldNonempty;
      if (!(ss >> f.weight)) bad("expected: scaffold_nonempty <weight>");
    } else {
      bad("unknown feature kind: " + kind);
    }
    if (f.weight < 0) bad("weight must be >= 0");
    spec.features.push_back(f);
  }
  if (spec.features.empty()) throw std::runtime_error(path + ": oracle file defines no features");
  return spec;
}

OracleSpec resolve_oracle(std::string_view selector) {
  if (selector.rfind("file:", 0) == 0) {
    return load_oracle_file(std::string(selector.substr(5)));
  }
  for (const OracleSpec& spec : builtin_oracles()) {
    if (spec.name == selector) return spec;
  }
  throw std::runtime_error("unknown oracle: " + std::string(selector));
}

}  // namespace moldiv
