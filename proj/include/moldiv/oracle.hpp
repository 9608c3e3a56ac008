#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "moldiv/chem.hpp"

namespace moldiv {

enum class FeatureKind {
  RingOfSize,        // arg0 = ring size
  ContainsElement,   // arg0 = Element
  BondOrderPresent,  // arg0 = order
  AtomCountInRange,  // arg0 = lo, arg1 = hi (inclusive)
  ScaffoldNonempty,
};

struct FeaturePredicate {
  FeatureKind kind = FeatureKind::ScaffoldNonempty;
  int arg0 = 0;
  int arg1 = 0;
  double weight = 1.0;

  bool matches(const MolGraph& g) const;
};

enum class OracleMode { Dense, Sparse };

// Dense: weighted fraction of matched features. Sparse: sparse_full on a full
// match, otherwise 0.2 x matched fraction (always below the active threshold).
struct OracleSpec {
  std::string name;
  OracleMode mode = OracleMode::Dense;
  std::vector<FeaturePredicate> features;
  double sparse_full = 1.0;

  double evaluate_graph(const MolGraph& g) const;  // in [0, 1]
};

// -1 when the body does not parse, the oracle value otherwise.
double evaluate(const OracleSpec& spec, std::string_view body);
double evaluate(const OracleSpec& spec, std::span<const int> ids, const Vocabulary& vocab);

const std::vector<OracleSpec>& builtin_oracles();

// Accepts a builtin name ("dense-easy", "sparse-hard") or "file:<path>".
// Throws std::runtime_error for unknown names or malformed files.
OracleSpec resolve_oracle(std::string_view selector);

// Line-oriented format: "<kind> <args...> <weight>" per feature, plus an
// optional "mode dense|sparse" directive; '#' starts a comment.
OracleSpec load_oracle_file(const std::string& path);

}  // namespace moldiv
