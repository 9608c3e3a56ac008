#pragma once

#include "moldiv/shaping.hpp"

namespace moldiv {

struct ScaffoldCounts {
  long long molecular = 0;
  long long topological = 0;
};

// Distinct scaffold keys over all recorded actives; the ring-free sentinel
// counts as one scaffold of each kind.
inline ScaffoldCounts count_scaffolds(const ScaffoldMemory& memory) {
  return {static_cast<long long>(memory.num_molecular_scaffolds()),
          static_cast<long long>(memory.num_topological_scaffolds())};
}

// Size of the greedily maintained pairwise-separated fingerprint set.
inline long long diverse_actives_count(const ScaffoldMemory& memory) {
  return static_cast<long long>(memory.diverse_set().size());
}

}  // namespace moldiv
