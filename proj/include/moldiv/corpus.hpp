#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moldiv/rng.hpp"

namespace moldiv {

// Knobs for the valence-tracking random walk that produces pretraining
// molecules. Defaults give ring-rich, heteroatom-bearing molecules of roughly
// 6-20 atoms, comfortably inside a 40-token sampling budget.
struct CorpusParams {
  int max_body_tokens = 38;
  double target_atoms = 11.0;
  double elem_weights[5] = {0.55, 0.16, 0.14, 0.10, 0.05};  // C N O S F
  double double_bond_weight = 0.20;
  double triple_bond_weight = 0.02;
  double branch_open_weight = 0.45;
  double branch_close_weight = 0.60;
  double ring_open_weight = 0.65;
  int max_open_rings = 2;
  // Cycle rank <= 4 guarantees the canonical writer can re-emit the molecule
  // within the grammar's four ring-closure digits; 3 keeps molecules sane.
  int max_total_rings = 3;
};

// One valid molecule body; every emitted string parses.
std::string sample_molecule(Rng& rng, const CorpusParams& params = {});

// count molecules from independent substreams of seed (index-stable).
std::vector<std::string> generate_corpus(int count, std::uint64_t seed,
                                         const CorpusParams& params = {});

void write_lines(const std::string& path, const std::vector<std::string>& lines);
std::vector<std::string> read_lines(const std::string& path);  // throws on missing file

}  // namespace moldiv
