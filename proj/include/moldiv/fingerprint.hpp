#pragma once

#include <array>
#include <cstdint>

#include "moldiv/chem.hpp"

namespace moldiv {

// Circular-neighborhood hash fingerprint over a fixed 2048-bit field.
struct Fingerprint {
  static constexpr int kBits = 2048;
  static constexpr int kWords = kBits / 64;

  std::array<std::uint64_t, kWords> words{};
  int popcount = 0;

  void set(int bit) {
    const std::uint64_t mask = std::uint64_t{1} << (bit & 63);
    auto& word = words[static_cast<std::size_t>(bit >> 6)];
    if (!(word & mask)) {
      word |= mask;
      ++popcount;
    }
  }
  bool test(int bit) const {
    return (words[static_cast<std::size_t>(bit >> 6)] >> (bit & 63)) & 1;
  }

  bool operator==(const Fingerprint& other) const { return words == other.words; }
};

// For each atom and each shell radius r = 0..radius (capped by the atom's
// eccentricity), hashes the refined neighborhood label into one of nbits
// buckets. The mixing function is pinned, so bits are identical across
// platforms and runs.
Fingerprint fingerprint(const MolGraph& g, int radius = 2, int nbits = Fingerprint::kBits);

// 1 - |a & b| / |a | b|; 0 when both fingerprints are empty.
double tanimoto_distance(const Fingerprint& a, const Fingerprint& b);

}  // namespace moldiv
