#include "moldiv/fingerprint.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <deque>

#include "moldiv/rng.hpp"

namespace moldiv {

namespace {

constexpr std::uint64_t kHashSeed = 0x9e2b8f1a6c3d5e47ull;

std::vector<int> eccentricities(const MolGraph& g) {
  const int n = g.num_atoms();
  std::vector<int> ecc(static_cast<std::size_t>(n), 0);
  std::vector<int> dist(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    dist[static_cast<std::size_t>(s)] = 0;
    std::deque<int> queue{s};
    int far = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      far = std::max(far, dist[static_cast<std::size_t>(v)]);
      for (const auto& [u, o] : g.adjacency[static_cast<std::size_t>(v)]) {
        if (dist[static_cast<std::size_t>(u)] < 0) {
          dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
          queue.push_back(u);
        }
      }
    }
    ecc[static_cast<std::size_t>(s)] = far;
  }
  return ecc;
}

}  // namespace

Fingerprint fingerprint(const MolGraph& g, int radius, int nbits) {
  assert(nbits > 0 && nbits <= Fingerprint::kBits);
  Fingerprint fp;
  const int n = g.num_atoms();
  if (n == 0) return fp;

  const std::vector<int> ecc = eccentricities(g);
  std::vector<std::uint64_t> labels(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    std::uint64_t h = mix64(kHashSeed, static_cast<std::uint64_t>(g.atoms[static_cast<std::size_t>(v)]) + 1);
    h = mix64(h, static_cast<std::uint64_t>(g.degree(v)));
    std::vector<int> orders;
    for (const auto& [u, order] : g.adjacency[static_cast<std::size_t>(v)]) orders.push_back(order);
    std::sort(orders.begin(), orders.end());
    for (int order : orders) h = mix64(h, static_cast<std::uint64_t>(order));
    labels[static_cast<std::size_t>(v)] = h;
    fp.set(static_cast<int>(h % static_cast<std::uint64_t>(nbits)));
  }

  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      std::uint64_t h = mix64(labels[static_cast<std::size_t>(v)], static_cast<std::uint64_t>(r));
      std::vector<std::pair<int, std::uint64_t>> nb;
      for (const auto& [u, order] : g.adjacency[static_cast<std::size_t>(v)]) {
        nb.emplace_back(order, labels[static_cast<std::size_t>(u)]);
      }
      std::sort(nb.begin(), nb.end());
      for (const auto& [order, lab] : nb) h = mix64(h, mix64(static_cast<std::uint64_t>(order), lab));
      next[static_cast<std::size_t>(v)] = h;
      if (r <= ecc[static_cast<std::size_t>(v)]) {
        fp.set(static_cast<int>(h % static_cast<std::uint64_t>(nbits)));
      }
    }
    labels = std::move(next);
  }
  return fp;
}

double tanimoto_distance(const Fingerprint& a, const Fingerprint& b) {
  int inter = 0;
  int uni = 0;
  for (int w = 0; w < Fingerprint::kWords; ++w) {
    inter += std::popcount(a.words[static_cast<std::size_t>(w)] & b.words[static_cast<std::size_t>(w)]);
    uni += std::popcount(a.words[static_cast<std::size_t>(w)] | b.words[static_cast<std::size_t>(w)]);
  }
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace moldiv
