#include "moldiv/diversity.hpp"

#include <set>

#include "doctest.h"
#include "moldiv/corpus.hpp"
#include "moldiv/rng.hpp"
#include "packing_oracle.hpp"

using namespace moldiv;

namespace {

Fingerprint fp_of(std::initializer_list<int> bits) {
  Fingerprint fp;
  for (int b : bits) fp.set(b);
  return fp;
}

Fingerprint random_fp(Rng& rng, int nbits) {
  Fingerprint fp;
  for (int k = 0; k < nbits; ++k) fp.set(static_cast<int>(rng.uniform_int(96)));
  return fp;
}

}  // namespace

TEST_CASE("scaffold counts track distinct keys of each kind") {
  ScaffoldMemory memory;
  CHECK(count_scaffolds(memory).molecular == 0);
  CHECK(count_scaffolds(memory).topological == 0);
  CHECK(diverse_actives_count(memory) == 0);

  // Two molecular keys collapsing onto one topological key: real molecules
  // where an in-ring heteroatom vanishes under the topological coarsening.
  const auto a = make_batch_molecule("N1CCCCC1C", 0.9);
  const auto b = make_batch_molecule("OC1CCCCC1", 0.9);
  REQUIRE(a.valid);
  REQUIRE(b.valid);
  REQUIRE(a.mol_scaffold.canonical != b.mol_scaffold.canonical);
  REQUIRE(a.topo_scaffold.canonical == b.topo_scaffold.canonical);

  ShapingParams params;
  ScaffoldMemory mem2;
  std::vector<BatchMolecule> batch{a, b};
  shape_batch(Strategy::None, params, mem2, batch, 1);
  const auto counts = count_scaffolds(mem2);
  CHECK(counts.molecular == 2);
  CHECK(counts.topological == 1);

  // From-scratch recount over the actives list agrees with the memory.
  std::set<std::string> mol_keys, topo_keys;
  for (const auto& rec : mem2.actives()) {
    mol_keys.insert(rec.mol_scaffold.canonical);
    topo_keys.insert(rec.topo_scaffold.canonical);
  }
  CHECK(static_cast<long long>(mol_keys.size()) == counts.molecular);
  CHECK(static_cast<long long>(topo_keys.size()) == counts.topological);

  // The ring-free sentinel is one scaffold, shared by all chain molecules.
  ScaffoldMemory mem3;
  std::vector<BatchMolecule> chains{make_batch_molecule("CCO", 0.9),
                                    make_batch_molecule("CCCC", 0.8)};
  shape_batch(Strategy::None, params, mem3, chains, 1);
  CHECK(count_scaffolds(mem3).molecular == 1);
  CHECK(count_scaffolds(mem3).topological == 1);
}

TEST_CASE("scaffold counts never decrease across steps") {
  ShapingParams params;
  ScaffoldMemory memory;
  Rng rng(7);
  long long prev_mol = 0, prev_topo = 0;
  const CorpusParams cp;
  for (int step = 0; step < 12; ++step) {
    std::vector<BatchMolecule> batch;
    for (int i = 0; i < 6; ++i) {
      Rng child = Rng::child(1000, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(i));
      batch.push_back(make_batch_molecule(sample_molecule(child, cp), rng.uniform01()));
    }
    shape_batch(Strategy::None, params, memory, batch, static_cast<std::uint64_t>(step));
    const auto counts = count_scaffolds(memory);
    CHECK(counts.molecular >= prev_mol);
    CHECK(counts.topological >= prev_topo);
    prev_mol = counts.molecular;
    prev_topo = counts.topological;
  }
}

TEST_CASE("diverse count follows the greedy set") {
  ShapingParams params;
  params.D = 1.0;
  ScaffoldMemory memory;

  std::vector<BatchMolecule> batch{make_batch_molecule("C", 0.9)};
  shape_batch(Strategy::None, params, memory, batch, 1);
  CHECK(diverse_actives_count(memory) == 1);

  // An overlapping fingerprint adds an active but no circle.
  std::vector<BatchMolecule> near{make_batch_molecule("CCO", 0.9),
                                  make_batch_molecule("CCOC", 0.9)};
  shape_batch(Strategy::None, params, memory, near, 2);
  CHECK(memory.actives().size() == 3);
  CHECK(diverse_actives_count(memory) == 2);  // CCOC overlaps CCO
}

TEST_CASE("exact packing oracle handles the reference layouts") {
  // Four points: one close pair, everything else far apart -> 3.
  const Fingerprint p1 = fp_of({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  Fingerprint p2 = p1;  // distance 0 to p1
  const Fingerprint p3 = fp_of({100, 101});
  const Fingerprint p4 = fp_of({200, 201});
  CHECK(testonly::packing_exact({p1, p2, p3, p4}, 0.7) == 3);

  // All identical -> 1.
  CHECK(testonly::packing_exact({p3, p3, p3}, 0.7) == 1);

  // All pairwise separated -> size.
  CHECK(testonly::packing_exact({p1, p3, p4}, 0.7) == 3);

  CHECK(testonly::packing_exact({}, 0.7) == 0);
}

TEST_CASE("greedy diverse set never beats the exact packing") {
  Rng rng(515);
  for (int inst = 0; inst < 200; ++inst) {
    const int n = 3 + static_cast<int>(rng.uniform_int(10));  // <= 12
    std::vector<Fingerprint> fps;
    for (int i = 0; i < n; ++i) fps.push_back(random_fp(rng, 3 + static_cast<int>(rng.uniform_int(10))));
    const double D = 0.3 + 0.6 * rng.uniform01();

    ScaffoldMemory memory;
    for (const auto& fp : fps) memory.try_add_diverse(fp, D);
    const long long greedy = diverse_actives_count(memory);
    const int exact = testonly::packing_exact(fps, D);
    CHECK(greedy <= exact);
    CHECK(greedy >= 1);

    // Greedy output is itself a valid packing.
    const auto& ds = memory.diverse_set();
    for (std::size_t i = 0; i < ds.size(); ++i) {
      for (std::size_t j = i + 1; j < ds.size(); ++j) {
        CHECK(tanimoto_distance(ds[i], ds[j]) >= D);
      }
    }
  }
}
