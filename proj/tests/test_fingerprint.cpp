#include "doctest.h"

#include <vector>

#include "moldiv/chem.hpp"
#include "moldiv/fingerprint.hpp"
#include "moldiv/rng.hpp"

using namespace moldiv;

namespace {

MolGraph mol(std::string_view body) {
  ParseResult res = parse(body);
  REQUIRE(res.ok());
  return *res.graph;
}

Fingerprint random_fp(Rng& rng, int max_bits) {
  Fingerprint fp;
  const int count = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(max_bits)));
  for (int i = 0; i < count; ++i) fp.set(static_cast<int>(rng.uniform_int(Fingerprint::kBits)));
  return fp;
}

}  // namespace

TEST_CASE("fingerprint determinism and sensitivity") {
  CHECK(fingerprint(mol("CCO")) == fingerprint(mol("CCO")));
  CHECK_FALSE(fingerprint(mol("CCO")) == fingerprint(mol("CCN")));
  CHECK_FALSE(fingerprint(mol("CCO")) == fingerprint(mol("CC=O")));

  SUBCASE("single atom sets exactly the radius-0 bit") {
    const Fingerprint fp = fingerprint(mol("C"));
    CHECK(fp.popcount == 1);
  }
  SUBCASE("invariant under atom relabeling") {
    Rng rng(77);
    for (std::string_view body : {"C1CCC2CCCCC2C1", "N1C=CC(CO)CC1", "CC(C)(C)C"}) {
      MolGraph g = mol(body);
      const Fingerprint fp = fingerprint(g);
      for (int trial = 0; trial < 50; ++trial) {
        MolGraph shuffled = shuffle_atoms(g, rng);
        CHECK(fingerprint(shuffled) == fp);
      }
    }
  }
  SUBCASE("popcount tracks set bits") {
    Fingerprint fp;
    fp.set(3);
    fp.set(3);
    fp.set(64);
    CHECK(fp.popcount == 2);
    CHECK(fp.test(3));
    CHECK(fp.test(64));
    CHECK_FALSE(fp.test(4));
  }
}

TEST_CASE("tanimoto distance examples") {
  Fingerprint a;
  Fingerprint b;
  CHECK(tanimoto_distance(a, b) == doctest::Approx(0.0));  // both empty

  a.set(1);
  a.set(2);
  CHECK(tanimoto_distance(a, a) == doctest::Approx(0.0));

  b.set(10);
  b.set(11);
  CHECK(tanimoto_distance(a, b) == doctest::Approx(1.0));  // disjoint

  // |a & b| = 2, |a | b| = 8 -> 0.75
  Fingerprint c;
  Fingerprint d;
  for (int bit : {0, 1, 2, 3, 4}) c.set(bit);
  for (int bit : {3, 4, 5, 6, 7}) d.set(bit);
  CHECK(tanimoto_distance(c, d) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("tanimoto distance is a metric on random fingerprints") {
  Rng rng(123456);
  std::vector<Fingerprint> fps;
  for (int i = 0; i < 100; ++i) fps.push_back(random_fp(rng, 200));
  for (std::string_view body : {"C1CCCCC1C", "N1C=CC(CO)CC1", "O=C=O", "CC(C)(C)C"}) {
    fps.push_back(fingerprint(mol(body)));
  }
  const int n = static_cast<int>(fps.size());

  std::vector<std::vector<double>> d(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = tanimoto_distance(fps[static_cast<std::size_t>(i)], fps[static_cast<std::size_t>(j)]);
    }
  }
  for (int i = 0; i < n; ++i) {
    CHECK(d[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] == doctest::Approx(0.0));
    for (int j = 0; j < n; ++j) {
      CHECK(d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
            doctest::Approx(d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]));
      CHECK(d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] >= 0.0);
      CHECK(d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] <= 1.0);
    }
  }
  int violations = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        if (d[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] >
            d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] + d[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] + 1e-12) {
          ++violations;
        }
      }
    }
  }
  CHECK(violations == 0);
}
