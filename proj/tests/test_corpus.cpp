#include "doctest.h"

#include <cstdio>
#include <set>

#include "moldiv/chem.hpp"
#include "moldiv/corpus.hpp"

using namespace moldiv;

TEST_CASE("corpus generator") {
  const int n = 3000;
  const auto lines = generate_corpus(n, 991);
  REQUIRE(static_cast<int>(lines.size()) == n);

  int with_ring = 0;
  int with_hetero = 0;
  int with_multi_bond = 0;
  std::set<std::string> distinct;
  for (const std::string& body : lines) {
    ParseResult res = parse(body);
    REQUIRE_MESSAGE(res.ok(), body);
    CHECK(static_cast<int>(body.size()) <= 38);
    const MolGraph& g = *res.graph;
    if (!ring_sizes(g).empty()) ++with_ring;
    for (Element e : g.atoms) {
      if (e != Element::C) {
        ++with_hetero;
        break;
      }
    }
    for (const Bond& b : g.bonds) {
      if (b.order > 1) {
        ++with_multi_bond;
        break;
      }
    }
    distinct.insert(canonical_string(g));
  }
  // The walk must produce enough structural variety for pretraining to expose
  // rings, heteroatoms and multiple bonds to the policy.
  CHECK(with_ring > n / 3);
  CHECK(with_hetero > n / 3);
  CHECK(with_multi_bond > n / 5);
  CHECK(static_cast<int>(distinct.size()) > n / 2);

  SUBCASE("seed-stable") {
    const auto again = generate_corpus(n, 991);
    CHECK(again == lines);
    const auto other = generate_corpus(50, 992);
    CHECK(other != std::vector<std::string>(lines.begin(), lines.begin() + 50));
  }
}

TEST_CASE("corpus file round trip") {
  const char* path = "corpus_roundtrip.txt";
  const auto lines = generate_corpus(100, 7);
  write_lines(path, lines);
  CHECK(read_lines(path) == lines);
  std::remove(path);
  CHECK_THROWS(read_lines(path));
}
