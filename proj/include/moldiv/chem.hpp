#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moldiv/rng.hpp"

namespace moldiv {

// ---------------------------------------------------------------------------
// Token language
//
// Atoms C N O S F, bond prefixes = and # (single is implicit), branches ( ),
// ring-closure digits 1-4, framing tokens ^ (start) and $ (stop). A molecule
// line in corpus files is the body glyph string without framing tokens.
// ---------------------------------------------------------------------------

class Vocabulary {
 public:
  static constexpr int kStart = 0;
  static constexpr int kStop = 1;
  static constexpr int kCoreSize = 15;

  // extra_tokens pads the action set with inert glyphs (they parse as unknown
  // tokens, i.e. invalid molecules) so the action-set size can be raised to
  // match larger published setups; 19 pad glyphs are available, for a maximum
  // size of 34.
  explicit Vocabulary(int extra_tokens = 0);

  int size() const { return static_cast<int>(glyphs_.size()); }
  char glyph(int id) const { return glyphs_[static_cast<std::size_t>(id)]; }
  int id_of(char glyph) const;  // -1 if unknown

  // Body glyphs -> ids; nullopt if any glyph is outside the vocabulary.
  std::optional<std::vector<int>> encode(std::string_view body) const;
  // Ids -> glyph string, skipping start/stop.
  std::string decode_body(std::span<const int> ids) const;

 private:
  std::string glyphs_;
  int id_by_char_[256];
};

enum class Element : std::uint8_t { C, N, O, S, F };

int valence_limit(Element e);
char element_glyph(Element e);

struct Bond {
  int a = 0;
  int b = 0;
  int order = 1;
};

struct MolGraph {
  std::vector<Element> atoms;
  std::vector<Bond> bonds;
  // (neighbor, order) lists, sorted by neighbor index.
  std::vector<std::vector<std::pair<int, int>>> adjacency;
  std::vector<bool> in_ring;

  int num_atoms() const { return static_cast<int>(atoms.size()); }
  int bond_order_between(int a, int b) const;  // 0 if not bonded
  int degree(int a) const { return static_cast<int>(adjacency[static_cast<std::size_t>(a)].size()); }
  int valence_used(int a) const;

  // Rebuilds adjacency and ring membership from the bond list.
  void finalize();
};

enum class ParseErrorKind {
  EmptyInput,
  UnknownToken,
  UnbalancedParen,
  UnclosedRing,
  ValenceExceeded,
};

std::string_view to_string(ParseErrorKind kind);

struct ParseError {
  ParseErrorKind kind = ParseErrorKind::EmptyInput;
  int position = 0;  // token index the error was detected at
  std::string message;
};

struct ParseResult {
  std::optional<MolGraph> graph;
  ParseError error;

  bool ok() const { return graph.has_value(); }
};

// Parse a body glyph string (no framing tokens).
ParseResult parse(std::string_view body);
// Parse framed or unframed token ids; leading start / trailing stop ids are
// stripped, any other occurrence is an unknown token.
ParseResult parse(std::span<const int> ids, const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// Scaffolds and canonical form
// ---------------------------------------------------------------------------

enum class ScaffoldKind { Molecular, Topological };

struct ScaffoldKey {
  std::string canonical;
  ScaffoldKind kind = ScaffoldKind::Molecular;

  bool operator==(const ScaffoldKey&) const = default;
};

// Sentinel key shared by every ring-free molecule.
inline constexpr std::string_view kEmptyScaffold = "∅";

// Canonical grammar string of the graph; parse(canonical_string(g)) is
// isomorphic to g. Permutation-invariant.
std::string canonical_string(const MolGraph& g);

// Ring systems plus linkers: iteratively prunes degree-1 atoms, then
// canonicalizes. Ring-free input yields the sentinel key.
ScaffoldKey molecular_scaffold(const MolGraph& g);
// Molecular scaffold with every atom relabeled C and every bond single.
ScaffoldKey topological_scaffold(const MolGraph& g);

// Isomorphic copy with atoms renumbered by a random permutation (test helper).
MolGraph shuffle_atoms(const MolGraph& g, Rng& rng);

// Sizes of the smallest ring through each ring bond (deduplicated, sorted).
std::vector<int> ring_sizes(const MolGraph& g);

}  // namespace moldiv
