#include "moldiv/chem.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <deque>
#include <functional>
#include <stdexcept>

namespace moldiv {

namespace {

constexpr std::string_view kCoreGlyphs = "^$CNOSF=#()1234";
// Pad glyphs for configurable action-set sizes; none of them parse.
constexpr std::string_view kPadGlyphs = "!%&*+,-./:;<>?@[]_{";

}  // namespace

Vocabulary::Vocabulary(int extra_tokens) {
  if (extra_tokens < 0) extra_tokens = 0;
  const int max_extra = static_cast<int>(kPadGlyphs.size());
  if (extra_tokens > max_extra) extra_tokens = max_extra;
  glyphs_ = std::string(kCoreGlyphs);
  glyphs_.append(kPadGlyphs.substr(0, static_cast<std::size_t>(extra_tokens)));
  std::memset(id_by_char_, -1, sizeof(id_by_char_));
  for (int i = 0; i < size(); ++i) {
    id_by_char_[static_cast<unsigned char>(glyphs_[static_cast<std::size_t>(i)])] = i;
  }
}

int Vocabulary::id_of(char glyph) const {
  return id_by_char_[static_cast<unsigned char>(glyph)];
}

std::optional<std::vector<int>> Vocabulary::encode(std::string_view body) const {
  std::vector<int> ids;
  ids.reserve(body.size());
  for (char ch : body) {
    const int id = id_of(ch);
    if (id < 0 || id == kStart || id == kStop) return std::nullopt;
    ids.push_back(id);
  }
  return ids;
}

std::string Vocabulary::decode_body(std::span<const int> ids) const {
  std::string out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id == kStart || id == kStop) continue;
    if (id >= 0 && id < size()) out.push_back(glyph(id));
  }
  return out;
}

int valence_limit(Element e) {
  switch (e) {
    case Element::C: return 4;
    case Element::N: return 3;
    case Element::O: return 2;
    case Element::S: return 2;
    case Element::F: return 1;
  }
  return 0;
}

char element_glyph(Element e) {
  switch (e) {
    case Element::C: return 'C';
    case Element::N: return 'N';
    case Element::O: return 'O';
    case Element::S: return 'S';
    case Element::F: return 'F';
  }
  return '?';
}

int MolGraph::bond_order_between(int a, int b) const {
  for (const auto& [nbr, order] : adjacency[static_cast<std::size_t>(a)]) {
    if (nbr == b) return order;
  }
  return 0;
}

int MolGraph::valence_used(int a) const {
  int total = 0;
  for (const auto& [nbr, order] : adjacency[static_cast<std::size_t>(a)]) total += order;
  return total;
}

void MolGraph::finalize() {
  const std::size_t n = atoms.size();
  adjacency.assign(n, {});
  for (const Bond& b : bonds) {
    adjacency[static_cast<std::size_t>(b.a)].emplace_back(b.b, b.order);
    adjacency[static_cast<std::size_t>(b.b)].emplace_back(b.a, b.order);
  }
  for (auto& list : adjacency) std::sort(list.begin(), list.end());

  // Ring membership: an atom lies on a cycle iff it touches a non-bridge edge.
  in_ring.assign(n, false);
  if (n == 0) return;
  std::vector<std::vector<std::pair<int, int>>> adj_edges(n);  // (neighbor, bond idx)
  for (int e = 0; e < static_cast<int>(bonds.size()); ++e) {
    adj_edges[static_cast<std::size_t>(bonds[static_cast<std::size_t>(e)].a)].emplace_back(bonds[static_cast<std::size_t>(e)].b, e);
    adj_edges[static_cast<std::size_t>(bonds[static_cast<std::size_t>(e)].b)].emplace_back(bonds[static_cast<std::size_t>(e)].a, e);
  }
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<bool> is_bridge(bonds.size(), false);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int v, int parent_edge) {
    disc[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = timer++;
    for (const auto& [u, e] : adj_edges[static_cast<std::size_t>(v)]) {
      if (e == parent_edge) continue;
      if (disc[static_cast<std::size_t>(u)] < 0) {
        dfs(u, e);
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], low[static_cast<std::size_t>(u)]);
        if (low[static_cast<std::size_t>(u)] > disc[static_cast<std::size_t>(v)]) is_bridge[static_cast<std::size_t>(e)] = true;
      } else {
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], disc[static_cast<std::size_t>(u)]);
      }
    }
  };
  for (int v = 0; v < static_cast<int>(n); ++v) {
    if (disc[static_cast<std::size_t>(v)] < 0) dfs(v, -1);
  }
  for (int e = 0; e < static_cast<int>(bonds.size()); ++e) {
    if (!is_bridge[static_cast<std::size_t>(e)]) {
      in_ring[static_cast<std::size_t>(bonds[static_cast<std::size_t>(e)].a)] = true;
      in_ring[static_cast<std::size_t>(bonds[static_cast<std::size_t>(e)].b)] = true;
    }
  }
}

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::EmptyInput: return "EmptyInput";
    case ParseErrorKind::UnknownToken: return "UnknownToken";
    case ParseErrorKind::UnbalancedParen: return "UnbalancedParen";
    case ParseErrorKind::UnclosedRing: return "UnclosedRing";
    case ParseErrorKind::ValenceExceeded: return "ValenceExceeded";
  }
  return "?";
}

ParseResult parse(std::string_view body) {
  ParseResult res;
  auto fail = [&res](ParseErrorKind kind, int pos, std::string msg) -> ParseResult& {
    res.error = ParseError{kind, pos, std::move(msg)};
    return res;
  };

  if (body.empty()) return fail(ParseErrorKind::EmptyInput, 0, "empty molecule body");

  MolGraph g;
  std::vector<int> atom_pos;
  int cur = -1;
  int pending = 0;  // 0 = implicit single, else 2 or 3
  int pending_pos = 0;
  struct OpenRing {
    int atom;
    int order;  // 0 = unspecified
    int pos;
  };
  std::array<std::optional<OpenRing>, 5> open_rings;
  struct BranchFrame {
    int atom;
    std::size_t atoms_at_open;
    int pos;
  };
  std::vector<BranchFrame> branch_stack;

  for (int i = 0; i < static_cast<int>(body.size()); ++i) {
    const char ch = body[static_cast<std::size_t>(i)];
    Element elem{};
    bool is_atom = true;
    switch (ch) {
      case 'C': elem = Element::C; break;
      case 'N': elem = Element::N; break;
      case 'O': elem = Element::O; break;
      case 'S': elem = Element::S; break;
      case 'F': elem = Element::F; break;
      default: is_atom = false; break;
    }
    if (is_atom) {
      const int idx = g.num_atoms();
      g.atoms.push_back(elem);
      atom_pos.push_back(i);
      if (cur >= 0) g.bonds.push_back({cur, idx, pending ? pending : 1});
      cur = idx;
      pending = 0;
      continue;
    }
    switch (ch) {
      case '=':
      case '#':
        if (cur < 0) return fail(ParseErrorKind::UnknownToken, i, "bond prefix with no preceding atom");
        if (pending) return fail(ParseErrorKind::UnknownToken, i, "consecutive bond prefixes");
        pending = (ch == '=') ? 2 : 3;
        pending_pos = i;
        break;
      case '(':
        if (cur < 0) return fail(ParseErrorKind::UnbalancedParen, i, "branch with no preceding atom");
        if (pending) return fail(ParseErrorKind::UnknownToken, i, "bond prefix before '('");
        branch_stack.push_back({cur, g.atoms.size(), i});
        break;
      case ')':
        if (pending) return fail(ParseErrorKind::UnknownToken, i, "bond prefix before ')'");
        if (branch_stack.empty()) return fail(ParseErrorKind::UnbalancedParen, i, "')' without matching '('");
        if (branch_stack.back().atoms_at_open == g.atoms.size()) {
          return fail(ParseErrorKind::UnbalancedParen, i, "empty branch");
        }
        cur = branch_stack.back().atom;
        branch_stack.pop_back();
        break;
      case '1':
      case '2':
      case '3':
      case '4': {
        const int digit = ch - '0';
        if (cur < 0) return fail(ParseErrorKind::UnknownToken, i, "ring-closure digit with no preceding atom");
        auto& slot = open_rings[static_cast<std::size_t>(digit)];
        if (slot.has_value()) {
          if (slot->atom == cur) return fail(ParseErrorKind::UnclosedRing, i, "ring closure bonds an atom to itself");
          bool dup = false;
          for (const Bond& b : g.bonds) {
            if ((b.a == slot->atom && b.b == cur) || (b.a == cur && b.b == slot->atom)) dup = true;
          }
          if (dup) return fail(ParseErrorKind::UnclosedRing, i, "ring closure duplicates an existing bond");
          const int order = std::max(slot->order ? slot->order : 1, pending ? pending : 1);
          g.bonds.push_back({slot->atom, cur, order});
          slot.reset();
        } else {
          slot = OpenRing{cur, pending, i};
        }
        pending = 0;
        break;
      }
      default:
        return fail(ParseErrorKind::UnknownToken, i,
                    (ch == '^' || ch == '$') ? "framing token inside body" : "unknown glyph");
    }
  }

  if (pending) return fail(ParseErrorKind::UnknownToken, pending_pos, "dangling bond prefix");
  if (!branch_stack.empty()) {
    return fail(ParseErrorKind::UnbalancedParen, branch_stack.back().pos, "unclosed '('");
  }
  for (const auto& slot : open_rings) {
    if (slot.has_value()) return fail(ParseErrorKind::UnclosedRing, slot->pos, "ring-closure digit never closed");
  }

  std::vector<int> used(g.atoms.size(), 0);
  for (const Bond& b : g.bonds) {
    used[static_cast<std::size_t>(b.a)] += b.order;
    used[static_cast<std::size_t>(b.b)] += b.order;
  }
  for (int a = 0; a < g.num_atoms(); ++a) {
    if (used[static_cast<std::size_t>(a)] > valence_limit(g.atoms[static_cast<std::size_t>(a)])) {
      return fail(ParseErrorKind::ValenceExceeded, atom_pos[static_cast<std::size_t>(a)], "valence limit exceeded");
    }
  }

  g.finalize();
  res.graph = std::move(g);
  return res;
}

ParseResult parse(std::span<const int> ids, const Vocabulary& vocab) {
  std::size_t begin = 0;
  std::size_t end = ids.size();
  if (begin < end && ids[begin] == Vocabulary::kStart) ++begin;
  if (end > begin && ids[end - 1] == Vocabulary::kStop) --end;
  std::string body;
  body.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const int id = ids[i];
    if (id < 0 || id >= vocab.size()) {
      ParseResult res;
      res.error = ParseError{ParseErrorKind::UnknownToken, static_cast<int>(i - begin), "token id out of range"};
      return res;
    }
    body.push_back(vocab.glyph(id));
  }
  return parse(body);
}

// ---------------------------------------------------------------------------
// Canonical labeling: 1-WL style color refinement on (element, degree, bond
// orders), individualization on ties, smallest DFS string over the candidate
// labelings.
// ---------------------------------------------------------------------------

namespace {

std::vector<int> initial_colors(const MolGraph& g) {
  const int n = g.num_atoms();
  std::vector<std::pair<std::vector<int>, int>> keys;
  keys.reserve(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    std::vector<int> key;
    key.push_back(static_cast<int>(g.atoms[static_cast<std::size_t>(v)]));
    key.push_back(g.degree(v));
    std::vector<int> orders;
    for (const auto& [u, o] : g.adjacency[static_cast<std::size_t>(v)]) orders.push_back(o);
    std::sort(orders.begin(), orders.end());
    key.insert(key.end(), orders.begin(), orders.end());
    keys.emplace_back(std::move(key), v);
  }
  std::vector<std::vector<int>> sorted;
  for (const auto& [k, v] : keys) sorted.push_back(k);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<int> colors(static_cast<std::size_t>(n));
  for (const auto& [k, v] : keys) {
    colors[static_cast<std::size_t>(v)] =
        static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), k) - sorted.begin());
  }
  return colors;
}

std::vector<int> refine_colors(const MolGraph& g, std::vector<int> colors) {
  const int n = g.num_atoms();
  while (true) {
    std::vector<std::pair<std::vector<int>, int>> keys;
    keys.reserve(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      std::vector<int> key;
      key.push_back(colors[static_cast<std::size_t>(v)]);
      std::vector<std::pair<int, int>> nb;
      for (const auto& [u, o] : g.adjacency[static_cast<std::size_t>(v)]) {
        nb.emplace_back(o, colors[static_cast<std::size_t>(u)]);
      }
      std::sort(nb.begin(), nb.end());
      for (const auto& [o, c] : nb) {
        key.push_back(o);
        key.push_back(c);
      }
      keys.emplace_back(std::move(key), v);
    }
    std::vector<std::vector<int>> sorted;
    for (const auto& [k, v] : keys) sorted.push_back(k);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> next(static_cast<std::size_t>(n));
    for (const auto& [k, v] : keys) {
      next[static_cast<std::size_t>(v)] =
          static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), k) - sorted.begin());
    }
    if (next == colors) return colors;
    colors = std::move(next);
  }
}

void enumerate_labelings(const MolGraph& g, std::vector<int> colors,
                         std::vector<std::vector<int>>& out, int& budget) {
  colors = refine_colors(g, std::move(colors));
  const int n = g.num_atoms();
  int tied_color = -1;
  for (int c = 0; c < n && tied_color < 0; ++c) {
    int count = 0;
    for (int v = 0; v < n; ++v) {
      if (colors[static_cast<std::size_t>(v)] == c) ++count;
    }
    if (count > 1) tied_color = c;
  }
  if (tied_color < 0) {
    out.push_back(std::move(colors));
    return;
  }
  for (int v = 0; v < n; ++v) {
    if (colors[static_cast<std::size_t>(v)] != tied_color) continue;
    if (--budget < 0) throw std::runtime_error("canonical labeling budget exceeded");
    std::vector<int> child = colors;
    child[static_cast<std::size_t>(v)] = n;  // individualize
    enumerate_labelings(g, std::move(child), out, budget);
  }
}

// Emits the graph as a grammar string following the canonical rank order,
// except that subtrees holding the far end of an open ring closure are visited
// first: this keeps the number of simultaneously open closure digits at the
// structural minimum, which must fit the grammar's four digits. Returns
// nullopt if even so more than four closures overlap.
std::optional<std::string> write_dfs_string(const MolGraph& g, const std::vector<int>& rank) {
  const int n = g.num_atoms();
  if (n == 0) return std::string{};
  int root = 0;
  for (int v = 0; v < n; ++v) {
    if (rank[static_cast<std::size_t>(v)] == 0) root = v;
  }

  // Pass 1: spanning tree in rank order; non-tree edges become ring closures.
  // tin/tout give subtree membership, which pass 2 needs for child ordering.
  std::vector<int> tin(static_cast<std::size_t>(n), -1);
  std::vector<int> tout(static_cast<std::size_t>(n), -1);
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  struct BackEdge {
    int a = 0;
    int b = 0;
    int order = 1;
    int digit = 0;
  };
  std::vector<BackEdge> backs;
  std::vector<std::pair<int, int>> seen_back;
  int timer = 0;
  std::function<void(int)> build = [&](int v) {
    tin[static_cast<std::size_t>(v)] = timer++;
    auto nbrs = g.adjacency[static_cast<std::size_t>(v)];
    std::sort(nbrs.begin(), nbrs.end(), [&](const auto& x, const auto& y) {
      return rank[static_cast<std::size_t>(x.first)] < rank[static_cast<std::size_t>(y.first)];
    });
    for (const auto& [u, order] : nbrs) {
      if (tin[static_cast<std::size_t>(u)] < 0) {
        parent[static_cast<std::size_t>(u)] = v;
        children[static_cast<std::size_t>(v)].push_back(u);
        build(u);
      } else if (u != parent[static_cast<std::size_t>(v)]) {
        const std::pair<int, int> id{std::min(u, v), std::max(u, v)};
        if (std::find(seen_back.begin(), seen_back.end(), id) == seen_back.end()) {
          seen_back.push_back(id);
          backs.push_back({v, u, order, 0});
        }
      }
    }
    tout[static_cast<std::size_t>(v)] = timer;
  };
  build(root);
  if (timer != n) return std::nullopt;  // disconnected input

  auto in_subtree = [&](int node, int x) {
    return tin[static_cast<std::size_t>(node)] <= tin[static_cast<std::size_t>(x)] &&
           tin[static_cast<std::size_t>(x)] < tout[static_cast<std::size_t>(node)];
  };

  std::vector<std::vector<int>> incident(static_cast<std::size_t>(n));
  for (int e = 0; e < static_cast<int>(backs.size()); ++e) {
    incident[static_cast<std::size_t>(backs[static_cast<std::size_t>(e)].a)].push_back(e);
    incident[static_cast<std::size_t>(backs[static_cast<std::size_t>(e)].b)].push_back(e);
  }

  // Pass 2: emit. A closure digit opens at whichever endpoint is emitted first
  // and closes at the other.
  std::string out;
  std::vector<bool> emitted(static_cast<std::size_t>(n), false);
  std::vector<int> pending;  // atoms owed a closure digit
  std::array<bool, 5> digit_free{};
  digit_free.fill(true);
  bool overflow = false;
  std::function<void(int)> emit = [&](int v) {
    if (overflow) return;
    emitted[static_cast<std::size_t>(v)] = true;
    out.push_back(element_glyph(g.atoms[static_cast<std::size_t>(v)]));

    std::vector<int> closes;
    std::vector<int> opens;
    for (int e : incident[static_cast<std::size_t>(v)]) {
      const auto& be = backs[static_cast<std::size_t>(e)];
      const int partner = be.a == v ? be.b : be.a;
      (emitted[static_cast<std::size_t>(partner)] ? closes : opens).push_back(e);
    }
    auto partner_of = [&](int e) {
      const auto& be = backs[static_cast<std::size_t>(e)];
      return be.a == v ? be.b : be.a;
    };
    std::sort(closes.begin(), closes.end(), [&](int x, int y) {
      return backs[static_cast<std::size_t>(x)].digit < backs[static_cast<std::size_t>(y)].digit;
    });
    std::sort(opens.begin(), opens.end(), [&](int x, int y) {
      return rank[static_cast<std::size_t>(partner_of(x))] < rank[static_cast<std::size_t>(partner_of(y))];
    });
    for (int e : closes) {
      out.push_back(static_cast<char>('0' + backs[static_cast<std::size_t>(e)].digit));
      digit_free[static_cast<std::size_t>(backs[static_cast<std::size_t>(e)].digit)] = true;
      pending.erase(std::find(pending.begin(), pending.end(), v));
    }
    for (int e : opens) {
      int digit = 0;
      for (int d = 1; d <= 4; ++d) {
        if (digit_free[static_cast<std::size_t>(d)]) {
          digit = d;
          break;
        }
      }
      if (digit == 0) {
        overflow = true;
        return;
      }
      digit_free[static_cast<std::size_t>(digit)] = false;
      backs[static_cast<std::size_t>(e)].digit = digit;
      pending.push_back(partner_of(e));
      if (backs[static_cast<std::size_t>(e)].order == 2) out.push_back('=');
      if (backs[static_cast<std::size_t>(e)].order == 3) out.push_back('#');
      out.push_back(static_cast<char>('0' + digit));
    }

    auto kids = children[static_cast<std::size_t>(v)];
    std::stable_sort(kids.begin(), kids.end(), [&](int x, int y) {
      auto carries_pending = [&](int c) {
        for (int p : pending) {
          if (in_subtree(c, p)) return true;
        }
        return false;
      };
      const bool px = carries_pending(x);
      const bool py = carries_pending(y);
      if (px != py) return px;
      return rank[static_cast<std::size_t>(x)] < rank[static_cast<std::size_t>(y)];
    });
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const int u = kids[i];
      const int order = g.bond_order_between(v, u);
      const bool last = (i + 1 == kids.size());
      if (!last) out.push_back('(');
      if (order == 2) out.push_back('=');
      if (order == 3) out.push_back('#');
      emit(u);
      if (overflow) return;
      if (!last) out.push_back(')');
    }
  };
  emit(root);
  if (overflow) return std::nullopt;
  return out;
}

// 2-core: iteratively peel atoms of degree <= 1; what survives is the ring
// systems plus their linkers.
MolGraph prune_side_chains(const MolGraph& g) {
  const int n = g.num_atoms();
  std::vector<int> deg(static_cast<std::size_t>(n));
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  std::deque<int> queue;
  for (int v = 0; v < n; ++v) {
    deg[static_cast<std::size_t>(v)] = g.degree(v);
    if (deg[static_cast<std::size_t>(v)] <= 1) queue.push_back(v);
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    if (!alive[static_cast<std::size_t>(v)]) continue;
    alive[static_cast<std::size_t>(v)] = false;
    for (const auto& [u, o] : g.adjacency[static_cast<std::size_t>(v)]) {
      if (!alive[static_cast<std::size_t>(u)]) continue;
      if (--deg[static_cast<std::size_t>(u)] <= 1) queue.push_back(u);
    }
  }
  MolGraph sub;
  std::vector<int> remap(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v) {
    if (alive[static_cast<std::size_t>(v)]) {
      remap[static_cast<std::size_t>(v)] = sub.num_atoms();
      sub.atoms.push_back(g.atoms[static_cast<std::size_t>(v)]);
    }
  }
  for (const Bond& b : g.bonds) {
    if (alive[static_cast<std::size_t>(b.a)] && alive[static_cast<std::size_t>(b.b)]) {
      sub.bonds.push_back({remap[static_cast<std::size_t>(b.a)], remap[static_cast<std::size_t>(b.b)], b.order});
    }
  }
  sub.finalize();
  return sub;
}

// Rank-ordered atom/edge listing for graphs the grammar writer cannot express
// (cycle rank >= 5 can exhaust the four closure digits). Still deterministic
// and permutation-invariant, but deliberately unparseable ('*' prefix) so it
// can only serve as an identity key.
std::string write_edge_list(const MolGraph& g, const std::vector<int>& rank) {
  const int n = g.num_atoms();
  std::vector<int> atom_of_rank(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) atom_of_rank[static_cast<std::size_t>(rank[static_cast<std::size_t>(v)])] = v;
  std::string out = "*";
  for (int r = 0; r < n; ++r) {
    out.push_back(element_glyph(g.atoms[static_cast<std::size_t>(atom_of_rank[static_cast<std::size_t>(r)])]));
  }
  std::vector<std::array<int, 3>> edges;
  for (const Bond& b : g.bonds) {
    const int ra = rank[static_cast<std::size_t>(b.a)];
    const int rb = rank[static_cast<std::size_t>(b.b)];
    edges.push_back({std::min(ra, rb), std::max(ra, rb), b.order});
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [a, b, o] : edges) {
    out += '|';
    out += std::to_string(a);
    out += '-';
    out += std::to_string(b);
    if (o != 1) {
      out += ':';
      out += std::to_string(o);
    }
  }
  return out;
}

}  // namespace

std::string canonical_string(const MolGraph& g) {
  if (g.num_atoms() == 0) return {};
  std::vector<std::vector<int>> labelings;
  int budget = 100000;
  enumerate_labelings(g, initial_colors(g), labelings, budget);
  std::string best;
  bool found = false;
  for (const auto& rank : labelings) {
    std::optional<std::string> s = write_dfs_string(g, rank);
    if (!s) continue;
    if (!found || *s < best) {
      best = std::move(*s);
      found = true;
    }
  }
  if (found) return best;
  for (const auto& rank : labelings) {
    const std::string s = write_edge_list(g, rank);
    if (best.empty() || s < best) best = s;
  }
  return best;
}

ScaffoldKey molecular_scaffold(const MolGraph& g) {
  MolGraph sub = prune_side_chains(g);
  if (sub.num_atoms() == 0) return {std::string(kEmptyScaffold), ScaffoldKind::Molecular};
  return {canonical_string(sub), ScaffoldKind::Molecular};
}

ScaffoldKey topological_scaffold(const MolGraph& g) {
  MolGraph sub = prune_side_chains(g);
  if (sub.num_atoms() == 0) return {std::string(kEmptyScaffold), ScaffoldKind::Topological};
  for (auto& a : sub.atoms) a = Element::C;
  for (auto& b : sub.bonds) b.order = 1;
  sub.finalize();
  return {canonical_string(sub), ScaffoldKind::Topological};
}

MolGraph shuffle_atoms(const MolGraph& g, Rng& rng) {
  const int n = g.num_atoms();
  const auto perm = rng.permutation(static_cast<std::size_t>(n));
  MolGraph out;
  out.atoms.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    out.atoms[perm[static_cast<std::size_t>(v)]] = g.atoms[static_cast<std::size_t>(v)];
  }
  for (const Bond& b : g.bonds) {
    Bond nb{static_cast<int>(perm[static_cast<std::size_t>(b.a)]), static_cast<int>(perm[static_cast<std::size_t>(b.b)]), b.order};
    if (rng.uniform01() < 0.5) std::swap(nb.a, nb.b);
    out.bonds.push_back(nb);
  }
  const auto bond_perm = rng.permutation(out.bonds.size());
  std::vector<Bond> shuffled(out.bonds.size());
  for (std::size_t i = 0; i < out.bonds.size(); ++i) shuffled[bond_perm[i]] = out.bonds[i];
  out.bonds = std::move(shuffled);
  out.finalize();
  return out;
}

std::vector<int> ring_sizes(const MolGraph& g) {
  std::vector<int> sizes;
  const int n = g.num_atoms();
  for (std::size_t e = 0; e < g.bonds.size(); ++e) {
    const int s = g.bonds[e].a;
    const int t = g.bonds[e].b;
    // Shortest path s->t avoiding this bond; unreachable means the bond is a bridge.
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    std::deque<int> queue{s};
    dist[static_cast<std::size_t>(s)] = 0;
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      for (const auto& [u, o] : g.adjacency[static_cast<std::size_t>(v)]) {
        if (v == s && u == t) continue;
        if (v == t && u == s) continue;
        if (dist[static_cast<std::size_t>(u)] < 0) {
          dist[static_cast<std::size_t>(u)] = dist[static_cast<std::size_t>(v)] + 1;
          queue.push_back(u);
        }
      }
    }
    if (dist[static_cast<std::size_t>(t)] > 0) sizes.push_back(dist[static_cast<std::size_t>(t)] + 1);
  }
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  return sizes;
}

}  // namespace moldiv
