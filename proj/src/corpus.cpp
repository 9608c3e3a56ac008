#include "moldiv/corpus.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <stdexcept>

#include "moldiv/chem.hpp"

namespace moldiv {

namespace {

constexpr Element kElements[5] = {Element::C, Element::N, Element::O, Element::S, Element::F};

struct WalkState {
  std::string out;
  std::vector<int> rem;  // free valence per atom (ring reservations deducted)
  int cur = -1;
  struct OpenRing {
    int digit;
    int atom;
    int atoms_at_open;
  };
  std::vector<OpenRing> rings;
  struct Branch {
    int anchor;
    std::size_t atoms_at_open;
  };
  std::vector<Branch> branches;
  std::vector<std::pair<int, int>> bonded;
  int rings_opened = 0;

  int atoms() const { return static_cast<int>(rem.size()); }
  bool pair_bonded(int a, int b) const {
    return std::find(bonded.begin(), bonded.end(), std::make_pair(std::min(a, b), std::max(a, b))) != bonded.end();
  }
  void bond(int a, int b) { bonded.emplace_back(std::min(a, b), std::max(a, b)); }
};

enum class Move { Stop, AddAtom, OpenBranch, CloseBranch, OpenRing, CloseRing };

// One attempt; empty string means the walk hit the token cap without being
// able to stop legally.
std::string attempt(Rng& rng, const CorpusParams& p) {
  WalkState st;
  while (true) {
    if (static_cast<int>(st.out.size()) >= p.max_body_tokens) return {};
    const int budget = p.max_body_tokens - static_cast<int>(st.out.size());
    // Each open ring needs 1 token to close, each open branch 1 token.
    const int obligations = static_cast<int>(st.rings.size() + st.branches.size());
    const bool cramped = budget <= obligations + 2;

    std::vector<Move> moves;
    std::vector<double> weights;
    auto offer = [&](Move m, double w) {
      if (w > 0.0) {
        moves.push_back(m);
        weights.push_back(w);
      }
    };

    const bool can_stop = st.atoms() >= 1 && st.rings.empty() && st.branches.empty();
    if (can_stop) {
      double w = st.atoms() >= 4 ? 1.0 / (1.0 + std::exp(-(st.atoms() - p.target_atoms) / 2.0)) * 2.0 : 0.0;
      if (cramped) w = 50.0;
      offer(Move::Stop, w);
    }
    if (st.atoms() == 0 || (st.rem[static_cast<std::size_t>(st.cur)] >= 1 && !cramped)) {
      offer(Move::AddAtom, 3.0);
    }
    if (!cramped && st.atoms() >= 1 && st.rem[static_cast<std::size_t>(st.cur)] >= 2 &&
        static_cast<int>(st.branches.size()) < 3) {
      offer(Move::OpenBranch, p.branch_open_weight);
    }
    if (!st.branches.empty() && st.branches.back().atoms_at_open < st.rem.size()) {
      offer(Move::CloseBranch, cramped ? 25.0 : p.branch_close_weight);
    }
    if (!cramped && st.atoms() >= 1 && st.rem[static_cast<std::size_t>(st.cur)] >= 1 &&
        static_cast<int>(st.rings.size()) < p.max_open_rings && st.rings_opened < p.max_total_rings) {
      offer(Move::OpenRing, p.ring_open_weight);
    }
    int closable = -1;
    for (std::size_t i = 0; i < st.rings.size(); ++i) {
      const auto& r = st.rings[i];
      if (r.atom != st.cur && st.rem[static_cast<std::size_t>(st.cur)] >= 1 && !st.pair_bonded(r.atom, st.cur)) {
        closable = static_cast<int>(i);
      }
    }
    if (closable >= 0) {
      const int span = st.atoms() - st.rings[static_cast<std::size_t>(closable)].atoms_at_open;
      double w = span >= 4 ? 3.0 : (span >= 2 ? 0.25 : 0.0);
      if (cramped) w = std::max(w, 25.0);
      offer(Move::CloseRing, w);
    }

    if (moves.empty()) return {};
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
    const Move move = moves[static_cast<std::size_t>(rng.categorical(weights))];

    switch (move) {
      case Move::Stop:
        return st.out;
      case Move::AddAtom: {
        int order = 1;
        if (st.atoms() > 0) {
          const int rem_cur = st.rem[static_cast<std::size_t>(st.cur)];
          double w1 = 1.0;
          double w2 = rem_cur >= 2 ? p.double_bond_weight : 0.0;
          double w3 = rem_cur >= 3 ? p.triple_bond_weight : 0.0;
          const double sum = w1 + w2 + w3;
          std::array<double, 3> probs{w1 / sum, w2 / sum, w3 / sum};
          order = 1 + rng.categorical(probs);
        }
        // Element must afford the incoming bond plus room to grow mid-chain.
        std::array<double, 5> ew{};
        double esum = 0.0;
        for (int e = 0; e < 5; ++e) {
          if (valence_limit(kElements[e]) >= order) {
            ew[static_cast<std::size_t>(e)] = p.elem_weights[e];
            esum += ew[static_cast<std::size_t>(e)];
          }
        }
        for (double& w : ew) w /= esum;
        const int e = rng.categorical(ew);
        const Element elem = kElements[e];
        if (order == 2) st.out.push_back('=');
        if (order == 3) st.out.push_back('#');
        st.out.push_back(element_glyph(elem));
        const int idx = st.atoms();
        st.rem.push_back(valence_limit(elem));
        if (st.cur >= 0) {
          st.rem[static_cast<std::size_t>(st.cur)] -= order;
          st.rem[static_cast<std::size_t>(idx)] -= order;
          st.bond(st.cur, idx);
        }
        st.cur = idx;
        break;
      }
      case Move::OpenBranch:
        st.out.push_back('(');
        st.branches.push_back({st.cur, st.rem.size()});
        break;
      case Move::CloseBranch:
        st.out.push_back(')');
        st.cur = st.branches.back().anchor;
        st.branches.pop_back();
        break;
      case Move::OpenRing: {
        int digit = 0;
        for (int d = 1; d <= 4; ++d) {
          bool used = false;
          for (const auto& r : st.rings) used |= (r.digit == d);
          if (!used) {
            digit = d;
            break;
          }
        }
        st.out.push_back(static_cast<char>('0' + digit));
        st.rem[static_cast<std::size_t>(st.cur)] -= 1;  // reserve for the closure bond
        st.rings.push_back({digit, st.cur, st.atoms()});
        ++st.rings_opened;
        break;
      }
      case Move::CloseRing: {
        const auto r = st.rings[static_cast<std::size_t>(closable)];
        st.out.push_back(static_cast<char>('0' + r.digit));
        st.rem[static_cast<std::size_t>(st.cur)] -= 1;
        st.bond(r.atom, st.cur);
        st.rings.erase(st.rings.begin() + closable);
        break;
      }
    }
  }
}

}  // namespace

std::string sample_molecule(Rng& rng, const CorpusParams& params) {
  for (int tries = 0; tries < 200; ++tries) {
    std::string body = attempt(rng, params);
    if (body.empty()) continue;
    if (parse(body).ok()) return body;
  }
  throw std::logic_error("molecule walk failed to produce a valid body");
}

std::vector<std::string> generate_corpus(int count, std::uint64_t seed, const CorpusParams& params) {
  std::vector<std::string> lines;
  lines.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::child(seed, /*label=*/0xC0A9u, static_cast<std::uint64_t>(i));
    lines.push_back(sample_molecule(rng, params));
  }
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const std::string& line : lines) {
    out << line << '\n';
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace moldiv
