#include "moldiv/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "moldiv/rng.hpp"

namespace moldiv {

namespace {

struct StrategyName {
  Strategy strategy;
  std::string_view name;
};

constexpr StrategyName kStrategyNames[] = {
    {Strategy::None, "none"},         {Strategy::IMS, "ims"},
    {Strategy::ErfIMS, "erf_ims"},    {Strategy::LinIMS, "lin_ims"},
    {Strategy::SigIMS, "sig_ims"},    {Strategy::TanhIMS, "tanh_ims"},
    {Strategy::DA, "da"},             {Strategy::MinDis, "min_dis"},
    {Strategy::MeanDis, "mean_dis"},  {Strategy::MinDisR, "min_dis_r"},
    {Strategy::MeanDisR, "mean_dis_r"}, {Strategy::KLUCB, "kl_ucb"},
    {Strategy::RND, "rnd"},           {Strategy::Inf, "inf"},
    {Strategy::TanhRND, "tanh_rnd"},  {Strategy::TanhInf, "tanh_inf"},
};

}  // namespace

std::string_view strategy_name(Strategy s) {
  for (const auto& e : kStrategyNames) {
    if (e.strategy == s) return e.name;
  }
  return "none";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
  for (const auto& e : kStrategyNames) {
    if (e.name == name) return e.strategy;
  }
  return std::nullopt;
}

std::vector<Strategy> all_strategies() {
  std::vector<Strategy> out;
  for (const auto& e : kStrategyNames) out.push_back(e.strategy);
  return out;
}

// ---------------------------------------------------------------------------
// Memory
// ---------------------------------------------------------------------------

void ScaffoldMemory::insert_active(ActiveRecord rec) {
  ScaffoldStats& st = mol_scaffolds_[rec.mol_scaffold.canonical];
  ++st.count;
  st.reward_sum += rec.reward;
  topo_scaffolds_.insert(rec.topo_scaffold.canonical);
  seen_canonicals_.insert(rec.canonical);
  actives_.push_back(std::move(rec));
}

const ScaffoldStats* ScaffoldMemory::stats(const ScaffoldKey& key) const {
  const auto it = mol_scaffolds_.find(key.canonical);
  return it == mol_scaffolds_.end() ? nullptr : &it->second;
}

bool ScaffoldMemory::try_add_diverse(const Fingerprint& fp, double D) {
  for (const Fingerprint& kept : diverse_set_) {
    if (tanimoto_distance(kept, fp) < D) return false;
  }
  diverse_set_.push_back(fp);
  return true;
}

// ---------------------------------------------------------------------------
// Penalties
// ---------------------------------------------------------------------------

double penalty_ims(long long N, int m) { return N >= m ? 0.0 : 1.0; }

double penalty_erf(long long N, int m) {
  const double s = std::sqrt(std::acos(-1.0)) / static_cast<double>(m);
  return 1.0 + std::erf(s) - std::erf(s * static_cast<double>(N));
}

double penalty_linear(long long N, int m) {
  return std::max(0.0, 1.0 - static_cast<double>(N) / static_cast<double>(m));
}

double penalty_sigmoid(long long N, int m) {
  const double x = (2.0 * static_cast<double>(N) / static_cast<double>(m) - 1.0) / 0.15;
  return 1.0 - 1.0 / (1.0 + std::exp(-x));
}

double penalty_tanh(long long N, int m, double c_tanh) {
  return 1.0 - std::tanh(c_tanh * static_cast<double>(N - 1) / static_cast<double>(m));
}

// ---------------------------------------------------------------------------
// Bernoulli UCB
// ---------------------------------------------------------------------------

namespace {

double bernoulli_kl(double p, double q) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (p >= 1.0) return q > 0.0 ? -std::log(q) : inf;
  if (q >= 1.0) return inf;
  if (p <= 0.0) return -std::log1p(-q);
  if (q <= 0.0) return inf;
  return p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
}

}  // namespace

double klucb_solve_bound(double p_hat, long long N, double bound, double tol) {
  p_hat = std::clamp(p_hat, 0.0, 1.0);
  if (p_hat >= 1.0) return 1.0;
  double lo = p_hat;
  double hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (static_cast<double>(N) * bernoulli_kl(p_hat, mid) <= bound) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double klucb_solve(double p_hat, long long N, long long n, double c, double tol) {
  if (n < 2 && c != 0.0) {
    throw DomainError("log log n undefined for n < 2 with nonzero exploration constant");
  }
  const double logn = std::log(static_cast<double>(n));
  const double bound = logn + (c != 0.0 ? c * std::log(logn) : 0.0);
  return klucb_solve_bound(p_hat, N, bound, tol);
}

// ---------------------------------------------------------------------------
// Batch shaping
// ---------------------------------------------------------------------------

BatchMolecule make_batch_molecule(std::string_view body, double reward) {
  BatchMolecule out;
  out.reward = reward;
  const ParseResult parsed = parse(body);
  if (!parsed.ok()) return out;
  out.valid = true;
  out.canonical = canonical_string(*parsed.graph);
  out.mol_scaffold = molecular_scaffold(*parsed.graph);
  out.topo_scaffold = topological_scaffold(*parsed.graph);
  out.fp = fingerprint(*parsed.graph);
  return out;
}

std::vector<double> minmax_rescale(const std::vector<double>& values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.size() < 2) return out;
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mx == *mn) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - *mn) / (*mx - *mn);
  }
  return out;
}

namespace {

bool needs_rnd_deltas(Strategy s) { return s == Strategy::RND || s == Strategy::TanhRND; }

double extrinsic_penalty(Strategy s, const ShapingParams& p, long long N) {
  switch (s) {
    case Strategy::IMS:
      return penalty_ims(N, p.m);
    case Strategy::ErfIMS:
      return penalty_erf(N, p.m);
    case Strategy::LinIMS:
      return penalty_linear(N, p.m);
    case Strategy::SigIMS:
      return penalty_sigmoid(N, p.m);
    case Strategy::TanhIMS:
    case Strategy::TanhRND:
    case Strategy::TanhInf:
      return penalty_tanh(N, p.m, p.c_tanh);
    default:
      return 1.0;
  }
}

// Min or mean distance from fp to reference; empty reference scores 1.
double set_distance(const Fingerprint& fp, const std::vector<const Fingerprint*>& ref, bool use_min) {
  if (ref.empty()) return 1.0;
  if (use_min) {
    double best = std::numeric_limits<double>::infinity();
    for (const Fingerprint* r : ref) best = std::min(best, tanimoto_distance(fp, *r));
    return best;
  }
  double sum = 0.0;
  for (const Fingerprint* r : ref) sum += tanimoto_distance(fp, *r);
  return sum / static_cast<double>(ref.size());
}

}  // namespace

std::vector<double> shape_batch(Strategy strategy, const ShapingParams& params,
                                ScaffoldMemory& memory, const std::vector<BatchMolecule>& batch,
                                std::uint64_t step_seed, const std::vector<double>* rnd_deltas) {
  if (needs_rnd_deltas(strategy) && (!rnd_deltas || rnd_deltas->size() != batch.size())) {
    throw std::invalid_argument("strategy requires one prediction error per batch molecule");
  }

  const std::size_t pre_batch_actives = memory.actives().size();
  memory.note_generated(static_cast<long long>(batch.size()));

  std::vector<double> shaped(batch.size(), 0.0);
  std::vector<std::size_t> fresh;  // indices of newly inserted actives, in order

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const BatchMolecule& mol = batch[i];
    if (!mol.valid || mol.reward < params.h) {
      shaped[i] = mol.reward;
      continue;
    }
    if (memory.seen(mol.canonical)) {
      shaped[i] = 0.0;
      continue;
    }
    ActiveRecord rec;
    rec.canonical = mol.canonical;
    rec.mol_scaffold = mol.mol_scaffold;
    rec.topo_scaffold = mol.topo_scaffold;
    rec.fp = mol.fp;
    rec.reward = mol.reward;
    memory.insert_active(std::move(rec));
    const long long N = memory.stats(mol.mol_scaffold)->count;
    shaped[i] = extrinsic_penalty(strategy, params, N) * mol.reward;
    fresh.push_back(i);
  }

  switch (strategy) {
    case Strategy::DA: {
      std::vector<Fingerprint> trial = memory.diverse_set();
      long long gained = 0;
      for (std::size_t i : fresh) {
        bool far = true;
        for (const Fingerprint& kept : trial) {
          if (tanimoto_distance(kept, batch[i].fp) < params.D) {
            far = false;
            break;
          }
        }
        if (far) {
          trial.push_back(batch[i].fp);
          ++gained;
        }
      }
      for (std::size_t i : fresh) shaped[i] += static_cast<double>(gained);
      break;
    }
    case Strategy::MinDis:
    case Strategy::MeanDis: {
      const bool use_min = strategy == Strategy::MinDis;
      for (std::size_t i : fresh) {
        std::vector<const Fingerprint*> ref;
        for (const Fingerprint& kept : memory.diverse_set()) ref.push_back(&kept);
        for (std::size_t j : fresh) {
          if (j != i) ref.push_back(&batch[j].fp);
        }
        shaped[i] += set_distance(batch[i].fp, ref, use_min);
      }
      break;
    }
    case Strategy::MinDisR:
    case Strategy::MeanDisR: {
      const bool use_min = strategy == Strategy::MinDisR;
      // Reference sample drawn once per step from the pre-batch actives.
      std::vector<const Fingerprint*> sample;
      const auto& actives = memory.actives();
      if (pre_batch_actives <= static_cast<std::size_t>(params.coreset_size)) {
        for (std::size_t k = 0; k < pre_batch_actives; ++k) sample.push_back(&actives[k].fp);
      } else {
        Rng rng = Rng::child(step_seed, 0xc05eull);
        for (std::uint32_t k :
             rng.sample_without_replacement(pre_batch_actives, static_cast<std::size_t>(params.coreset_size))) {
          sample.push_back(&actives[k].fp);
        }
      }
      for (std::size_t i : fresh) {
        std::vector<const Fingerprint*> ref = sample;
        for (std::size_t j : fresh) {
          if (j != i) ref.push_back(&batch[j].fp);
        }
        shaped[i] += set_distance(batch[i].fp, ref, use_min);
      }
      break;
    }
    case Strategy::KLUCB: {
      for (std::size_t i : fresh) {
        const ScaffoldStats* st = memory.stats(batch[i].mol_scaffold);
        shaped[i] = klucb_solve(st->reward_sum / static_cast<double>(st->count), st->count,
                                memory.n_total(), params.c);
      }
      break;
    }
    case Strategy::RND:
    case Strategy::TanhRND: {
      std::vector<double> deltas;
      for (std::size_t i : fresh) deltas.push_back((*rnd_deltas)[i]);
      const std::vector<double> bonus = minmax_rescale(deltas);
      for (std::size_t k = 0; k < fresh.size(); ++k) shaped[fresh[k]] += bonus[k];
      break;
    }
    case Strategy::Inf:
    case Strategy::TanhInf: {
      std::vector<double> info;
      const double scaffolds = static_cast<double>(memory.num_molecular_scaffolds());
      for (std::size_t i : fresh) {
        const double p = static_cast<double>(memory.stats(batch[i].mol_scaffold)->count) / scaffolds;
        info.push_back(std::max(0.0, -std::log(p)));
      }
      if (fresh.size() > 2) {
        const std::vector<double> bonus = minmax_rescale(info);
        for (std::size_t k = 0; k < fresh.size(); ++k) shaped[fresh[k]] += bonus[k];
      } else {
        for (std::size_t k = 0; k < fresh.size(); ++k) shaped[fresh[k]] += info[k];
      }
      break;
    }
    default:
      break;
  }

  for (std::size_t i : fresh) memory.try_add_diverse(batch[i].fp, params.D);
  return shaped;
}

}  // namespace moldiv
