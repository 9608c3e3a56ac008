#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "moldiv/chem.hpp"
#include "moldiv/fingerprint.hpp"

namespace moldiv {

enum class Strategy {
  None,
  IMS,
  ErfIMS,
  LinIMS,
  SigIMS,
  TanhIMS,
  DA,
  MinDis,
  MeanDis,
  MinDisR,
  MeanDisR,
  KLUCB,
  RND,
  Inf,
  TanhRND,
  TanhInf,
};

// Config-file spelling ("tanh_rnd", "kl_ucb", ...). Round-trips with
// strategy_from_name.
std::string_view strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);
std::vector<Strategy> all_strategies();

struct ShapingParams {
  double h = 0.5;         // active threshold on the extrinsic reward
  int m = 25;             // scaffold bucket size for the penalties
  double D = 0.7;         // diverse-set distance threshold
  double c = 0.0;         // UCB exploration constant
  double c_tanh = 3.0;    // slope of the tanh penalty
  int coreset_size = 5000;  // reference-sample size for MinDisR / MeanDisR
};

struct ActiveRecord {
  std::string canonical;
  ScaffoldKey mol_scaffold;
  ScaffoldKey topo_scaffold;
  Fingerprint fp;
  double reward = 0.0;
};

struct ScaffoldStats {
  long long count = 0;     // actives carrying this scaffold
  double reward_sum = 0.0;
};

// Per-experiment memory of everything generated: per-scaffold statistics,
// the ordered active list, duplicate bookkeeping, the greedily maintained
// diverse set and the total generation count.
class ScaffoldMemory {
 public:
  bool seen(const std::string& canonical) const { return seen_canonicals_.count(canonical) > 0; }

  // Precondition: !seen(rec.canonical).
  void insert_active(ActiveRecord rec);

  // Count of every molecule ever evaluated, valid or not.
  void note_generated(long long k) { n_total_ += k; }
  long long n_total() const { return n_total_; }

  const ScaffoldStats* stats(const ScaffoldKey& key) const;
  std::size_t num_molecular_scaffolds() const { return mol_scaffolds_.size(); }
  std::size_t num_topological_scaffolds() const { return topo_scaffolds_.size(); }

  const std::vector<ActiveRecord>& actives() const { return actives_; }
  const std::vector<Fingerprint>& diverse_set() const { return diverse_set_; }

  // Greedy packing step: adds fp iff it is >= D away from every kept
  // fingerprint. Returns true when added.
  bool try_add_diverse(const Fingerprint& fp, double D);

 private:
  std::unordered_map<std::string, ScaffoldStats> mol_scaffolds_;
  std::unordered_set<std::string> topo_scaffolds_;
  std::unordered_set<std::string> seen_canonicals_;
  std::vector<ActiveRecord> actives_;
  std::vector<Fingerprint> diverse_set_;
  long long n_total_ = 0;
};

// Scaffold-bucket penalties. N is the post-insertion count of the molecule's
// scaffold; every function is in [0,1] and non-increasing in N.
double penalty_ims(long long N, int m);                    // 0 once N >= m
double penalty_erf(long long N, int m);                    // 1 + erf(sqrt(pi)/m) - erf(sqrt(pi) N/m)
double penalty_linear(long long N, int m);                 // max(0, 1 - N/m)
double penalty_sigmoid(long long N, int m);                // 1 - logistic((2N/m - 1)/0.15)
double penalty_tanh(long long N, int m, double c_tanh);    // 1 - tanh(c_tanh (N-1)/m)

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Largest q in [p_hat, 1] with N * KL(p_hat, q) <= bound (Bernoulli KL,
// bisection to tol). KL(0,q) = -log(1-q), KL(1,q) = -log q, KL(p,1) = inf
// for p < 1.
double klucb_solve_bound(double p_hat, long long N, double bound, double tol = 1e-6);

// Bound log(n) + c log(log(n)). Throws DomainError when n < 2 with c != 0.
double klucb_solve(double p_hat, long long N, long long n, double c, double tol = 1e-6);

// One generated molecule with its precomputed extrinsic reward. Invalid
// molecules (parse failures) carry no graph-derived fields.
struct BatchMolecule {
  bool valid = false;
  std::string canonical;
  ScaffoldKey mol_scaffold;
  ScaffoldKey topo_scaffold;
  Fingerprint fp;
  double reward = -1.0;
};

// Parses body and fills the graph-derived fields; reward is attached as
// given. A failed parse yields valid = false.
BatchMolecule make_batch_molecule(std::string_view body, double reward);

// Diversity-aware reward for one generated batch, in generation order:
//   - invalid molecules and non-actives (reward < h) pass through unshaped;
//   - a repeated active canonical form scores 0;
//   - each new active is inserted first, then multiplied by the strategy's
//     penalty evaluated at the post-insertion scaffold count;
//   - once the whole batch is inserted, the strategy's intrinsic bonus is
//     added (or, for the UCB strategy, replaces the reward);
//   - finally the diverse set absorbs the new actives greedily.
// step_seed drives the per-step reference sample of MinDisR / MeanDisR.
// rnd_deltas: raw per-molecule prediction errors, required by the
// distillation-based strategies (throws std::invalid_argument if missing).
std::vector<double> shape_batch(Strategy strategy, const ShapingParams& params,
                                ScaffoldMemory& memory, const std::vector<BatchMolecule>& batch,
                                std::uint64_t step_seed,
                                const std::vector<double>* rnd_deltas = nullptr);

// (delta - min)/(max - min) over the values; all zeros when fewer than two
// values or max == min.
std::vector<double> minmax_rescale(const std::vector<double>& values);

}  // namespace moldiv
