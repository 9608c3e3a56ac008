#include "moldiv/rnd.hpp"

#include "moldiv/rng.hpp"

namespace moldiv {

RndState make_rnd_state(const PolicyNet& prior, std::uint64_t seed) {
  RndState state;
  state.fixed = PolicyNet::init(prior.dims, mix64(seed, 0xf1edull));
  state.predictor = prior;
  return state;
}

double rnd_delta(const RndState& state, std::span<const int> tokens) {
  const double diff = log_likelihood(state.predictor, tokens) - log_likelihood(state.fixed, tokens);
  return diff * diff;
}

std::vector<double> rnd_delta_batch(const RndState& state,
                                    const std::vector<std::vector<int>>& seqs) {
  const std::vector<double> pred = log_likelihood_batch(state.predictor, seqs);
  const std::vector<double> fixed = log_likelihood_batch(state.fixed, seqs);
  std::vector<double> out(seqs.size());
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const double diff = pred[i] - fixed[i];
    out[i] = diff * diff;
  }
  return out;
}

void rnd_train(RndState& state, const std::vector<std::vector<int>>& seqs) {
  if (seqs.empty()) return;
  const std::vector<double> targets = log_likelihood_batch(state.fixed, seqs);
  loglik_regression_step(state.predictor, seqs, targets, state.opt, state.opt_state);
}

}  // namespace moldiv
