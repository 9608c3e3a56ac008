#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moldiv/policy.hpp"

namespace moldiv {

// Novelty signal from network distillation: a frozen random network and a
// trainable predictor; sequences the predictor has not been trained near
// produce large prediction errors.
struct RndState {
  PolicyNet fixed;      // random init, never updated
  PolicyNet predictor;  // starts from the prior
  Adam opt{.lr = 1e-3};
  AdamState opt_state;
};

// fixed gets a fresh random initialization derived from seed; the predictor
// starts as a copy of prior (same architecture for all three).
RndState make_rnd_state(const PolicyNet& prior, std::uint64_t seed);

// Squared difference of the two networks' sequence log-likelihoods.
double rnd_delta(const RndState& state, std::span<const int> tokens);
std::vector<double> rnd_delta_batch(const RndState& state,
                                    const std::vector<std::vector<int>>& seqs);

// One optimizer step moving the predictor's log-likelihoods toward the fixed
// net's on the given sequences (mean squared error). No-op when empty.
void rnd_train(RndState& state, const std::vector<std::vector<int>>& seqs);

}  // namespace moldiv
