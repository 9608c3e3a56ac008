#include "moldiv/rnd.hpp"

#include <cmath>

#include "doctest.h"
#include "moldiv/corpus.hpp"
#include "moldiv/rng.hpp"

using namespace moldiv;

namespace {

NetDims toy_dims() {
  NetDims d;
  d.emb = 4;
  d.hidden = 8;
  d.layers = 1;
  return d;
}

std::vector<int> framed(std::string_view body) {
  Vocabulary vocab;
  auto ids = vocab.encode(body);
  REQUIRE(ids.has_value());
  std::vector<int> out{Vocabulary::kStart};
  out.insert(out.end(), ids->begin(), ids->end());
  out.push_back(Vocabulary::kStop);
  return out;
}

}  // namespace

TEST_CASE("prediction error is a squared log-likelihood gap") {
  PolicyNet prior = PolicyNet::init(toy_dims(), 5);
  RndState state = make_rnd_state(prior, 17);

  // The fixed net differs from both prior and predictor.
  CHECK(state.fixed.param_hash() != prior.param_hash());
  CHECK(state.predictor.param_hash() == prior.param_hash());

  const auto tokens = framed("CC1CCCCC1");
  const double delta = rnd_delta(state, tokens);
  CHECK(delta >= 0.0);
  const double gap = log_likelihood(state.predictor, tokens) - log_likelihood(state.fixed, tokens);
  CHECK(delta == doctest::Approx(gap * gap).epsilon(1e-12));

  // Predictor identical to the fixed net: zero everywhere.
  RndState mirror = state;
  mirror.predictor = mirror.fixed;
  CHECK(rnd_delta(mirror, tokens) == 0.0);
  CHECK(rnd_delta(mirror, framed("CCO")) == 0.0);

  // Batch evaluation agrees with one-at-a-time.
  const std::vector<std::vector<int>> seqs{framed("CCO"), framed("C"), framed("N1CCCC1")};
  const auto batch = rnd_delta_batch(state, seqs);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    CHECK(batch[i] == rnd_delta(state, seqs[i]));
  }
}

TEST_CASE("training shrinks the prediction error and never touches the fixed net") {
  PolicyNet prior = PolicyNet::init(toy_dims(), 6);
  RndState state = make_rnd_state(prior, 23);
  const std::uint64_t fixed_hash = state.fixed.param_hash();

  const std::vector<std::vector<int>> seqs{framed("CC1CCCCC1"), framed("OC=O")};
  const double before = rnd_delta(state, seqs[0]) + rnd_delta(state, seqs[1]);
  for (int i = 0; i < 20; ++i) {
    rnd_train(state, seqs);
    CHECK(state.fixed.param_hash() == fixed_hash);
  }
  const double after = rnd_delta(state, seqs[0]) + rnd_delta(state, seqs[1]);
  CHECK(after < before);

  // Empty batch: everything untouched.
  RndState idle = make_rnd_state(prior, 23);
  const std::uint64_t pred_hash = idle.predictor.param_hash();
  rnd_train(idle, {});
  CHECK(idle.predictor.param_hash() == pred_hash);
  CHECK(idle.opt_state.t == 0);
}

TEST_CASE("novelty: untrained structures score larger errors than trained ones") {
  // Train the predictor on ring-free corpus lines only, then compare its
  // error on held-in ring-free lines vs never-seen ring-heavy lines.
  CorpusParams ring_free;
  ring_free.ring_open_weight = 0.0;
  CorpusParams ring_heavy;
  ring_heavy.ring_open_weight = 3.0;

  const auto train_lines = generate_corpus(120, 31, ring_free);
  const auto held_in = generate_corpus(100, 32, ring_free);
  const auto held_out = generate_corpus(100, 33, ring_heavy);

  Vocabulary vocab;
  auto frame_all = [&](const std::vector<std::string>& lines) {
    std::vector<std::vector<int>> out;
    for (const auto& l : lines) out.push_back(framed(l));
    return out;
  };
  const auto train_seqs = frame_all(train_lines);
  const auto in_seqs = frame_all(held_in);
  const auto out_seqs = frame_all(held_out);

  PolicyNet prior = PolicyNet::init(NetDims{}, 8);
  RndState state = make_rnd_state(prior, 44);
  for (int step = 0; step < 200; ++step) rnd_train(state, train_seqs);

  const auto in_deltas = rnd_delta_batch(state, in_seqs);
  const auto out_deltas = rnd_delta_batch(state, out_seqs);
  double in_mean = 0.0, out_mean = 0.0;
  for (double d : in_deltas) in_mean += d;
  for (double d : out_deltas) out_mean += d;
  in_mean /= static_cast<double>(in_deltas.size());
  out_mean /= static_cast<double>(out_deltas.size());
  INFO("mean prediction error: held-in ", in_mean, " vs held-out ", out_mean);
  CHECK(out_mean > in_mean);
}
