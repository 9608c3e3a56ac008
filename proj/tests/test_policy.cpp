#include "moldiv/policy.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "moldiv/corpus.hpp"
#include "moldiv/rng.hpp"

using namespace moldiv;

namespace {

std::vector<int> framed(std::string_view body) {
  Vocabulary vocab;
  auto ids = vocab.encode(body);
  REQUIRE(ids.has_value());
  std::vector<int> out{Vocabulary::kStart};
  out.insert(out.end(), ids->begin(), ids->end());
  out.push_back(Vocabulary::kStop);
  return out;
}

NetDims toy_dims() {
  NetDims d;
  d.vocab = 15;
  d.emb = 4;
  d.hidden = 8;
  d.layers = 1;
  return d;
}

}  // namespace

TEST_CASE("zero parameters give the uniform distribution") {
  NetDims dims;
  PolicyNet net = PolicyNet::init(dims, 1).zeros_like();
  // With all-zero parameters every conditional is uniform over the vocabulary,
  // so a body of length 3 scores 3 * log(1/15).
  const auto tokens = framed("CCO");
  const double got = log_likelihood(net, tokens);
  CHECK(got == doctest::Approx(3.0 * std::log(1.0 / 15.0)).epsilon(1e-12));

  // Empty body: only STOP follows START and STOP is not scored.
  const auto empty = framed("");
  CHECK(log_likelihood(net, empty) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("sampling records the same log-likelihood that scoring recomputes") {
  PolicyNet net = PolicyNet::init(NetDims{}, 7);
  const auto batch = sample_batch(net, 16, 40, 1234);
  REQUIRE(batch.size() == 16);
  for (const auto& traj : batch) {
    REQUIRE(traj.tokens.front() == Vocabulary::kStart);
    if (!traj.truncated) REQUIRE(traj.tokens.back() == Vocabulary::kStop);
    REQUIRE(traj.tokens.size() <= 40);
    const double rescored = log_likelihood(net, traj.tokens);
    CHECK(std::abs(rescored - traj.agent_loglik) < 1e-10);
  }

  // Batch scoring must agree with one-at-a-time scoring bit for bit.
  std::vector<std::vector<int>> seqs;
  for (const auto& traj : batch) seqs.push_back(traj.tokens);
  const auto together = log_likelihood_batch(net, seqs);
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    CHECK(together[b] == log_likelihood(net, seqs[b]));
  }
}

TEST_CASE("sampling is reproducible and trajectory streams are independent") {
  PolicyNet net = PolicyNet::init(NetDims{}, 7);
  const auto a = sample_batch(net, 8, 40, 99);
  const auto b = sample_batch(net, 8, 40, 99);
  for (int i = 0; i < 8; ++i) {
    CHECK(a[static_cast<std::size_t>(i)].tokens == b[static_cast<std::size_t>(i)].tokens);
    CHECK(a[static_cast<std::size_t>(i)].agent_loglik == b[static_cast<std::size_t>(i)].agent_loglik);
  }
  const auto c = sample_batch(net, 8, 40, 100);
  bool any_diff = false;
  for (int i = 0; i < 8; ++i) {
    if (a[static_cast<std::size_t>(i)].tokens != c[static_cast<std::size_t>(i)].tokens) any_diff = true;
  }
  CHECK(any_diff);

  // Trajectory i must not depend on the batch size around it.
  const auto wide = sample_batch(net, 8, 40, 99);
  const auto narrow = sample_batch(net, 3, 40, 99);
  for (int i = 0; i < 3; ++i) {
    CHECK(narrow[static_cast<std::size_t>(i)].tokens == wide[static_cast<std::size_t>(i)].tokens);
    CHECK(narrow[static_cast<std::size_t>(i)].agent_loglik == wide[static_cast<std::size_t>(i)].agent_loglik);
  }
}

TEST_CASE("augmented loss matches the closed form") {
  std::vector<Trajectory> batch(2);
  batch[0].prior_loglik = -10.0;
  batch[0].agent_loglik = -12.0;
  batch[1].prior_loglik = -20.0;
  batch[1].agent_loglik = -14.0;
  const std::vector<double> shaped{0.5, 1.0};
  // residuals: -10 + 4*0.5 + 12 = 4 ; -20 + 4*1 + 14 = -2
  CHECK(augmented_loss(batch, shaped, 4.0) == doctest::Approx((16.0 + 4.0) / 2.0).epsilon(1e-12));
  CHECK(augmented_loss(batch, std::vector<double>{0.0, 0.0}, 0.0) ==
        doctest::Approx((4.0 + 36.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches central finite differences on a toy net") {
  PolicyNet net = PolicyNet::init(toy_dims(), 3);
  const std::vector<std::vector<int>> seqs{framed("CCO"), framed("C1CCCCC1"), framed(""),
                                           framed("N(C)C=O")};
  const std::vector<double> targets{-2.0, -9.0, -0.5, -4.0};

  auto loss_at = [&](const PolicyNet& p) {
    const auto ll = log_likelihood_batch(p, seqs);
    double s = 0.0;
    for (std::size_t i = 0; i < ll.size(); ++i) {
      const double e = targets[i] - ll[i];
      s += e * e;
    }
    return s / static_cast<double>(ll.size());
  };

  double loss = 0.0;
  const PolicyNet grad = loglik_regression_gradient(net, seqs, targets, &loss);
  CHECK(loss == doctest::Approx(loss_at(net)).epsilon(1e-12));

  const auto p0 = net.tensors();
  const auto g = grad.tensors();
  const double eps_fd = 1e-5;
  int checked = 0;
  double worst_rel = 0.0;
  Rng pick(42);
  for (std::size_t ti = 0; ti < p0.size(); ++ti) {
    // Sample entries per tensor; full sweeps are too slow.
    const std::size_t n = p0[ti].size();
    const int reps = static_cast<int>(std::min<std::size_t>(n, 8));
    for (int rep = 0; rep < reps; ++rep) {
      const std::size_t k = pick.uniform_int(n);
      PolicyNet probe = net;
      auto pt = probe.tensors();
      pt[ti][k] = p0[ti][k] + eps_fd;
      const double up = loss_at(probe);
      pt[ti][k] = p0[ti][k] - eps_fd;
      const double down = loss_at(probe);
      const double fd = (up - down) / (2.0 * eps_fd);
      const double an = g[ti][k];
      if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;
      ++checked;
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
      worst_rel = std::max(worst_rel, rel);
    }
  }
  INFO("checked ", checked, " entries, worst relative error ", worst_rel);
  REQUIRE(checked > 30);
  CHECK(worst_rel < 1e-4);
}

TEST_CASE("regression step reduces the loss and zero residuals are a fixed point") {
  PolicyNet net = PolicyNet::init(toy_dims(), 11);
  const std::vector<std::vector<int>> seqs{framed("CCO"), framed("CC(C)C"), framed("OC=O")};
  const std::vector<double> targets{-1.0, -2.0, -1.5};

  Adam opt;
  opt.lr = 5e-3;
  AdamState st;
  const double first = loglik_regression_step(net, seqs, targets, opt, st);
  double last = first;
  for (int i = 0; i < 50; ++i) last = loglik_regression_step(net, seqs, targets, opt, st);
  CHECK(last < first);

  // Targets equal to the current log-likelihoods: zero gradient, parameters
  // unchanged (Adam with zero gradient moves nothing at t=1).
  PolicyNet fixed = PolicyNet::init(toy_dims(), 12);
  const auto ll = log_likelihood_batch(fixed, seqs);
  const std::uint64_t before = fixed.param_hash();
  AdamState st2;
  const double loss = loglik_regression_step(fixed, seqs, ll, opt, st2);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-18));
  CHECK(fixed.param_hash() == before);
}

TEST_CASE("gradient_step wraps the regression on prior + sigma * reward") {
  PolicyNet prior = PolicyNet::init(toy_dims(), 21);
  PolicyNet agent = prior;
  auto batch = sample_batch(agent, 6, 20, 5);
  const auto prior_ll = log_likelihood_batch(prior, [&] {
    std::vector<std::vector<int>> s;
    for (auto& t : batch) s.push_back(t.tokens);
    return s;
  }());
  for (std::size_t b = 0; b < batch.size(); ++b) batch[b].prior_loglik = prior_ll[b];
  const std::vector<double> shaped{0.2, 0.0, 1.0, -1.0, 0.5, 0.3};

  Adam opt;
  AdamState st;
  const double reported = gradient_step(agent, batch, shaped, 8.0, opt, st);
  CHECK(reported == doctest::Approx(augmented_loss(batch, shaped, 8.0)).epsilon(1e-12));
  CHECK(agent.param_hash() != prior.param_hash());
}

TEST_CASE("pretraining lowers corpus cross-entropy and validates input") {
  CorpusParams params;
  const auto corpus = generate_corpus(400, 2024, params);

  PretrainConfig cfg;
  cfg.dims = NetDims{};
  cfg.epochs = 2;
  cfg.batch = 64;
  cfg.lr = 1e-3;

  PolicyNet net = pretrain(corpus, cfg, 77);
  PolicyNet fresh = PolicyNet::init(cfg.dims, 77);
  const double trained = corpus_cross_entropy(net, corpus);
  const double untrained = corpus_cross_entropy(fresh, corpus);
  INFO("cross-entropy ", untrained, " -> ", trained);
  CHECK(trained < untrained);
  CHECK(trained < std::log(15.0));  // better than uniform guessing

  CHECK_THROWS_AS(pretrain({}, cfg, 1), CorpusEmpty);
  CHECK_THROWS_AS(pretrain({"CCO", "C1CC("}, cfg, 1), CorpusInvalidLine);
  try {
    pretrain({"CCO", "xyz"}, cfg, 1);
    FAIL("expected CorpusInvalidLine");
  } catch (const CorpusInvalidLine& e) {
    CHECK(e.line == 2);
  }
}

TEST_CASE("pretraining is deterministic in the seed") {
  CorpusParams params;
  const auto corpus = generate_corpus(150, 5, params);
  PretrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 32;
  PolicyNet a = pretrain(corpus, cfg, 42);
  PolicyNet b = pretrain(corpus, cfg, 42);
  CHECK(a.param_hash() == b.param_hash());
  PolicyNet c = pretrain(corpus, cfg, 43);
  CHECK(a.param_hash() != c.param_hash());
}

TEST_CASE("checkpoints round-trip and reject corruption") {
  const std::string path = (std::filesystem::temp_directory_path() / "moldiv_ckpt_test.bin").string();
  PolicyNet net = PolicyNet::init(NetDims{}, 9);
  save_checkpoint(net, path);
  PolicyNet back = load_checkpoint(path);
  CHECK(back.dims == net.dims);
  CHECK(back.init_seed == net.init_seed);
  CHECK(back.param_hash() == net.param_hash());
  // The loaded net must behave identically.
  const auto tokens = framed("C1CCCCC1");
  CHECK(log_likelihood(back, tokens) == log_likelihood(net, tokens));

  // Flip one byte in the middle: checksum must catch it.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    char byte = 0;
    f.seekg(200);
    f.read(&byte, 1);
    byte = static_cast<char>(byte ^ 0x40);
    f.seekp(200);
    f.write(&byte, 1);
  }
  CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint(path + ".does_not_exist"), CheckpointError);
  std::filesystem::remove(path);
}

TEST_CASE("sigma guard reproduces the reference update") {
  // delta = 64, mean extrinsic = 0.5, sigma = 128 -> max(128, 64/0.5) + 50 = 178.
  SigmaState st;
  st.sigma = 128.0;
  st.steps_since_reset = 10;
  st.residual_sum = 640.0;
  st.residual_count = 10;
  st.extrinsic_sum = 5.0;
  st.extrinsic_count = 10;
  SigmaParams params;
  CHECK(sigma_update(st, params));
  CHECK(st.sigma == 178.0);
  CHECK(st.residual_count == 0);
  CHECK(st.steps_since_reset == 0);
  // Extrinsic history survives the reset.
  CHECK(st.extrinsic_count == 10);
}

TEST_CASE("sigma guard arms only after the window and never lowers sigma") {
  SigmaParams params;
  SigmaState st;
  st.sigma = params.sigma_init;

  // Nine steps of huge residuals: still inside the window, no update.
  for (int i = 0; i < 9; ++i) {
    const std::vector<double> r{500.0};
    const std::vector<double> e{0.9};
    sigma_observe(st, r, e);
    CHECK_FALSE(sigma_update(st, params));
  }
  CHECK(st.sigma == params.sigma_init);

  // Tenth step arms the guard; delta 500 > margin 50 fires it.
  const std::vector<double> r{500.0};
  const std::vector<double> e{0.9};
  sigma_observe(st, r, e);
  CHECK(sigma_update(st, params));
  const double raised = st.sigma;
  CHECK(raised > params.sigma_init);
  CHECK(raised == doctest::Approx(500.0 / 0.9 + 50.0).epsilon(1e-12));

  // Small residuals afterwards: guard stays quiet, sigma keeps its value.
  for (int i = 0; i < 15; ++i) {
    const std::vector<double> small{1.0};
    sigma_observe(st, small, e);
    CHECK_FALSE(sigma_update(st, params));
  }
  CHECK(st.sigma == raised);

  // Low extrinsic mean is floored at d_min.
  SigmaState floor_state;
  floor_state.sigma = 10.0;
  floor_state.steps_since_reset = 10;
  floor_state.residual_sum = 600.0;
  floor_state.residual_count = 10;
  floor_state.extrinsic_sum = -10.0;  // mean -1: every sample invalid
  floor_state.extrinsic_count = 10;
  CHECK(sigma_update(floor_state, params));
  CHECK(floor_state.sigma == doctest::Approx(60.0 / 0.15 + 50.0).epsilon(1e-12));
}

TEST_CASE("non-finite gradients raise instead of corrupting the net") {
  PolicyNet net = PolicyNet::init(toy_dims(), 30);
  const std::vector<std::vector<int>> seqs{framed("CCO")};
  const std::vector<double> targets{std::numeric_limits<double>::infinity()};
  Adam opt;
  AdamState st;
  const std::uint64_t before = net.param_hash();
  CHECK_THROWS_AS(loglik_regression_step(net, seqs, targets, opt, st), NonFiniteGradient);
  CHECK(net.param_hash() == before);
}
