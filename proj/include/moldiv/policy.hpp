#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "moldiv/chem.hpp"

namespace moldiv {

// Row-major weights so a row (one output unit's fan-in) is contiguous. Every
// forward-pass product is computed as independent row x column dot products,
// which makes per-sequence log-likelihoods bitwise identical whether a
// sequence is scored alone or inside any batch.
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NetDims {
  int vocab = 15;
  int emb = 32;
  int hidden = 64;
  int layers = 2;

  bool operator==(const NetDims&) const = default;
};

// One recurrent layer; gate rows stacked [input | forget | cell | output].
struct LstmLayer {
  RowMat wx;          // 4H x in
  RowMat wh;          // 4H x H
  Eigen::VectorXd b;  // 4H
};

struct PolicyNet {
  NetDims dims;
  std::uint64_t init_seed = 0;
  Eigen::MatrixXd embedding;  // E x vocab, one column per token
  std::vector<LstmLayer> layers;
  RowMat proj;                // vocab x H
  Eigen::VectorXd proj_b;     // vocab

  static PolicyNet init(const NetDims& dims, std::uint64_t seed);
  PolicyNet zeros_like() const;

  // Flat views over every parameter tensor, in a fixed order shared by the
  // optimizer, serialization, hashing and the finite-difference tests.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::uint64_t param_hash() const;
};

struct Trajectory {
  std::vector<int> tokens;  // starts with START; ends with STOP unless truncated
  double agent_loglik = 0.0;
  double prior_loglik = 0.0;
  bool truncated = false;
};

// B rollouts, at most T_max tokens each (START included). Token draws come
// from per-trajectory substreams of step_seed, so results do not depend on
// evaluation order.
std::vector<Trajectory> sample_batch(const PolicyNet& net, int B, int T_max, std::uint64_t step_seed);

// Sum of log pi(a_t | prefix) over body tokens only (START is conditioning,
// STOP is not scored). Framed input; truncated sequences score every sampled
// token.
double log_likelihood(const PolicyNet& net, std::span<const int> tokens);
std::vector<double> log_likelihood_batch(const PolicyNet& net, const std::vector<std::vector<int>>& seqs);

// (1/n) sum (prior_loglik + sigma * shaped - agent_loglik)^2 from the stored
// trajectory log-likelihoods.
double augmented_loss(const std::vector<Trajectory>& batch, std::span<const double> shaped, double sigma);

struct NonFiniteGradient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Adam {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  long long t = 0;
  std::vector<Eigen::VectorXd> m;
  std::vector<Eigen::VectorXd> v;

  void reset() {
    t = 0;
    m.clear();
    v.clear();
  }
};

// Gradient of (1/n) sum (target_i - loglik_i(net))^2, packed in a
// zeros_like() container. loss_out, when given, receives the loss.
PolicyNet loglik_regression_gradient(const PolicyNet& net, const std::vector<std::vector<int>>& seqs,
                                     std::span<const double> targets, double* loss_out = nullptr);

// One Adam update from a packed gradient. Throws NonFiniteGradient (before
// touching parameters or optimizer state) if any gradient entry is not finite.
void adam_step(PolicyNet& net, const PolicyNet& grad, const Adam& opt, AdamState& state);

// One Adam step on (1/n) sum (target_i - loglik_i(net))^2. Returns the loss
// before the step. Shared by the policy update (targets = prior + sigma*R)
// and the distillation predictor (targets = fixed net's log-likelihoods).
double loglik_regression_step(PolicyNet& net, const std::vector<std::vector<int>>& seqs,
                              std::span<const double> targets, const Adam& opt, AdamState& state);

// Policy update for one generated batch: regression onto the augmented
// log-likelihood. Returns the loss. Throws NonFiniteGradient.
double gradient_step(PolicyNet& agent, const std::vector<Trajectory>& batch,
                     std::span<const double> shaped, double sigma, const Adam& opt, AdamState& state);

// --------------------------------------------------------------------------
// Pretraining
// --------------------------------------------------------------------------

struct CorpusEmpty : std::runtime_error {
  CorpusEmpty() : std::runtime_error("corpus is empty") {}
};
struct CorpusInvalidLine : std::runtime_error {
  int line;
  explicit CorpusInvalidLine(int line_no, const std::string& body)
      : std::runtime_error("corpus line " + std::to_string(line_no) + " does not parse: " + body),
        line(line_no) {}
};

struct PretrainConfig {
  NetDims dims;
  int epochs = 3;
  int batch = 64;
  double lr = 1e-3;
};

// Teacher-forced cross-entropy (STOP prediction included) over the corpus.
PolicyNet pretrain(const std::vector<std::string>& corpus, const PretrainConfig& config,
                   std::uint64_t seed);

// Mean cross-entropy per scored token over a batch of lines (diagnostic).
double corpus_cross_entropy(const PolicyNet& net, const std::vector<std::string>& corpus);

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const PolicyNet& net, const std::string& path);
PolicyNet load_checkpoint(const std::string& path);  // throws CheckpointError

// --------------------------------------------------------------------------
// Adaptive sigma ("margin guard")
// --------------------------------------------------------------------------

struct SigmaParams {
  double sigma_init = 128.0;
  double margin = 50.0;    // m_sigma
  int window = 10;         // w_sigma, generative steps before the guard arms
  double d_min = 0.15;
};

struct SigmaState {
  double sigma = 128.0;
  long long steps_since_reset = 0;
  double residual_sum = 0.0;       // sum of (prior + sigma*R - agent)
  long long residual_count = 0;
  double extrinsic_sum = 0.0;      // includes invalid molecules at -1
  long long extrinsic_count = 0;

  double delta() const { return residual_count ? residual_sum / static_cast<double>(residual_count) : 0.0; }
  double mean_extrinsic() const {
    return extrinsic_count ? extrinsic_sum / static_cast<double>(extrinsic_count) : 0.0;
  }
};

// Fold one generated batch into the running means.
void sigma_observe(SigmaState& state, std::span<const double> residuals,
                   std::span<const double> extrinsic);

// After >= window observed steps: if delta > margin, raise sigma to
// max(sigma, delta / max(mean_extrinsic, d_min)) + margin and signal a reset
// (caller restores the agent to the prior). Residual history restarts; the
// extrinsic mean keeps accumulating. Returns true on reset.
bool sigma_update(SigmaState& state, const SigmaParams& params);

}  // namespace moldiv
