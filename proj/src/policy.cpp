#include "moldiv/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "moldiv/rng.hpp"

namespace moldiv {

using ColMat = Eigen::MatrixXd;

namespace {

// C = A * B as independent row-by-column dots: C(i,j) never depends on which
// other columns are present, so a sequence scores identically alone or in a
// batch.
void matmul_cols(const RowMat& A, const ColMat& B, ColMat& C) {
  const Eigen::Index m = A.rows();
  const Eigen::Index k = A.cols();
  const Eigen::Index n = B.cols();
  C.resize(m, n);
  (void)k;
  for (Eigen::Index j = 0; j < n; ++j) {
    C.col(j).noalias() = A * B.col(j);
  }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

PolicyNet PolicyNet::init(const NetDims& dims, std::uint64_t seed) {
  PolicyNet net;
  net.dims = dims;
  net.init_seed = seed;
  const int H = dims.hidden;
  int tensor_idx = 0;
  auto fill_normal = [&](double* data, Eigen::Index size, double scale) {
    Rng rng = Rng::child(seed, 0x96a5ull, static_cast<std::uint64_t>(tensor_idx++));
    for (Eigen::Index i = 0; i < size; ++i) data[i] = rng.normal() * scale;
  };

  net.embedding.resize(dims.emb, dims.vocab);
  fill_normal(net.embedding.data(), net.embedding.size(), 0.1);

  net.layers.resize(static_cast<std::size_t>(dims.layers));
  for (int l = 0; l < dims.layers; ++l) {
    const int in = l == 0 ? dims.emb : H;
    LstmLayer& layer = net.layers[static_cast<std::size_t>(l)];
    layer.wx.resize(4 * H, in);
    fill_normal(layer.wx.data(), layer.wx.size(), 1.0 / std::sqrt(static_cast<double>(in)));
    layer.wh.resize(4 * H, H);
    fill_normal(layer.wh.data(), layer.wh.size(), 1.0 / std::sqrt(static_cast<double>(H)));
    layer.b = Eigen::VectorXd::Zero(4 * H);
    layer.b.segment(H, H).setConstant(1.0);  // forget-gate bias
    ++tensor_idx;
  }

  net.proj.resize(dims.vocab, H);
  fill_normal(net.proj.data(), net.proj.size(), 1.0 / std::sqrt(static_cast<double>(H)));
  net.proj_b = Eigen::VectorXd::Zero(dims.vocab);
  return net;
}

PolicyNet PolicyNet::zeros_like() const {
  PolicyNet net;
  net.dims = dims;
  net.init_seed = init_seed;
  net.embedding = Eigen::MatrixXd::Zero(embedding.rows(), embedding.cols());
  net.layers.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    net.layers[l].wx = RowMat::Zero(layers[l].wx.rows(), layers[l].wx.cols());
    net.layers[l].wh = RowMat::Zero(layers[l].wh.rows(), layers[l].wh.cols());
    net.layers[l].b = Eigen::VectorXd::Zero(layers[l].b.size());
  }
  net.proj = RowMat::Zero(proj.rows(), proj.cols());
  net.proj_b = Eigen::VectorXd::Zero(proj_b.size());
  return net;
}

std::vector<std::span<double>> PolicyNet::tensors() {
  std::vector<std::span<double>> out;
  out.emplace_back(embedding.data(), static_cast<std::size_t>(embedding.size()));
  for (LstmLayer& layer : layers) {
    out.emplace_back(layer.wx.data(), static_cast<std::size_t>(layer.wx.size()));
    out.emplace_back(layer.wh.data(), static_cast<std::size_t>(layer.wh.size()));
    out.emplace_back(layer.b.data(), static_cast<std::size_t>(layer.b.size()));
  }
  out.emplace_back(proj.data(), static_cast<std::size_t>(proj.size()));
  out.emplace_back(proj_b.data(), static_cast<std::size_t>(proj_b.size()));
  return out;
}

std::vector<std::span<const double>> PolicyNet::tensors() const {
  std::vector<std::span<const double>> out;
  out.emplace_back(embedding.data(), static_cast<std::size_t>(embedding.size()));
  for (const LstmLayer& layer : layers) {
    out.emplace_back(layer.wx.data(), static_cast<std::size_t>(layer.wx.size()));
    out.emplace_back(layer.wh.data(), static_cast<std::size_t>(layer.wh.size()));
    out.emplace_back(layer.b.data(), static_cast<std::size_t>(layer.b.size()));
  }
  out.emplace_back(proj.data(), static_cast<std::size_t>(proj.size()));
  out.emplace_back(proj_b.data(), static_cast<std::size_t>(proj_b.size()));
  return out;
}

std::uint64_t PolicyNet::param_hash() const {
  std::uint64_t h = 0x5eedULL;
  for (const auto& t : tensors()) {
    for (double d : t) h = mix64(h, std::bit_cast<std::uint64_t>(d));
  }
  return h;
}

// --------------------------------------------------------------------------
// Forward / backward
// --------------------------------------------------------------------------

namespace {

struct LayerCache {
  ColMat i, f, g, o, c, tc, h_prev, c_prev;
};

struct StepCache {
  std::vector<int> inputs;           // token per column
  std::vector<LayerCache> layers;
  ColMat probs;                      // vocab x B
  std::vector<int> targets;          // -1 when the column is inactive
};

struct Caches {
  std::vector<StepCache> steps;
};

// Targets scored for one framed sequence.
std::vector<int> scored_targets(std::span<const int> tokens, bool include_stop) {
  std::vector<int> targets;
  if (tokens.size() < 2) return targets;
  std::size_t end = tokens.size();
  if (!include_stop && tokens[end - 1] == Vocabulary::kStop) --end;
  for (std::size_t t = 1; t < end; ++t) targets.push_back(tokens[t]);
  return targets;
}

// Teacher-forced scoring of a batch of framed sequences. Column b is active
// while t < |targets_b|; inactive columns still run (their values are ignored
// and receive zero gradient).
std::vector<double> forward_scored(const PolicyNet& net, const std::vector<std::vector<int>>& seqs,
                                   bool include_stop, Caches* caches) {
  const int B = static_cast<int>(seqs.size());
  const int H = net.dims.hidden;
  const int V = net.dims.vocab;
  const int L = net.dims.layers;

  std::vector<std::vector<int>> targets(static_cast<std::size_t>(B));
  int T = 0;
  for (int b = 0; b < B; ++b) {
    targets[static_cast<std::size_t>(b)] = scored_targets(seqs[static_cast<std::size_t>(b)], include_stop);
    T = std::max(T, static_cast<int>(targets[static_cast<std::size_t>(b)].size()));
  }
  std::vector<double> logliks(static_cast<std::size_t>(B), 0.0);
  if (T == 0) return logliks;

  std::vector<ColMat> h(static_cast<std::size_t>(L), ColMat::Zero(H, B));
  std::vector<ColMat> c(static_cast<std::size_t>(L), ColMat::Zero(H, B));
  ColMat X(net.dims.emb, B);
  ColMat Z;
  ColMat zx, zh;
  ColMat logits(V, B);

  if (caches) caches->steps.resize(static_cast<std::size_t>(T));

  for (int t = 0; t < T; ++t) {
    StepCache* sc = caches ? &caches->steps[static_cast<std::size_t>(t)] : nullptr;
    if (sc) {
      sc->inputs.assign(static_cast<std::size_t>(B), Vocabulary::kStop);
      sc->targets.assign(static_cast<std::size_t>(B), -1);
      sc->layers.resize(static_cast<std::size_t>(L));
    }
    for (int b = 0; b < B; ++b) {
      const auto& tg = targets[static_cast<std::size_t>(b)];
      const int input = t < static_cast<int>(tg.size()) ? seqs[static_cast<std::size_t>(b)][static_cast<std::size_t>(t)]
                                                        : Vocabulary::kStop;
      X.col(b) = net.embedding.col(input);
      if (sc) {
        sc->inputs[static_cast<std::size_t>(b)] = input;
        sc->targets[static_cast<std::size_t>(b)] = t < static_cast<int>(tg.size()) ? tg[static_cast<std::size_t>(t)] : -1;
      }
    }

    const ColMat* layer_in = &X;
    ColMat h_out;
    for (int l = 0; l < L; ++l) {
      const LstmLayer& layer = net.layers[static_cast<std::size_t>(l)];
      matmul_cols(layer.wx, *layer_in, zx);
      matmul_cols(layer.wh, h[static_cast<std::size_t>(l)], zh);
      Z = zx + zh;
      Z.colwise() += layer.b;

      LayerCache tmp;
      LayerCache& lc = sc ? sc->layers[static_cast<std::size_t>(l)] : tmp;
      lc.h_prev = h[static_cast<std::size_t>(l)];
      lc.c_prev = c[static_cast<std::size_t>(l)];
      lc.i = Z.topRows(H).array().unaryExpr([](double x) { return sigmoid(x); });
      lc.f = Z.middleRows(H, H).array().unaryExpr([](double x) { return sigmoid(x); });
      lc.g = Z.middleRows(2 * H, H).array().tanh();
      lc.o = Z.middleRows(3 * H, H).array().unaryExpr([](double x) { return sigmoid(x); });
      lc.c = lc.f.cwiseProduct(lc.c_prev) + lc.i.cwiseProduct(lc.g);
      lc.tc = lc.c.array().tanh();
      h_out = lc.o.cwiseProduct(lc.tc);

      h[static_cast<std::size_t>(l)] = h_out;
      c[static_cast<std::size_t>(l)] = lc.c;
      layer_in = &h[static_cast<std::size_t>(l)];
    }

    matmul_cols(net.proj, h[static_cast<std::size_t>(L - 1)], logits);
    logits.colwise() += net.proj_b;
    if (sc) sc->probs.resize(V, B);
    for (int b = 0; b < B; ++b) {
      const auto& tg = targets[static_cast<std::size_t>(b)];
      const bool active = t < static_cast<int>(tg.size());
      if (!active && !sc) continue;
      const double mx = logits.col(b).maxCoeff();
      double sum = 0.0;
      for (int k = 0; k < V; ++k) sum += std::exp(logits(k, b) - mx);
      if (active) {
        const int y = tg[static_cast<std::size_t>(t)];
        logliks[static_cast<std::size_t>(b)] += logits(y, b) - mx - std::log(sum);
      }
      if (sc) {
        for (int k = 0; k < V; ++k) sc->probs(k, b) = std::exp(logits(k, b) - mx) / sum;
      }
    }
  }
  return logliks;
}

// BPTT for d/dparams of sum_b gscale_b * loglik_b, accumulated into grad.
void backward_scored(const PolicyNet& net, const Caches& caches, std::span<const double> gscale,
                     PolicyNet& grad) {
  const int B = static_cast<int>(gscale.size());
  const int H = net.dims.hidden;
  const int V = net.dims.vocab;
  const int L = net.dims.layers;
  const int T = static_cast<int>(caches.steps.size());

  std::vector<ColMat> dh(static_cast<std::size_t>(L), ColMat::Zero(H, B));
  std::vector<ColMat> dc(static_cast<std::size_t>(L), ColMat::Zero(H, B));
  ColMat dlogits(V, B);

  for (int t = T - 1; t >= 0; --t) {
    const StepCache& sc = caches.steps[static_cast<std::size_t>(t)];
    dlogits.setZero();
    for (int b = 0; b < B; ++b) {
      const int y = sc.targets[static_cast<std::size_t>(b)];
      if (y < 0 || gscale[static_cast<std::size_t>(b)] == 0.0) continue;
      const double s = gscale[static_cast<std::size_t>(b)];
      for (int k = 0; k < V; ++k) {
        dlogits(k, b) = s * ((k == y ? 1.0 : 0.0) - sc.probs(k, b));
      }
    }

    const LayerCache& top = sc.layers[static_cast<std::size_t>(L - 1)];
    const ColMat h_top = top.o.cwiseProduct(top.tc);
    grad.proj.noalias() += dlogits * h_top.transpose();
    grad.proj_b.noalias() += dlogits.rowwise().sum();
    dh[static_cast<std::size_t>(L - 1)].noalias() += net.proj.transpose() * dlogits;

    for (int l = L - 1; l >= 0; --l) {
      const LayerCache& lc = sc.layers[static_cast<std::size_t>(l)];
      const ColMat& dhl = dh[static_cast<std::size_t>(l)];

      const ColMat d_o = dhl.cwiseProduct(lc.tc);
      ColMat d_c = dc[static_cast<std::size_t>(l)] +
                   dhl.cwiseProduct(lc.o).cwiseProduct((1.0 - lc.tc.array().square()).matrix());
      const ColMat d_f = d_c.cwiseProduct(lc.c_prev);
      const ColMat d_i = d_c.cwiseProduct(lc.g);
      const ColMat d_g = d_c.cwiseProduct(lc.i);

      ColMat dz(4 * H, B);
      dz.topRows(H) = d_i.cwiseProduct(lc.i).cwiseProduct((1.0 - lc.i.array()).matrix());
      dz.middleRows(H, H) = d_f.cwiseProduct(lc.f).cwiseProduct((1.0 - lc.f.array()).matrix());
      dz.middleRows(2 * H, H) = d_g.cwiseProduct((1.0 - lc.g.array().square()).matrix());
      dz.middleRows(3 * H, H) = d_o.cwiseProduct(lc.o).cwiseProduct((1.0 - lc.o.array()).matrix());

      LstmLayer& glayer = grad.layers[static_cast<std::size_t>(l)];
      const LstmLayer& layer = net.layers[static_cast<std::size_t>(l)];

      ColMat x_in;
      if (l == 0) {
        x_in.resize(net.dims.emb, B);
        for (int b = 0; b < B; ++b) x_in.col(b) = net.embedding.col(sc.inputs[static_cast<std::size_t>(b)]);
      } else {
        const LayerCache& below = sc.layers[static_cast<std::size_t>(l - 1)];
        x_in = below.o.cwiseProduct(below.tc);
      }

      glayer.wx.noalias() += dz * x_in.transpose();
      glayer.wh.noalias() += dz * lc.h_prev.transpose();
      glayer.b.noalias() += dz.rowwise().sum();

      const ColMat dx = layer.wx.transpose() * dz;
      dh[static_cast<std::size_t>(l)] = layer.wh.transpose() * dz;  // becomes dh_prev for t-1
      dc[static_cast<std::size_t>(l)] = d_c.cwiseProduct(lc.f);

      if (l == 0) {
        for (int b = 0; b < B; ++b) {
          grad.embedding.col(sc.inputs[static_cast<std::size_t>(b)]) += dx.col(b);
        }
      } else {
        dh[static_cast<std::size_t>(l - 1)] += dx;
      }
    }
  }
}

}  // namespace

void adam_step(PolicyNet& net, const PolicyNet& grad, const Adam& opt, AdamState& state) {
  auto params = net.tensors();
  auto grads = grad.tensors();
  for (const auto& g : grads) {
    for (double x : g) {
      if (!std::isfinite(x)) throw NonFiniteGradient("non-finite gradient");
    }
  }
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params[i].size()));
      state.v[i] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params[i].size()));
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data();
    const double* g = grads[i].data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    const std::size_t n = params[i].size();
    for (std::size_t k = 0; k < n; ++k) {
      m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g[k];
      v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
}

// --------------------------------------------------------------------------
// Public operations
// --------------------------------------------------------------------------

std::vector<Trajectory> sample_batch(const PolicyNet& net, int B, int T_max, std::uint64_t step_seed) {
  const int H = net.dims.hidden;
  const int V = net.dims.vocab;
  const int L = net.dims.layers;

  std::vector<Trajectory> out(static_cast<std::size_t>(B));
  std::vector<Rng> streams;
  streams.reserve(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    streams.push_back(Rng::child(step_seed, 0x5a3cull, static_cast<std::uint64_t>(b)));
    out[static_cast<std::size_t>(b)].tokens.push_back(Vocabulary::kStart);
  }

  std::vector<ColMat> h(static_cast<std::size_t>(L), ColMat::Zero(H, B));
  std::vector<ColMat> c(static_cast<std::size_t>(L), ColMat::Zero(H, B));
  std::vector<char> done(static_cast<std::size_t>(B), 0);
  ColMat X(net.dims.emb, B);
  ColMat zx, zh, Z, logits;
  std::vector<double> probs(static_cast<std::size_t>(V));

  // Sequence length so far is t+1; stop extending at T_max total tokens.
  for (int t = 0; t + 1 < T_max; ++t) {
    bool all_done = true;
    for (int b = 0; b < B; ++b) {
      if (!done[static_cast<std::size_t>(b)]) all_done = false;
      X.col(b) = net.embedding.col(out[static_cast<std::size_t>(b)].tokens.back());
    }
    if (all_done) break;

    const ColMat* layer_in = &X;
    for (int l = 0; l < L; ++l) {
      const LstmLayer& layer = net.layers[static_cast<std::size_t>(l)];
      matmul_cols(layer.wx, *layer_in, zx);
      matmul_cols(layer.wh, h[static_cast<std::size_t>(l)], zh);
      Z = zx + zh;
      Z.colwise() += layer.b;
      const ColMat i = Z.topRows(H).array().unaryExpr([](double x) { return sigmoid(x); });
      const ColMat f = Z.middleRows(H, H).array().unaryExpr([](double x) { return sigmoid(x); });
      const ColMat g = Z.middleRows(2 * H, H).array().tanh();
      const ColMat o = Z.middleRows(3 * H, H).array().unaryExpr([](double x) { return sigmoid(x); });
      c[static_cast<std::size_t>(l)] = f.cwiseProduct(c[static_cast<std::size_t>(l)]) + i.cwiseProduct(g);
      h[static_cast<std::size_t>(l)] = o.cwiseProduct(c[static_cast<std::size_t>(l)].array().tanh().matrix());
      layer_in = &h[static_cast<std::size_t>(l)];
    }
    matmul_cols(net.proj, h[static_cast<std::size_t>(L - 1)], logits);
    logits.colwise() += net.proj_b;

    for (int b = 0; b < B; ++b) {
      if (done[static_cast<std::size_t>(b)]) continue;
      const double mx = logits.col(b).maxCoeff();
      double sum = 0.0;
      for (int k = 0; k < V; ++k) sum += std::exp(logits(k, b) - mx);
      for (int k = 0; k < V; ++k) probs[static_cast<std::size_t>(k)] = std::exp(logits(k, b) - mx) / sum;
      const int tok = streams[static_cast<std::size_t>(b)].categorical(probs);
      out[static_cast<std::size_t>(b)].tokens.push_back(tok);
      if (tok == Vocabulary::kStop) {
        done[static_cast<std::size_t>(b)] = 1;
      } else {
        out[static_cast<std::size_t>(b)].agent_loglik += std::log(probs[static_cast<std::size_t>(tok)]);
      }
    }
  }
  for (int b = 0; b < B; ++b) {
    out[static_cast<std::size_t>(b)].truncated = !done[static_cast<std::size_t>(b)];
  }
  return out;
}

double log_likelihood(const PolicyNet& net, std::span<const int> tokens) {
  std::vector<std::vector<int>> seqs{std::vector<int>(tokens.begin(), tokens.end())};
  return forward_scored(net, seqs, /*include_stop=*/false, nullptr)[0];
}

std::vector<double> log_likelihood_batch(const PolicyNet& net, const std::vector<std::vector<int>>& seqs) {
  return forward_scored(net, seqs, /*include_stop=*/false, nullptr);
}

double augmented_loss(const std::vector<Trajectory>& batch, std::span<const double> shaped, double sigma) {
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double e = batch[b].prior_loglik + sigma * shaped[b] - batch[b].agent_loglik;
    total += e * e;
  }
  return batch.empty() ? 0.0 : total / static_cast<double>(batch.size());
}

PolicyNet loglik_regression_gradient(const PolicyNet& net, const std::vector<std::vector<int>>& seqs,
                                     std::span<const double> targets, double* loss_out) {
  const int B = static_cast<int>(seqs.size());
  Caches caches;
  const std::vector<double> logliks = forward_scored(net, seqs, /*include_stop=*/false, &caches);
  double loss = 0.0;
  std::vector<double> gscale(static_cast<std::size_t>(B));
  for (int b = 0; b < B; ++b) {
    const double e = targets[static_cast<std::size_t>(b)] - logliks[static_cast<std::size_t>(b)];
    loss += e * e;
    // d/dloglik of (1/B) sum (target - loglik)^2
    gscale[static_cast<std::size_t>(b)] = -2.0 * e / static_cast<double>(B);
  }
  loss /= static_cast<double>(B);
  if (loss_out) *loss_out = loss;
  PolicyNet grad = net.zeros_like();
  backward_scored(net, caches, gscale, grad);
  return grad;
}

double loglik_regression_step(PolicyNet& net, const std::vector<std::vector<int>>& seqs,
                              std::span<const double> targets, const Adam& opt, AdamState& state) {
  double loss = 0.0;
  const PolicyNet grad = loglik_regression_gradient(net, seqs, targets, &loss);
  adam_step(net, grad, opt, state);
  return loss;
}

double gradient_step(PolicyNet& agent, const std::vector<Trajectory>& batch,
                     std::span<const double> shaped, double sigma, const Adam& opt, AdamState& state) {
  std::vector<std::vector<int>> seqs;
  std::vector<double> targets;
  seqs.reserve(batch.size());
  targets.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    seqs.push_back(batch[b].tokens);
    targets.push_back(batch[b].prior_loglik + sigma * shaped[b]);
  }
  return loglik_regression_step(agent, seqs, targets, opt, state);
}

// --------------------------------------------------------------------------
// Pretraining
// --------------------------------------------------------------------------

PolicyNet pretrain(const std::vector<std::string>& corpus, const PretrainConfig& config,
                   std::uint64_t seed) {
  if (corpus.empty()) throw CorpusEmpty();
  Vocabulary vocab(config.dims.vocab - Vocabulary::kCoreSize);
  std::vector<std::vector<int>> seqs;
  seqs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto ids = vocab.encode(corpus[i]);
    if (!ids.has_value() || !parse(corpus[i]).ok()) {
      throw CorpusInvalidLine(static_cast<int>(i) + 1, corpus[i]);
    }
    std::vector<int> framed;
    framed.reserve(ids->size() + 2);
    framed.push_back(Vocabulary::kStart);
    framed.insert(framed.end(), ids->begin(), ids->end());
    framed.push_back(Vocabulary::kStop);
    seqs.push_back(std::move(framed));
  }

  PolicyNet net = PolicyNet::init(config.dims, seed);
  Adam opt;
  opt.lr = config.lr;
  AdamState state;

  const int n = static_cast<int>(seqs.size());
  const long long batches_per_epoch = (n + config.batch - 1) / config.batch;
  const long long total_updates = batches_per_epoch * config.epochs;
  long long update = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng = Rng::child(seed, 0xe90cull, static_cast<std::uint64_t>(epoch));
    const auto order = shuffle_rng.permutation(static_cast<std::size_t>(n));
    for (int start = 0; start < n; start += config.batch) {
      const int bsz = std::min(config.batch, n - start);
      std::vector<std::vector<int>> batch;
      batch.reserve(static_cast<std::size_t>(bsz));
      long long scored = 0;
      for (int k = 0; k < bsz; ++k) {
        batch.push_back(seqs[order[static_cast<std::size_t>(start + k)]]);
        scored += static_cast<long long>(batch.back().size()) - 1;  // body + stop
      }
      Caches caches;
      forward_scored(net, batch, /*include_stop=*/true, &caches);
      std::vector<double> gscale(static_cast<std::size_t>(bsz),
                                 -1.0 / static_cast<double>(scored));
      PolicyNet grad = net.zeros_like();
      backward_scored(net, caches, gscale, grad);
      // Cosine decay from lr to lr/10 so late epochs refine instead of bounce.
      const double progress =
          total_updates > 1 ? static_cast<double>(update) / static_cast<double>(total_updates - 1) : 0.0;
      Adam step_opt = opt;
      step_opt.lr = 0.1 * opt.lr + 0.45 * opt.lr * (1.0 + std::cos(progress * 3.14159265358979323846));
      adam_step(net, grad, step_opt, state);
      ++update;
    }
  }
  return net;
}

double corpus_cross_entropy(const PolicyNet& net, const std::vector<std::string>& corpus) {
  Vocabulary vocab(net.dims.vocab - Vocabulary::kCoreSize);
  std::vector<std::vector<int>> seqs;
  long long scored = 0;
  double total = 0.0;
  constexpr std::size_t kChunk = 1024;  // bounds peak activation memory
  for (std::size_t start = 0; start < corpus.size(); start += kChunk) {
    seqs.clear();
    for (std::size_t i = start; i < std::min(corpus.size(), start + kChunk); ++i) {
      const auto ids = vocab.encode(corpus[i]);
      if (!ids.has_value()) throw CorpusInvalidLine(static_cast<int>(i) + 1, corpus[i]);
      std::vector<int> framed{Vocabulary::kStart};
      framed.insert(framed.end(), ids->begin(), ids->end());
      framed.push_back(Vocabulary::kStop);
      scored += static_cast<long long>(framed.size()) - 1;
      seqs.push_back(std::move(framed));
    }
    for (double ll : forward_scored(net, seqs, /*include_stop=*/true, nullptr)) total += ll;
  }
  return scored ? -total / static_cast<double>(scored) : 0.0;
}

// --------------------------------------------------------------------------
// Checkpoints
// --------------------------------------------------------------------------

namespace {
constexpr std::uint32_t kCheckpointMagic = 0x4d4c4456;  // "MLDV"
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void save_checkpoint(const PolicyNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  auto put_u32 = [&](std::uint32_t x) { out.write(reinterpret_cast<const char*>(&x), sizeof(x)); };
  auto put_u64 = [&](std::uint64_t x) { out.write(reinterpret_cast<const char*>(&x), sizeof(x)); };
  put_u32(kCheckpointMagic);
  put_u32(kCheckpointVersion);
  put_u32(static_cast<std::uint32_t>(net.dims.vocab));
  put_u32(static_cast<std::uint32_t>(net.dims.emb));
  put_u32(static_cast<std::uint32_t>(net.dims.hidden));
  put_u32(static_cast<std::uint32_t>(net.dims.layers));
  put_u64(net.init_seed);
  for (const auto& t : net.tensors()) {
    put_u64(t.size());
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  put_u64(net.param_hash());
  if (!out) throw CheckpointError("short write: " + path);
}

PolicyNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint: " + path);
  auto get_u32 = [&] {
    std::uint32_t x = 0;
    in.read(reinterpret_cast<char*>(&x), sizeof(x));
    return x;
  };
  auto get_u64 = [&] {
    std::uint64_t x = 0;
    in.read(reinterpret_cast<char*>(&x), sizeof(x));
    return x;
  };
  if (get_u32() != kCheckpointMagic) throw CheckpointError("bad magic: " + path);
  if (get_u32() != kCheckpointVersion) throw CheckpointError("unsupported version: " + path);
  NetDims dims;
  dims.vocab = static_cast<int>(get_u32());
  dims.emb = static_cast<int>(get_u32());
  dims.hidden = static_cast<int>(get_u32());
  dims.layers = static_cast<int>(get_u32());
  if (dims.vocab < Vocabulary::kCoreSize || dims.emb <= 0 || dims.hidden <= 0 || dims.layers <= 0 ||
      dims.vocab > 4096 || dims.emb > 4096 || dims.hidden > 4096 || dims.layers > 64) {
    throw CheckpointError("implausible dimensions: " + path);
  }
  PolicyNet net = PolicyNet::init(dims, 0).zeros_like();
  net.dims = dims;
  net.init_seed = get_u64();
  for (auto& t : net.tensors()) {
    const std::uint64_t size = get_u64();
    if (size != t.size()) throw CheckpointError("tensor size mismatch: " + path);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(size * sizeof(double)));
  }
  const std::uint64_t expect = get_u64();
  if (!in) throw CheckpointError("truncated checkpoint: " + path);
  if (net.param_hash() != expect) throw CheckpointError("checksum mismatch: " + path);
  return net;
}

// --------------------------------------------------------------------------
// Margin guard
// --------------------------------------------------------------------------

void sigma_observe(SigmaState& state, std::span<const double> residuals,
                   std::span<const double> extrinsic) {
  for (double r : residuals) state.residual_sum += r;
  state.residual_count += static_cast<long long>(residuals.size());
  for (double r : extrinsic) state.extrinsic_sum += r;
  state.extrinsic_count += static_cast<long long>(extrinsic.size());
  ++state.steps_since_reset;
}

bool sigma_update(SigmaState& state, const SigmaParams& params) {
  if (state.steps_since_reset < params.window) return false;
  const double delta = state.delta();
  if (delta <= params.margin) return false;
  const double d = std::max(state.mean_extrinsic(), params.d_min);
  state.sigma = std::max(state.sigma, delta / d) + params.margin;
  state.residual_sum = 0.0;
  state.residual_count = 0;
  state.steps_since_reset = 0;
  return true;
}

}  // namespace moldiv
