#pragma once

// Levenberg-Marquardt training of small multi-hidden-layer networks.
// Residuals live in normalized space, flattened sample-major over the output
// dimension; parameters are flattened layer by layer, weights row-major then
// bias. jacobian() materializes the dense residual x parameter matrix (tests,
// small problems). The training loop instead accumulates J^T J and J^T r
// per sample from the layer structure: the output layer contributes
// block-sparse rows (each residual touches only its own output row), and the
// shared hidden-stack block factors through dP/dtheta of the last hidden
// state, so the full Jacobian (samples x outputs x parameters, gigabytes at
// production scale) is never stored.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ramanml/nn.hpp"
#include "ramanml/parallel.hpp"
#include "ramanml/rng.hpp"

namespace ramanml {

struct BpConfig {
  std::vector<int> hidden_layers = {10, 10};
  Activation activation = Activation::Tanh;  // tanh or logistic
  int ensemble_size = 10;
  double mu_init = 1e-3;
  double mu_up = 10.0;
  double mu_down = 10.0;
  double mu_max = 1e10;
  int max_epochs = 1000;
  double val_fraction = 0.15;
  int patience = 6;
  double subsample_fraction = 1.0;  // fraction of samples entering each epoch's residuals
  std::uint64_t seed = 1;

  void validate() const {
    if (hidden_layers.empty()) throw std::invalid_argument("BpConfig: need >= 1 hidden layer");
    for (int n : hidden_layers)
      if (n < 1) throw std::invalid_argument("BpConfig: hidden sizes must be >= 1");
    if (activation != Activation::Tanh && activation != Activation::Logistic)
      throw std::invalid_argument("BpConfig: activation must be tanh or logistic");
    if (ensemble_size < 1) throw std::invalid_argument("BpConfig: ensemble_size must be >= 1");
    if (mu_init <= 0.0 || mu_max <= 0.0) throw std::invalid_argument("BpConfig: mu must be > 0");
    if (mu_up <= 1.0 || mu_down <= 1.0)
      throw std::invalid_argument("BpConfig: mu_up and mu_down must be > 1");
    if (max_epochs < 1) throw std::invalid_argument("BpConfig: max_epochs must be >= 1");
    if (val_fraction <= 0.0 || val_fraction >= 1.0)
      throw std::invalid_argument("BpConfig: val_fraction must be in (0, 1)");
    if (patience < 1) throw std::invalid_argument("BpConfig: patience must be >= 1");
    if (subsample_fraction <= 0.0 || subsample_fraction > 1.0)
      throw std::invalid_argument("BpConfig: subsample_fraction must be in (0, 1]");
  }
};

// --------------------------------------------------------------------------
// Parameter vector layout
// --------------------------------------------------------------------------

inline Eigen::Index parameter_count(const NeuralModel& model) {
  Eigen::Index n = 0;
  for (const Layer& l : model.layers) n += l.weights.size() + l.bias.size();
  return n;
}

inline Eigen::VectorXd get_parameters(const NeuralModel& model) {
  Eigen::VectorXd theta(parameter_count(model));
  Eigen::Index at = 0;
  for (const Layer& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) theta[at++] = l.weights(r, c);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) theta[at++] = l.bias[r];
  }
  return theta;
}

inline void set_parameters(NeuralModel& model, const Eigen::VectorXd& theta) {
  if (theta.size() != parameter_count(model))
    throw std::invalid_argument("set_parameters: wrong parameter count");
  Eigen::Index at = 0;
  for (Layer& l : model.layers) {
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = theta[at++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = theta[at++];
  }
}

namespace detail {

struct LayerOffsets {
  std::vector<Eigen::Index> start;  // per layer, start of its W block
  Eigen::Index shared_count = 0;    // all parameters before the output layer
  Eigen::Index total = 0;
};

inline LayerOffsets layer_offsets(const NeuralModel& model) {
  LayerOffsets off;
  Eigen::Index at = 0;
  for (const Layer& l : model.layers) {
    off.start.push_back(at);
    at += l.weights.size() + l.bias.size();
  }
  off.total = at;
  off.shared_count = off.start.back();
  return off;
}

struct SampleTape {
  std::vector<Eigen::VectorXd> pre;   // z_l per layer
  std::vector<Eigen::VectorXd> post;  // h_l per layer
};

inline void forward_sample(const NeuralModel& model, const Eigen::VectorXd& x, SampleTape& tape,
                           std::size_t sample_index) {
  tape.pre.resize(model.layers.size());
  tape.post.resize(model.layers.size());
  const Eigen::VectorXd* h = &x;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const Layer& layer = model.layers[l];
    tape.pre[l] = layer.weights * (*h) + layer.bias;
    tape.post[l] = tape.pre[l];
    if (layer.activation != Activation::Identity)
      for (Eigen::Index i = 0; i < tape.post[l].size(); ++i)
        tape.post[l][i] = activate(layer.activation, tape.pre[l][i]);
    if (!tape.post[l].allFinite())
      throw std::runtime_error("non-finite activation in layer " + std::to_string(l) +
                               " for sample " + std::to_string(sample_index));
    h = &tape.post[l];
  }
}

/// d(last hidden state)/d(shared parameters), written into g
/// (n_last x shared_count). Returns a reference to the last hidden state
/// (the model input when there are no hidden layers).
inline const Eigen::VectorXd& hidden_jacobian(const NeuralModel& model, const Eigen::VectorXd& x,
                                              const SampleTape& tape, const LayerOffsets& off,
                                              Eigen::MatrixXd& g) {
  const std::size_t n_layers = model.layers.size();
  const std::size_t n_hidden = n_layers - 1;
  const Eigen::VectorXd& h_last = n_hidden == 0 ? x : tape.post[n_hidden - 1];
  const Eigen::Index n_last = h_last.size();
  g.resize(n_last, off.shared_count);
  if (off.shared_count == 0) return h_last;

  // d h_last / d h_l, walked backward through the hidden stack.
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n_last, n_last);
  Eigen::MatrixXd m;
  for (std::size_t l = n_hidden; l-- > 0;) {
    const Layer& layer = model.layers[l];
    const Eigen::VectorXd& input = l == 0 ? x : tape.post[l - 1];
    m = d;
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      m.col(k) *= activate_derivative(layer.activation, tape.pre[l][k]);
    const Eigen::Index w_start = off.start[l];
    const Eigen::Index in_dim = layer.weights.cols();
    for (Eigen::Index k = 0; k < layer.weights.rows(); ++k)
      for (Eigen::Index j = 0; j < in_dim; ++j)
        g.col(w_start + k * in_dim + j) = m.col(k) * input[j];
    const Eigen::Index b_start = w_start + layer.weights.size();
    for (Eigen::Index k = 0; k < layer.weights.rows(); ++k) g.col(b_start + k) = m.col(k);
    d = m * layer.weights;
  }
  return h_last;
}

}  // namespace detail

/// Dense Jacobian of the normalized residuals over all parameters, plus the
/// residual vector. Rows are flattened (sample, output-dim); x and t are
/// normalized-space matrices, row per sample.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> jacobian(const NeuralModel& model,
                                                            const Eigen::MatrixXd& x,
                                                            const Eigen::MatrixXd& t) {
  model.validate();
  if (x.rows() == 0) throw std::invalid_argument("jacobian: empty batch");
  if (x.rows() != t.rows()) throw std::invalid_argument("jacobian: input/target row mismatch");
  const detail::LayerOffsets off = detail::layer_offsets(model);
  const Layer& out_layer = model.layers.back();
  const Eigen::Index out_dim = out_layer.weights.rows();
  const Eigen::Index n_last = out_layer.weights.cols();

  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(x.rows() * out_dim, off.total);
  Eigen::VectorXd r(x.rows() * out_dim);
  detail::SampleTape tape;
  Eigen::MatrixXd g;

  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    Eigen::VectorXd xi = x.row(s).transpose();
    detail::forward_sample(model, xi, tape, static_cast<std::size_t>(s));
    const Eigen::VectorXd& h_last = detail::hidden_jacobian(model, xi, tape, off, g);

    r.segment(s * out_dim, out_dim) = tape.post.back() - t.row(s).transpose();
    if (off.shared_count > 0)
      j.block(s * out_dim, 0, out_dim, off.shared_count).noalias() = out_layer.weights * g;
    for (Eigen::Index o = 0; o < out_dim; ++o) {
      for (Eigen::Index k = 0; k < n_last; ++k)
        j(s * out_dim + o, off.shared_count + o * n_last + k) = h_last[k];
      j(s * out_dim + o, off.shared_count + out_dim * n_last + o) = 1.0;
    }
  }
  return {std::move(j), std::move(r)};
}

/// Convenience overload over dataset records (normalized via the model).
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> jacobian(const NeuralModel& model,
                                                            const Dataset& batch) {
  auto [x, t] = dataset_matrices(batch, model.normalizer);
  return jacobian(model, x, t);
}

struct NormalEquations {
  Eigen::MatrixXd jtj;
  Eigen::VectorXd jtr;
  double sse = 0.0;
};

/// J^T J, J^T r and the SSE of the current model, accumulated sample by
/// sample without forming J. Exactly equals the dense-Jacobian products (a
/// property test pins this).
inline NormalEquations accumulate_normal_equations(const NeuralModel& model,
                                                   const Eigen::MatrixXd& x,
                                                   const Eigen::MatrixXd& t) {
  if (x.rows() == 0) throw std::invalid_argument("accumulate_normal_equations: empty batch");
  if (x.rows() != t.rows())
    throw std::invalid_argument("accumulate_normal_equations: input/target row mismatch");
  const detail::LayerOffsets off = detail::layer_offsets(model);
  const Layer& out_layer = model.layers.back();
  const Eigen::Index out_dim = out_layer.weights.rows();
  const Eigen::Index n_last = out_layer.weights.cols();
  const Eigen::Index shared = off.shared_count;
  const Eigen::Index n_aug = n_last + 1;  // hidden state extended with the bias input 1

  NormalEquations neq;
  neq.jtj = Eigen::MatrixXd::Zero(off.total, off.total);
  neq.jtr = Eigen::VectorXd::Zero(off.total);

  // Symmetric square root of Wo^T Wo, so per-sample shared-block updates
  // become plain rank updates of R*G.
  Eigen::MatrixXd sqrt_wtw;
  if (shared > 0) {
    Eigen::MatrixXd wtw = out_layer.weights.transpose() * out_layer.weights;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wtw);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    sqrt_wtw = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }

  const Eigen::Index chunk = std::max<Eigen::Index>(1, 4096 / std::max<Eigen::Index>(n_last, 1));
  Eigen::MatrixXd g, g_scaled(chunk * n_last, std::max<Eigen::Index>(shared, 1));
  Eigen::Index in_chunk = 0;

  Eigen::MatrixXd s_shared = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(shared, 1),
                                                   std::max<Eigen::Index>(shared, 1));
  std::vector<Eigen::MatrixXd> k_acc(
      shared > 0 ? static_cast<std::size_t>(n_aug) : 0,
      Eigen::MatrixXd::Zero(std::max<Eigen::Index>(n_last, 1), std::max<Eigen::Index>(shared, 1)));
  Eigen::MatrixXd o_acc = Eigen::MatrixXd::Zero(n_aug, n_aug);
  Eigen::MatrixXd r_acc = Eigen::MatrixXd::Zero(n_aug, out_dim);
  Eigen::VectorXd jtr_shared = Eigen::VectorXd::Zero(std::max<Eigen::Index>(shared, 1));

  auto flush_chunk = [&]() {
    if (in_chunk == 0 || shared == 0) return;
    s_shared.selfadjointView<Eigen::Lower>().rankUpdate(
        g_scaled.topRows(in_chunk * n_last).transpose());
    in_chunk = 0;
  };

  detail::SampleTape tape;
  for (Eigen::Index s = 0; s < x.rows(); ++s) {
    Eigen::VectorXd xi = x.row(s).transpose();
    detail::forward_sample(model, xi, tape, static_cast<std::size_t>(s));
    const Eigen::VectorXd& h_last = detail::hidden_jacobian(model, xi, tape, off, g);
    Eigen::VectorXd r = tape.post.back() - t.row(s).transpose();
    neq.sse += r.squaredNorm();

    if (shared > 0) {
      g_scaled.middleRows(in_chunk * n_last, n_last).noalias() = sqrt_wtw * g;
      if (++in_chunk == chunk) flush_chunk();
      for (Eigen::Index k = 0; k < n_last; ++k) k_acc[k].noalias() += h_last[k] * g;
      k_acc[n_last].noalias() += g;
      jtr_shared.noalias() += g.transpose() * (out_layer.weights.transpose() * r);
    }
    for (Eigen::Index a = 0; a < n_last; ++a) {
      for (Eigen::Index b = 0; b < n_last; ++b) o_acc(a, b) += h_last[a] * h_last[b];
      o_acc(a, n_last) += h_last[a];
      o_acc(n_last, a) += h_last[a];
    }
    o_acc(n_last, n_last) += 1.0;
    r_acc.topRows(n_last).noalias() += h_last * r.transpose();
    r_acc.row(n_last) += r.transpose();
  }
  flush_chunk();

  auto w_col = [&](Eigen::Index o, Eigen::Index k) { return shared + o * n_last + k; };
  auto b_col = [&](Eigen::Index o) { return shared + out_dim * n_last + o; };

  if (shared > 0) {
    neq.jtj.topLeftCorner(shared, shared) =
        Eigen::MatrixXd(s_shared.selfadjointView<Eigen::Lower>());
    neq.jtr.head(shared) = jtr_shared;
    Eigen::MatrixXd c;
    for (Eigen::Index k = 0; k < n_aug; ++k) {
      c.noalias() = out_layer.weights * k_acc[static_cast<std::size_t>(k)];  // out x shared
      for (Eigen::Index o = 0; o < out_dim; ++o) {
        Eigen::Index col = k < n_last ? w_col(o, k) : b_col(o);
        neq.jtj.block(col, 0, 1, shared) = c.row(o);
        neq.jtj.block(0, col, shared, 1) = c.row(o).transpose();
      }
    }
  }
  for (Eigen::Index o = 0; o < out_dim; ++o) {
    for (Eigen::Index a = 0; a < n_aug; ++a) {
      Eigen::Index ca = a < n_last ? w_col(o, a) : b_col(o);
      for (Eigen::Index b = 0; b < n_aug; ++b) {
        Eigen::Index cb = b < n_last ? w_col(o, b) : b_col(o);
        neq.jtj(ca, cb) = o_acc(a, b);
      }
      neq.jtr[ca] = r_acc(a, o);
    }
  }
  return neq;
}

/// Sum of squared normalized residuals of a model on a batch.
inline double batch_sse(const NeuralModel& model, const Eigen::MatrixXd& x,
                        const Eigen::MatrixXd& t) {
  return (forward_batch(model, x) - t).squaredNorm();
}

struct LmStepResult {
  bool ok = false;  // false: factorization failed, caller should raise mu
  NeuralModel candidate;
  double sse = 0.0;
};

/// One damped Gauss-Newton trial step from precomputed normal equations:
/// solves (J^T J + mu I) delta = -J^T r and evaluates the candidate's SSE.
inline LmStepResult lm_step_with(const NormalEquations& neq, const NeuralModel& model,
                                 const Eigen::MatrixXd& x, const Eigen::MatrixXd& t, double mu) {
  if (mu <= 0.0) throw std::invalid_argument("lm_step: mu must be > 0");
  Eigen::MatrixXd a = neq.jtj;
  a.diagonal().array() += mu;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  LmStepResult result;
  if (ldlt.info() != Eigen::Success) return result;
  Eigen::VectorXd delta = ldlt.solve(-neq.jtr);
  if (!delta.allFinite()) return result;
  result.candidate = model;
  set_parameters(result.candidate, get_parameters(model) + delta);
  result.sse = batch_sse(result.candidate, x, t);
  result.ok = true;
  return result;
}

inline LmStepResult lm_step(const NeuralModel& model, const Eigen::MatrixXd& x,
                            const Eigen::MatrixXd& t, double mu) {
  return lm_step_with(accumulate_normal_equations(model, x, t), model, x, t, mu);
}

// --------------------------------------------------------------------------
// Training loop
// --------------------------------------------------------------------------

struct BpLogRow {
  int epoch = 0;
  double mu = 0.0;
  double train_rmse_db = 0.0;
  double val_rmse_db = 0.0;
  bool accepted = false;
};

struct BpMemberLog {
  std::uint64_t seed = 0;
  bool diverged = false;  // never accepted a step
  std::vector<BpLogRow> rows;
};

inline void write_training_log_csv(const BpMemberLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_training_log_csv: cannot open " + path);
  out << "epoch,mu,train_rmse_db,val_rmse_db,accepted\n";
  char buf[160];
  for (const BpLogRow& r : log.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%d\n", r.epoch, r.mu, r.train_rmse_db,
                  r.val_rmse_db, r.accepted ? 1 : 0);
    out << buf;
  }
}

namespace detail {

/// U[-r, r] init with r = sqrt(6/(fan_in+fan_out)); biases start at zero so
/// tanh/logistic pre-activations sit in the active region for [-1,1] inputs.
inline NeuralModel init_bp_model(const BpConfig& cfg, const Normalizer& norm, TargetKind kind,
                                 std::uint64_t member_seed) {
  Rng rng(member_seed);
  NeuralModel model;
  model.normalizer = norm;
  model.target_kind = kind;
  Eigen::Index in_dim = static_cast<Eigen::Index>(norm.input_dim());
  for (int size : cfg.hidden_layers) {
    Layer layer;
    double r = std::sqrt(6.0 / static_cast<double>(in_dim + size));
    layer.weights.resize(size, in_dim);
    for (Eigen::Index a = 0; a < layer.weights.rows(); ++a)
      for (Eigen::Index b = 0; b < layer.weights.cols(); ++b)
        layer.weights(a, b) = rng.uniform(-r, r);
    layer.bias = Eigen::VectorXd::Zero(size);
    layer.activation = cfg.activation;
    model.layers.push_back(std::move(layer));
    in_dim = size;
  }
  Layer out;
  Eigen::Index out_dim = static_cast<Eigen::Index>(norm.output_dim());
  double r = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  out.weights.resize(out_dim, in_dim);
  for (Eigen::Index a = 0; a < out.weights.rows(); ++a)
    for (Eigen::Index b = 0; b < out.weights.cols(); ++b) out.weights(a, b) = rng.uniform(-r, r);
  out.bias = Eigen::VectorXd::Zero(out_dim);
  out.activation = Activation::Identity;
  model.layers.push_back(std::move(out));
  return model;
}

struct BpMemberResult {
  NeuralModel model;
  BpMemberLog log;
  double best_val_rmse = 0.0;
  double final_train_rmse = 0.0;
  int epochs = 0;
};

inline BpMemberResult train_bp_member(const Eigen::MatrixXd& x_fit, const Eigen::MatrixXd& t_fit,
                                      const Eigen::MatrixXd& x_val, const Eigen::MatrixXd& t_val,
                                      const Normalizer& norm, TargetKind kind, const BpConfig& cfg,
                                      std::uint64_t member_seed) {
  BpMemberResult res;
  res.log.seed = member_seed;
  NeuralModel model = init_bp_model(cfg, norm, kind, member_seed);

  double mu = cfg.mu_init;
  double best_val = std::numeric_limits<double>::infinity();
  NeuralModel best_model = model;
  int bad_epochs = 0;
  int accepted_epochs = 0;

  const Eigen::Index m_fit = x_fit.rows();
  std::vector<Eigen::Index> all_rows(static_cast<std::size_t>(m_fit));
  std::iota(all_rows.begin(), all_rows.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const Eigen::MatrixXd* xs = &x_fit;
    const Eigen::MatrixXd* ts = &t_fit;
    Eigen::MatrixXd x_sub, t_sub;
    if (cfg.subsample_fraction < 1.0) {
      Rng rng(substream_seed(member_seed, "bp-subsample", static_cast<std::uint64_t>(epoch)));
      Eigen::Index keep = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::llround(cfg.subsample_fraction * m_fit)));
      std::vector<Eigen::Index> rows = all_rows;
      for (Eigen::Index i = 0; i < keep; ++i) {
        Eigen::Index j = i + static_cast<Eigen::Index>(rng.uniform() * (m_fit - i));
        std::swap(rows[i], rows[j]);
      }
      x_sub.resize(keep, x_fit.cols());
      t_sub.resize(keep, t_fit.cols());
      for (Eigen::Index i = 0; i < keep; ++i) {
        x_sub.row(i) = x_fit.row(rows[i]);
        t_sub.row(i) = t_fit.row(rows[i]);
      }
      xs = &x_sub;
      ts = &t_sub;
    }

    NormalEquations neq = accumulate_normal_equations(model, *xs, *ts);
    bool accepted = false;
    while (true) {
      LmStepResult step = lm_step_with(neq, model, *xs, *ts, mu);
      if (step.ok && step.sse < neq.sse) {
        model = std::move(step.candidate);
        mu = std::max(mu / cfg.mu_down, 1e-20);
        accepted = true;
        break;
      }
      mu *= cfg.mu_up;
      if (mu > cfg.mu_max) break;
    }

    double train_rmse = physical_rmse(forward_batch(model, x_fit) - t_fit, norm);
    double val_rmse = physical_rmse(forward_batch(model, x_val) - t_val, norm);
    res.log.rows.push_back(BpLogRow{epoch, mu, train_rmse, val_rmse, accepted});
    res.epochs = epoch;

    if (!accepted) break;  // mu_max exceeded: no further progress possible
    ++accepted_epochs;

    if (val_rmse < best_val) {
      best_val = val_rmse;
      best_model = model;
      bad_epochs = 0;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }

  res.log.diverged = accepted_epochs == 0;
  res.model = std::move(best_model);
  res.best_val_rmse = best_val;
  res.final_train_rmse = physical_rmse(forward_batch(res.model, x_fit) - t_fit, norm);
  return res;
}

}  // namespace detail

/// Trains the LM ensemble. Every member uses the same seeded train/validation
/// split; member seeds drive only the weight init. Each member returns its
/// best-validation snapshot. Members that never accept a step are dropped
/// (all-diverged is an error).
inline Ensemble train_bp(const Dataset& train, const BpConfig& cfg, TargetKind kind,
                         unsigned threads = 1, std::vector<BpMemberLog>* logs_out = nullptr) {
  cfg.validate();
  if (train.records.size() < 10)
    throw std::invalid_argument("train_bp: need >= 10 samples for the validation split");

  Normalizer norm = fit_normalizer(train, kind, DegeneratePolicy::Center);
  auto [x_all, t_all] = dataset_matrices(train, norm);

  // Shared validation split.
  const Eigen::Index m = x_all.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(substream_seed(cfg.seed, "bp-split"));
  for (Eigen::Index i = m - 1; i > 0; --i) {
    Eigen::Index j = static_cast<Eigen::Index>(split_rng.uniform() * (i + 1));
    std::swap(order[i], order[j]);
  }
  Eigen::Index n_val =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(cfg.val_fraction * m)), 1,
                               m - 1);
  Eigen::MatrixXd x_val(n_val, x_all.cols()), t_val(n_val, t_all.cols());
  Eigen::MatrixXd x_fit(m - n_val, x_all.cols()), t_fit(m - n_val, t_all.cols());
  for (Eigen::Index i = 0; i < n_val; ++i) {
    x_val.row(i) = x_all.row(order[i]);
    t_val.row(i) = t_all.row(order[i]);
  }
  for (Eigen::Index i = n_val; i < m; ++i) {
    x_fit.row(i - n_val) = x_all.row(order[i]);
    t_fit.row(i - n_val) = t_all.row(order[i]);
  }

  std::vector<detail::BpMemberResult> results(cfg.ensemble_size);
  parallel_for(cfg.ensemble_size, threads, [&](std::size_t mi) {
    std::uint64_t member_seed = substream_seed(cfg.seed, "bp-init", mi);
    results[mi] = detail::train_bp_member(x_fit, t_fit, x_val, t_val, norm, kind, cfg, member_seed);
  });

  Ensemble e;
  e.meta.method = "bp";
  e.meta.hyperparameters["activation"] = to_string(cfg.activation);
  {
    std::string sizes;
    for (int s : cfg.hidden_layers) sizes += (sizes.empty() ? "" : ",") + std::to_string(s);
    e.meta.hyperparameters["hidden_layers"] = sizes;
  }
  e.meta.hyperparameters["ensemble_size"] = std::to_string(cfg.ensemble_size);
  e.meta.hyperparameters["max_epochs"] = std::to_string(cfg.max_epochs);
  e.meta.hyperparameters["patience"] = std::to_string(cfg.patience);
  e.meta.hyperparameters["seed"] = std::to_string(cfg.seed);
  {
    std::ostringstream os;
    os << cfg.subsample_fraction;
    e.meta.hyperparameters["subsample_fraction"] = os.str();
  }

  int dropped = 0;
  for (std::size_t mi = 0; mi < results.size(); ++mi) {
    detail::BpMemberResult& r = results[mi];
    if (logs_out) logs_out->push_back(r.log);
    if (r.log.diverged) {
      ++dropped;
      continue;
    }
    e.members.push_back(std::move(r.model));
    e.meta.member_seeds.push_back(r.log.seed);
    e.meta.member_train_rmse.push_back(r.final_train_rmse);
    e.meta.member_val_rmse.push_back(r.best_val_rmse);
    e.meta.member_epochs.push_back(r.epochs);
  }
  if (e.members.empty())
    throw std::runtime_error("train_bp: all members diverged (mu_max exceeded at epoch 1)");
  if (dropped > 0) e.meta.hyperparameters["dropped_members"] = std::to_string(dropped);
  e.validate();
  return e;
}

}  // namespace ramanml
