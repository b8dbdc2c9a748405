#pragma once

// Random-projection training of single-hidden-layer networks: the hidden
// layer is drawn once from a seeded PRNG and frozen; output weights come from
// a closed-form regularized least-squares solve. An SVD of the augmented
// design matrix [H | 1] is used rather than the normal equations, so the
// solve stays stable at large hidden counts and handles rank deficiency.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ramanml/nn.hpp"
#include "ramanml/parallel.hpp"
#include "ramanml/rng.hpp"

namespace ramanml {

struct RpConfig {
  Activation activation = Activation::Sine;
  int n_hidden = 400;
  int ensemble_size = 20;
  double ridge_lambda = 1e-8;
  std::uint64_t seed = 1;

  void validate() const {
    if (n_hidden < 1) throw std::invalid_argument("RpConfig: n_hidden must be >= 1");
    if (ensemble_size < 1) throw std::invalid_argument("RpConfig: ensemble_size must be >= 1");
    if (ridge_lambda < 0.0) throw std::invalid_argument("RpConfig: ridge_lambda must be >= 0");
    if (activation == Activation::Identity)
      throw std::invalid_argument("RpConfig: hidden activation must be nonlinear");
  }
};

/// Frozen random hidden layer: entries i.i.d. uniform on [-1, 1], drawn
/// row-major (weights first, then biases) from the seeded PRNG.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> init_random_hidden(int n_hidden,
                                                                      std::uint64_t seed,
                                                                      int input_dim = 10) {
  if (n_hidden < 1) throw std::invalid_argument("init_random_hidden: n_hidden must be >= 1");
  if (input_dim < 1) throw std::invalid_argument("init_random_hidden: input_dim must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd w(n_hidden, input_dim);
  for (int r = 0; r < n_hidden; ++r)
    for (int c = 0; c < input_dim; ++c) w(r, c) = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd b(n_hidden);
  for (int r = 0; r < n_hidden; ++r) b[r] = rng.uniform(-1.0, 1.0);
  return {std::move(w), std::move(b)};
}

/// Minimizes ||[H|1] W - T||^2 + lambda ||W||^2 over W ((n_hidden+1) x out,
/// bias row last). lambda = 0 falls back to the pseudoinverse solution.
inline Eigen::MatrixXd solve_output_weights(const Eigen::MatrixXd& h, const Eigen::MatrixXd& t,
                                            double ridge_lambda) {
  if (h.rows() < 1) throw std::invalid_argument("solve_output_weights: empty design matrix");
  if (h.rows() != t.rows())
    throw std::invalid_argument("solve_output_weights: H and T row counts differ");
  if (ridge_lambda < 0.0)
    throw std::invalid_argument("solve_output_weights: ridge_lambda must be >= 0");
  if (!h.allFinite() || !t.allFinite())
    throw std::invalid_argument("solve_output_weights: non-finite entries in H or T");

  Eigen::MatrixXd a(h.rows(), h.cols() + 1);
  a << h, Eigen::VectorXd::Ones(h.rows());
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::VectorXd filt(sv.size());
  if (ridge_lambda > 0.0) {
    filt = sv.array() / (sv.array().square() + ridge_lambda);
  } else {
    double cutoff = sv.size() > 0 ? sv[0] * std::max(a.rows(), a.cols()) *
                                        std::numeric_limits<double>::epsilon()
                                  : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) filt[i] = sv[i] > cutoff ? 1.0 / sv[i] : 0.0;
  }
  return svd.matrixV() * filt.asDiagonal() * (svd.matrixU().transpose() * t);
}

namespace detail {

inline void apply_activation_inplace(Eigen::MatrixXd& m, Activation act) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = activate(act, m(r, c));
}

/// One RP member trained on normalized matrices. Returns the model's two
/// layers and its physical-units training RMSE.
inline std::pair<std::vector<Layer>, double> train_rp_member(
    const Eigen::MatrixXd& x, const Eigen::MatrixXd& t, const Normalizer& norm,
    const RpConfig& cfg, std::uint64_t member_seed) {
  auto [wh, bh] = init_random_hidden(cfg.n_hidden, member_seed, static_cast<int>(x.cols()));
  Eigen::MatrixXd h = (x * wh.transpose()).rowwise() + bh.transpose();
  apply_activation_inplace(h, cfg.activation);
  Eigen::MatrixXd wout = solve_output_weights(h, t, cfg.ridge_lambda);

  Eigen::MatrixXd pred = h * wout.topRows(cfg.n_hidden);
  pred.rowwise() += wout.row(cfg.n_hidden);
  double rmse = physical_rmse(pred - t, norm);

  std::vector<Layer> layers(2);
  layers[0] = Layer{std::move(wh), std::move(bh), cfg.activation};
  layers[1] = Layer{wout.topRows(cfg.n_hidden).transpose(), wout.row(cfg.n_hidden).transpose(),
                    Activation::Identity};
  return {std::move(layers), rmse};
}

}  // namespace detail

/// Trains an RP ensemble: one shared normalizer, ensemble_size members with
/// independent hidden-layer seeds, closed-form output weights each.
inline Ensemble train_rp(const Dataset& train, const RpConfig& cfg, TargetKind kind,
                         unsigned threads = 1) {
  cfg.validate();
  if (train.records.empty()) throw std::invalid_argument("train_rp: empty training set");

  Normalizer norm = fit_normalizer(train, kind, DegeneratePolicy::Center);
  auto [x, t] = dataset_matrices(train, norm);

  Ensemble e;
  e.meta.method = "rp";
  e.meta.hyperparameters["activation"] = to_string(cfg.activation);
  e.meta.hyperparameters["n_hidden"] = std::to_string(cfg.n_hidden);
  e.meta.hyperparameters["ensemble_size"] = std::to_string(cfg.ensemble_size);
  {
    std::ostringstream os;
    os << cfg.ridge_lambda;
    e.meta.hyperparameters["ridge_lambda"] = os.str();
  }
  e.meta.hyperparameters["seed"] = std::to_string(cfg.seed);
  e.members.resize(cfg.ensemble_size);
  e.meta.member_seeds.resize(cfg.ensemble_size);
  e.meta.member_train_rmse.resize(cfg.ensemble_size);

  parallel_for(cfg.ensemble_size, threads, [&](std::size_t m) {
    std::uint64_t member_seed = substream_seed(cfg.seed, "rp-init", m);
    auto [layers, rmse] = detail::train_rp_member(x, t, norm, cfg, member_seed);
    NeuralModel model;
    model.layers = std::move(layers);
    model.normalizer = norm;
    model.target_kind = kind;
    e.members[m] = std::move(model);
    e.meta.member_seeds[m] = member_seed;
    e.meta.member_train_rmse[m] = rmse;
  });
  e.validate();
  return e;
}

// --------------------------------------------------------------------------
// Hidden-node sweep
// --------------------------------------------------------------------------

inline std::vector<int> default_sweep_grid() {
  std::vector<int> grid;
  for (int n = 20; n <= 600; n += 20) grid.push_back(n);
  return grid;
}

struct SweepRow {
  int n_hidden = 0;
  Activation activation = Activation::Sine;
  double mean_val_rmse_db = 0.0;
  double std_val_rmse_db = 0.0;
  double train_rmse_db = 0.0;
};

struct SweepResult {
  int best_n_hidden = 0;
  std::vector<SweepRow> rows;
};

/// Per-sample RMSE of the ensemble prediction over a dataset, physical units.
inline std::vector<double> per_sample_rmse(const Ensemble& e, const Dataset& ds) {
  std::vector<double> out;
  out.reserve(ds.records.size());
  TargetKind kind = e.members.front().target_kind;
  for (const SampleRecord& rec : ds.records) {
    std::vector<double> pred = ensemble_predict(e, rec.pumps);
    const std::vector<double>& targ = target_of(rec, kind);
    double acc = 0.0;
    for (std::size_t j = 0; j < targ.size(); ++j) {
      double d = pred[j] - targ[j];
      acc += d * d;
    }
    out.push_back(std::sqrt(acc / static_cast<double>(targ.size())));
  }
  return out;
}

/// Trains one ensemble per grid point and returns the validation-RMSE
/// minimizing hidden count plus the full table (ties break to fewer nodes).
inline SweepResult sweep_hidden_nodes(const Dataset& train, const Dataset& val, Activation act,
                                      TargetKind kind, std::vector<int> grid = default_sweep_grid(),
                                      int ensemble_size = 20, double ridge_lambda = 1e-8,
                                      std::uint64_t seed = 1, unsigned threads = 1) {
  if (grid.empty()) throw std::invalid_argument("sweep_hidden_nodes: empty grid");
  if (val.records.empty()) throw std::invalid_argument("sweep_hidden_nodes: empty validation set");
  SweepResult result;
  double best = std::numeric_limits<double>::infinity();
  for (int n : grid) {
    RpConfig cfg;
    cfg.activation = act;
    cfg.n_hidden = n;
    cfg.ensemble_size = ensemble_size;
    cfg.ridge_lambda = ridge_lambda;
    cfg.seed = substream_seed(seed, "sweep", static_cast<std::uint64_t>(n));
    Ensemble e = train_rp(train, cfg, kind, threads);

    std::vector<double> val_rmse = per_sample_rmse(e, val);
    double mean = 0.0;
    for (double v : val_rmse) mean += v;
    mean /= static_cast<double>(val_rmse.size());
    double var = 0.0;
    for (double v : val_rmse) var += (v - mean) * (v - mean);
    double stdev = std::sqrt(var / static_cast<double>(val_rmse.size()));

    std::vector<double> train_rmse = per_sample_rmse(e, train);
    double train_mean = 0.0;
    for (double v : train_rmse) train_mean += v;
    train_mean /= static_cast<double>(train_rmse.size());

    result.rows.push_back(SweepRow{n, act, mean, stdev, train_mean});
    if (mean < best) {
      best = mean;
      result.best_n_hidden = n;
    }
  }
  return result;
}

inline void write_sweep_csv(const SweepResult& result, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_sweep_csv: cannot open " + path);
  out << "n_hidden,activation,mean_val_rmse_db,std_val_rmse_db,train_rmse_db\n";
  char buf[160];
  for (const SweepRow& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%s,%.9g,%.9g,%.9g\n", r.n_hidden,
                  to_string(r.activation).c_str(), r.mean_val_rmse_db, r.std_val_rmse_db,
                  r.train_rmse_db);
    out << buf;
  }
}

}  // namespace ramanml
