#pragma once

// Neural model representation shared by both trainers: layered affine maps
// with elementwise activations, ensemble averaging, and JSON persistence.
// Models are immutable after construction as far as inference is concerned;
// forward() is a pure function.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ramanml/dataset.hpp"

namespace ramanml {

inline constexpr int kModelSchemaVersion = 1;

enum class Activation { Sine, Tanh, Logistic, Identity };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::Sine: return "sine";
    case Activation::Tanh: return "tanh";
    case Activation::Logistic: return "logistic";
    case Activation::Identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "sine") return Activation::Sine;
  if (s == "tanh") return Activation::Tanh;
  if (s == "logistic") return Activation::Logistic;
  if (s == "identity") return Activation::Identity;
  throw std::runtime_error("unknown activation tag '" + s + "'");
}

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::Sine: return std::sin(x);
    case Activation::Tanh: return std::tanh(x);
    case Activation::Logistic: return 1.0 / (1.0 + std::exp(-x));
    case Activation::Identity: return x;
  }
  return x;
}

inline double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::Sine: return std::cos(x);
    case Activation::Tanh: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Logistic: {
      double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::Identity;
};

struct NeuralModel {
  std::vector<Layer> layers;
  Normalizer normalizer;
  TargetKind target_kind = TargetKind::Gain;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weights.cols(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weights.rows(); }

  void validate() const {
    if (layers.empty()) throw std::invalid_argument("NeuralModel: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Layer& layer = layers[l];
      if (layer.weights.rows() != layer.bias.size())
        throw std::invalid_argument("NeuralModel: layer " + std::to_string(l) +
                                    " weight/bias row mismatch");
      if (l > 0 && layer.weights.cols() != layers[l - 1].weights.rows())
        throw std::invalid_argument("NeuralModel: layer " + std::to_string(l) +
                                    " input dim does not chain");
      if (!layer.weights.allFinite() || !layer.bias.allFinite())
        throw std::invalid_argument("NeuralModel: non-finite parameters in layer " +
                                    std::to_string(l));
    }
    if (layers.back().activation != Activation::Identity)
      throw std::invalid_argument("NeuralModel: output layer must be identity (regression)");
    if (input_dim() != normalizer.input_dim())
      throw std::invalid_argument("NeuralModel: input dim does not match normalizer");
    if (output_dim() != normalizer.output_dim())
      throw std::invalid_argument("NeuralModel: output dim does not match normalizer");
  }
};

/// Forward pass in normalized space (no input/output scaling applied).
inline Eigen::VectorXd forward_normalized(const NeuralModel& model, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = x;
  for (const Layer& layer : model.layers) {
    Eigen::VectorXd z = layer.weights * h + layer.bias;
    if (layer.activation != Activation::Identity)
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = activate(layer.activation, z[i]);
    h = std::move(z);
  }
  return h;
}

/// Full inference: scale inputs, run layers, de-scale outputs (dB or dBm).
inline std::vector<double> forward(const NeuralModel& model, const PumpSet& pumps) {
  std::vector<double> feats = pumps.features();
  if (feats.size() != model.input_dim())
    throw std::invalid_argument("forward: pump set feature dim " + std::to_string(feats.size()) +
                                " does not match model input dim " +
                                std::to_string(model.input_dim()));
  std::vector<double> x = model.normalizer.apply_input(feats);
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
  Eigen::VectorXd y = forward_normalized(model, v);
  return model.normalizer.invert_output(std::vector<double>(y.data(), y.data() + y.size()));
}

struct EnsembleMeta {
  std::string method;  // "rp" | "bp"
  std::vector<std::uint64_t> member_seeds;
  std::map<std::string, std::string> hyperparameters;
  std::vector<double> member_train_rmse;
  std::vector<double> member_val_rmse;  // bp only
  std::vector<int> member_epochs;       // bp only
};

struct Ensemble {
  std::vector<NeuralModel> members;
  EnsembleMeta meta;

  std::size_t size() const { return members.size(); }

  void validate() const {
    if (members.empty()) throw std::invalid_argument("Ensemble: no members");
    for (const NeuralModel& m : members) {
      m.validate();
      if (m.input_dim() != members.front().input_dim() ||
          m.output_dim() != members.front().output_dim() ||
          m.target_kind != members.front().target_kind)
        throw std::invalid_argument("Ensemble: members disagree on dims or target kind");
    }
  }
};

/// Arithmetic mean of member predictions, accumulated in fixed member order.
inline std::vector<double> ensemble_predict(const Ensemble& e, const PumpSet& pumps) {
  if (e.members.empty()) throw std::invalid_argument("ensemble_predict: empty ensemble");
  std::vector<double> acc = forward(e.members.front(), pumps);
  for (std::size_t m = 1; m < e.members.size(); ++m) {
    std::vector<double> y = forward(e.members[m], pumps);
    for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += y[j];
  }
  const double inv = 1.0 / static_cast<double>(e.members.size());
  for (double& v : acc) v *= inv;
  return acc;
}

// --------------------------------------------------------------------------
// Batched helpers shared by the trainers
// --------------------------------------------------------------------------

/// Row-per-sample forward pass in normalized space.
inline Eigen::MatrixXd forward_batch(const NeuralModel& model, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd h = x;
  for (const Layer& layer : model.layers) {
    Eigen::MatrixXd z = (h * layer.weights.transpose()).rowwise() + layer.bias.transpose();
    if (layer.activation != Activation::Identity)
      for (Eigen::Index r = 0; r < z.rows(); ++r)
        for (Eigen::Index c = 0; c < z.cols(); ++c) z(r, c) = activate(layer.activation, z(r, c));
    h = std::move(z);
  }
  return h;
}

/// Normalized design matrices (inputs M x in, targets M x out) for a dataset.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> dataset_matrices(const Dataset& ds,
                                                                    const Normalizer& norm) {
  if (ds.records.empty()) throw std::invalid_argument("dataset_matrices: empty dataset");
  Eigen::MatrixXd x(ds.records.size(), norm.input_dim());
  Eigen::MatrixXd t(ds.records.size(), norm.output_dim());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    auto [xi, ti] = apply_normalizer(norm, ds.records[i]);
    for (std::size_t j = 0; j < xi.size(); ++j) x(i, j) = xi[j];
    for (std::size_t j = 0; j < ti.size(); ++j) t(i, j) = ti[j];
  }
  return {std::move(x), std::move(t)};
}

/// Global RMSE in physical units (dB/dBm) of normalized-space errors: columns
/// de-normalize by output_std only, since the mean shift cancels.
inline double physical_rmse(const Eigen::MatrixXd& err_norm, const Normalizer& norm) {
  if (err_norm.size() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index c = 0; c < err_norm.cols(); ++c) {
    double s = norm.output_std[static_cast<std::size_t>(c)];
    acc += err_norm.col(c).squaredNorm() * s * s;
  }
  return std::sqrt(acc / static_cast<double>(err_norm.size()));
}

// --------------------------------------------------------------------------
// Persistence
// --------------------------------------------------------------------------

namespace detail {

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw std::runtime_error("model file: bad weight matrix");
  const std::size_t rows = j.size(), cols = j.front().size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw std::runtime_error("model file: ragged weight matrix");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace detail

inline void save_ensemble(const Ensemble& e, const std::string& path) {
  e.validate();
  json members = json::array();
  for (const NeuralModel& m : e.members) {
    json layers = json::array();
    for (const Layer& layer : m.layers) {
      json bias = json::array();
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) bias.push_back(layer.bias[i]);
      layers.push_back(json{{"weights", detail::matrix_to_json(layer.weights)},
                            {"bias", std::move(bias)},
                            {"activation", to_string(layer.activation)}});
    }
    members.push_back(json{{"layers", std::move(layers)}});
  }
  json doc{{"schema_version", kModelSchemaVersion},
           {"method", e.meta.method},
           {"target_kind", to_string(e.members.front().target_kind)},
           {"input_dim", e.members.front().input_dim()},
           {"output_dim", e.members.front().output_dim()},
           {"normalizer", normalizer_to_json(e.members.front().normalizer)},
           {"members", std::move(members)},
           {"seeds", e.meta.member_seeds},
           {"hyperparameters", e.meta.hyperparameters},
           {"member_train_rmse", e.meta.member_train_rmse},
           {"member_val_rmse", e.meta.member_val_rmse},
           {"member_epochs", e.meta.member_epochs}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_ensemble: cannot open " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("save_ensemble: write failed for " + path);
}

inline Ensemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_ensemble: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_ensemble: " + path + " is not valid JSON: " + e.what());
  }
  int version = doc.at("schema_version").get<int>();
  if (version != kModelSchemaVersion)
    throw std::runtime_error("load_ensemble: unsupported schema_version " +
                             std::to_string(version));
  Ensemble e;
  e.meta.method = doc.at("method").get<std::string>();
  e.meta.member_seeds = doc.value("seeds", std::vector<std::uint64_t>{});
  if (doc.contains("hyperparameters"))
    e.meta.hyperparameters = doc.at("hyperparameters").get<std::map<std::string, std::string>>();
  e.meta.member_train_rmse = doc.value("member_train_rmse", std::vector<double>{});
  e.meta.member_val_rmse = doc.value("member_val_rmse", std::vector<double>{});
  e.meta.member_epochs = doc.value("member_epochs", std::vector<int>{});

  Normalizer norm = normalizer_from_json(doc.at("normalizer"));
  TargetKind kind = target_kind_from_string(doc.at("target_kind").get<std::string>());
  const std::size_t input_dim = doc.at("input_dim").get<std::size_t>();
  const std::size_t output_dim = doc.at("output_dim").get<std::size_t>();
  if (input_dim != norm.input_dim() || output_dim != norm.output_dim())
    throw std::runtime_error("load_ensemble: declared dims (" + std::to_string(input_dim) + "->" +
                             std::to_string(output_dim) + ") do not match normalizer dims (" +
                             std::to_string(norm.input_dim()) + "->" +
                             std::to_string(norm.output_dim()) + ")");

  for (const json& mj : doc.at("members")) {
    NeuralModel m;
    m.normalizer = norm;
    m.target_kind = kind;
    for (const json& lj : mj.at("layers")) {
      Layer layer;
      layer.weights = detail::matrix_from_json(lj.at("weights"));
      std::vector<double> bias = lj.at("bias").get<std::vector<double>>();
      layer.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), bias.size());
      layer.activation = activation_from_string(lj.at("activation").get<std::string>());
      m.layers.push_back(std::move(layer));
    }
    if (m.input_dim() != input_dim || m.output_dim() != output_dim)
      throw std::runtime_error("load_ensemble: member dims do not match declared dims");
    m.validate();
    e.members.push_back(std::move(m));
  }
  e.validate();
  return e;
}

}  // namespace ramanml
