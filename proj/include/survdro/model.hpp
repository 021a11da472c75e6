#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <variant>

#include "survdro/errors.hpp"
#include "survdro/rng.hpp"

namespace survdro {

enum class ModelKind { linear, mlp };

inline std::string to_string(ModelKind k) {
  return k == ModelKind::linear ? "linear" : "mlp";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  if (s == "linear") return ModelKind::linear;
  if (s == "mlp") return ModelKind::mlp;
  throw config_error("unknown model kind '" + s + "'");
}

// f(x; theta) = theta . x
struct LinearModel {
  Eigen::VectorXd weights;
};

// f(x; theta) = w2 . relu(W1 x + b1) + b2
struct MlpModel {
  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;
};

// Log partial hazard function. Parameters flatten to a single vector in a
// fixed canonical order (linear: weights; mlp: W1 row-major, b1, w2, b2)
// so the optimizer can treat every model uniformly.
struct RiskModel {
  std::variant<LinearModel, MlpModel> impl;

  ModelKind kind() const {
    return std::holds_alternative<LinearModel>(impl) ? ModelKind::linear
                                                     : ModelKind::mlp;
  }

  std::size_t input_dim() const {
    if (const auto* lin = std::get_if<LinearModel>(&impl)) {
      return static_cast<std::size_t>(lin->weights.size());
    }
    return static_cast<std::size_t>(std::get<MlpModel>(impl).w1.cols());
  }

  std::size_t hidden_dim() const {
    if (const auto* mlp = std::get_if<MlpModel>(&impl)) {
      return static_cast<std::size_t>(mlp->w1.rows());
    }
    return 0;
  }

  std::size_t param_count() const {
    if (const auto* lin = std::get_if<LinearModel>(&impl)) {
      return static_cast<std::size_t>(lin->weights.size());
    }
    const auto& mlp = std::get<MlpModel>(impl);
    return static_cast<std::size_t>(mlp.w1.size() + mlp.b1.size() +
                                    mlp.w2.size() + 1);
  }

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(param_count()));
    if (const auto* lin = std::get_if<LinearModel>(&impl)) {
      out = lin->weights;
      return out;
    }
    const auto& mlp = std::get<MlpModel>(impl);
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < mlp.w1.rows(); ++r) {
      for (Eigen::Index c = 0; c < mlp.w1.cols(); ++c) out[pos++] = mlp.w1(r, c);
    }
    for (Eigen::Index r = 0; r < mlp.b1.size(); ++r) out[pos++] = mlp.b1[r];
    for (Eigen::Index r = 0; r < mlp.w2.size(); ++r) out[pos++] = mlp.w2[r];
    out[pos++] = mlp.b2;
    return out;
  }

  void set_from_flat(const Eigen::VectorXd& flat) {
    if (static_cast<std::size_t>(flat.size()) != param_count()) {
      throw shape_error("set_from_flat: parameter count mismatch");
    }
    if (auto* lin = std::get_if<LinearModel>(&impl)) {
      lin->weights = flat;
      return;
    }
    auto& mlp = std::get<MlpModel>(impl);
    Eigen::Index pos = 0;
    for (Eigen::Index r = 0; r < mlp.w1.rows(); ++r) {
      for (Eigen::Index c = 0; c < mlp.w1.cols(); ++c) mlp.w1(r, c) = flat[pos++];
    }
    for (Eigen::Index r = 0; r < mlp.b1.size(); ++r) mlp.b1[r] = flat[pos++];
    for (Eigen::Index r = 0; r < mlp.w2.size(); ++r) mlp.w2[r] = flat[pos++];
    mlp.b2 = flat[pos++];
  }
};

// Every tensor of fan-in m draws uniformly from [-1/sqrt(m), +1/sqrt(m)],
// replicating the default initialisation of the usual deep-learning
// stacks. Draw order equals the canonical flatten order.
inline RiskModel init_params(ModelKind kind, std::size_t input_dim,
                             std::size_t hidden_dim, std::uint64_t seed) {
  if (input_dim == 0) throw config_error("init_params: input_dim must be positive");
  Rng rng(seed);
  if (kind == ModelKind::linear) {
    LinearModel lin;
    lin.weights.resize(static_cast<Eigen::Index>(input_dim));
    const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (Eigen::Index j = 0; j < lin.weights.size(); ++j) {
      lin.weights[j] = rng.uniform_symmetric(bound);
    }
    return RiskModel{lin};
  }
  if (hidden_dim == 0) throw config_error("init_params: hidden_dim must be positive");
  MlpModel mlp;
  mlp.w1.resize(static_cast<Eigen::Index>(hidden_dim),
                static_cast<Eigen::Index>(input_dim));
  mlp.b1.resize(static_cast<Eigen::Index>(hidden_dim));
  mlp.w2.resize(static_cast<Eigen::Index>(hidden_dim));
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (Eigen::Index r = 0; r < mlp.w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < mlp.w1.cols(); ++c) {
      mlp.w1(r, c) = rng.uniform_symmetric(bound1);
    }
  }
  for (Eigen::Index r = 0; r < mlp.b1.size(); ++r) {
    mlp.b1[r] = rng.uniform_symmetric(bound1);
  }
  for (Eigen::Index r = 0; r < mlp.w2.size(); ++r) {
    mlp.w2[r] = rng.uniform_symmetric(bound2);
  }
  mlp.b2 = rng.uniform_symmetric(bound2);
  return RiskModel{mlp};
}

inline Eigen::VectorXd risk_scores(const RiskModel& model,
                                   const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
    throw shape_error("risk_scores: feature dimension mismatch");
  }
  if (const auto* lin = std::get_if<LinearModel>(&model.impl)) {
    return x * lin->weights;
  }
  const auto& mlp = std::get<MlpModel>(model.impl);
  Eigen::MatrixXd pre = (x * mlp.w1.transpose()).rowwise() + mlp.b1.transpose();
  Eigen::MatrixXd act = pre.cwiseMax(0.0);
  return (act * mlp.w2).array() + mlp.b2;
}

// Exact gradient of sum_i upstream_i * f(x_i; theta) with respect to the
// flat parameter vector. ReLU's subgradient at exactly zero is taken as 0.
inline Eigen::VectorXd backward(const RiskModel& model,
                                const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& upstream) {
  if (static_cast<std::size_t>(x.cols()) != model.input_dim()) {
    throw shape_error("backward: feature dimension mismatch");
  }
  if (upstream.size() != x.rows()) {
    throw shape_error("backward: upstream length mismatch");
  }
  if (const auto* lin = std::get_if<LinearModel>(&model.impl)) {
    (void)lin;
    return x.transpose() * upstream;
  }
  const auto& mlp = std::get<MlpModel>(model.impl);
  Eigen::MatrixXd pre = (x * mlp.w1.transpose()).rowwise() + mlp.b1.transpose();
  Eigen::MatrixXd act = pre.cwiseMax(0.0);
  Eigen::MatrixXd d_act = upstream * mlp.w2.transpose();  // n x hidden
  Eigen::MatrixXd d_pre =
      (pre.array() > 0.0).select(d_act, Eigen::MatrixXd::Zero(d_act.rows(), d_act.cols()));
  Eigen::MatrixXd g_w1 = d_pre.transpose() * x;
  Eigen::VectorXd g_b1 = d_pre.colwise().sum();
  Eigen::VectorXd g_w2 = act.transpose() * upstream;
  const double g_b2 = upstream.sum();

  Eigen::VectorXd out(static_cast<Eigen::Index>(model.param_count()));
  Eigen::Index pos = 0;
  for (Eigen::Index r = 0; r < g_w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < g_w1.cols(); ++c) out[pos++] = g_w1(r, c);
  }
  for (Eigen::Index r = 0; r < g_b1.size(); ++r) out[pos++] = g_b1[r];
  for (Eigen::Index r = 0; r < g_w2.size(); ++r) out[pos++] = g_w2[r];
  out[pos++] = g_b2;
  return out;
}

}  // namespace survdro
