#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "survdro/dataset.hpp"
#include "survdro/errors.hpp"
#include "survdro/rng.hpp"

namespace survdro {

// Latent-subpopulation generator: each record draws a group k from the
// mixture weights, features from a standard normal, an event time from an
// exponential with rate exp(theta_k . x) and an independent exponential
// censoring time. Exponential event times make the proportional-hazards
// factorization hold exactly with a linear log partial hazard.
struct SyntheticConfig {
  std::size_t n = 0;
  std::size_t num_groups = 1;
  std::vector<double> mixture_weights;        // size num_groups, sums to 1
  std::vector<Eigen::VectorXd> coefficients;  // one vector of size feature_dim per group
  std::size_t feature_dim = 0;
  double censoring_rate = 0.0;  // 0 disables censoring entirely
  std::uint64_t seed = 0;

  void validate() const {
    if (n == 0) throw config_error("synthetic: n must be positive");
    if (num_groups == 0) throw config_error("synthetic: need at least one group");
    if (feature_dim == 0) throw config_error("synthetic: feature_dim must be positive");
    if (mixture_weights.size() != num_groups) {
      throw config_error("synthetic: mixture weights must have one entry per group");
    }
    double total = 0.0;
    for (double w : mixture_weights) {
      if (!(w > 0.0 && w <= 1.0)) {
        throw config_error("synthetic: mixture weights must lie in (0,1]");
      }
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw config_error("synthetic: mixture weights must sum to 1");
    }
    if (coefficients.size() != num_groups) {
      throw config_error("synthetic: need one coefficient vector per group");
    }
    for (const auto& theta : coefficients) {
      if (static_cast<std::size_t>(theta.size()) != feature_dim) {
        throw config_error("synthetic: coefficient dimension mismatch");
      }
    }
    if (!(censoring_rate >= 0.0)) {
      throw config_error("synthetic: censoring rate must be nonnegative");
    }
  }
};

// Deterministic for a fixed seed. Per record the draw order is: group
// index, feature_dim normals, the event-time uniform, then (only when
// censoring_rate > 0) the censoring uniform. True group labels are kept
// as the "latent_group" attribute.
inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(cfg.n),
                     static_cast<Eigen::Index>(cfg.feature_dim));
  ds.durations.resize(static_cast<Eigen::Index>(cfg.n));
  ds.events.resize(cfg.n);
  for (std::size_t j = 0; j < cfg.feature_dim; ++j) {
    ds.feature_names.push_back("x" + std::to_string(j + 1));
  }
  GroupAttribute latent;
  latent.categories.resize(cfg.n);
  for (std::size_t k = 0; k < cfg.num_groups; ++k) {
    latent.labels.push_back(std::to_string(k));
  }

  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int k = rng.categorical(cfg.mixture_weights);
    Eigen::VectorXd x(cfg.feature_dim);
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = rng.normal();
    const double event_rate =
        std::exp(cfg.coefficients[static_cast<std::size_t>(k)].dot(x));
    const double t_event = rng.exponential(event_rate);
    const double t_censor = cfg.censoring_rate > 0.0
                                ? rng.exponential(cfg.censoring_rate)
                                : std::numeric_limits<double>::infinity();
    ds.features.row(static_cast<Eigen::Index>(i)) = x.transpose();
    if (t_event <= t_censor) {
      ds.durations[static_cast<Eigen::Index>(i)] = t_event;
      ds.events[i] = 1;
    } else {
      ds.durations[static_cast<Eigen::Index>(i)] = t_censor;
      ds.events[i] = 0;
    }
    latent.categories[i] = k;
  }
  ds.groups.emplace("latent_group", std::move(latent));
  ds.validate();
  return ds;
}

}  // namespace survdro
