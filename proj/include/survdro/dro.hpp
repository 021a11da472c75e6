#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "survdro/errors.hpp"

namespace survdro {

// Constants of the chi-square ball for a minimum subpopulation
// probability alpha: radius r_max = (1/alpha - 1)^2 and the dual scale
// C = sqrt(2 r_max + 1). alpha = 1 degenerates to the empirical
// distribution itself (r_max = 0, C = 1).
struct DroConstants {
  double r_max;
  double c;
};

inline DroConstants dro_constants(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw config_error("dro: alpha must lie in (0, 1]");
  }
  const double r = (1.0 / alpha - 1.0) * (1.0 / alpha - 1.0);
  return {r, std::sqrt(2.0 * r + 1.0)};
}

struct DroConfig {
  double alpha = 1.0;
  double eta_tolerance = 1e-8;       // scaled by max(1, loss range)
  int max_bracket_expansions = 200;

  double r_max() const { return dro_constants(alpha).r_max; }
  double c() const { return dro_constants(alpha).c; }
};

// Worst-case-average dual value at threshold eta:
//   C * sqrt(mean_i [l_i - eta]_+^2) + eta.
// The average runs over every entry of `losses`, censored zeros included.
inline double dro_loss(const Eigen::VectorXd& losses, double eta, double c) {
  if (losses.size() == 0) throw config_error("dro_loss: empty loss vector");
  const double mean_sq =
      (losses.array() - eta).max(0.0).square().sum() /
      static_cast<double>(losses.size());
  return c * std::sqrt(mean_sq) + eta;
}

struct EtaSolution {
  double eta = 0.0;
  double objective = 0.0;
  // False only for C = 1, where the infimum is approached as eta -> -inf
  // and equals the plain mean loss.
  bool attained = true;
};

namespace detail {

// d/d eta of dro_loss: 1 - C * mean[(l-eta)_+] / sqrt(mean[(l-eta)_+^2]).
// Nondecreasing in eta (the objective is convex); callers only evaluate
// it below the maximum loss, where the denominator is positive.
inline double eta_subgradient(const Eigen::VectorXd& losses, double eta,
                              double c) {
  const auto pos = (losses.array() - eta).max(0.0);
  const double n = static_cast<double>(losses.size());
  const double m1 = pos.sum() / n;
  const double m2 = pos.square().sum() / n;
  return 1.0 - c * m1 / std::sqrt(m2);
}

}  // namespace detail

// Minimizes dro_loss over eta by bisection on the subgradient sign.
// The minimizer lies in (-inf, max loss]; the bracket starts at
// [min loss, max loss] and the lower end expands geometrically until the
// subgradient there is negative. The kink at eta = max loss (where the
// left derivative can stay negative, e.g. all losses equal) is handled by
// the upper end never moving.
inline EtaSolution solve_eta(const Eigen::VectorXd& losses, double c,
                             double tolerance = 1e-8,
                             int max_bracket_expansions = 200) {
  if (losses.size() == 0) throw config_error("solve_eta: empty loss vector");
  if (c < 1.0) throw config_error("solve_eta: C must be at least 1");
  const double mean = losses.mean();
  if (c == 1.0) {
    return {-std::numeric_limits<double>::infinity(), mean, false};
  }
  const double hi_loss = losses.maxCoeff();
  const double lo_loss = losses.minCoeff();
  const double scale = std::max(1.0, hi_loss - lo_loss);

  double hi = hi_loss;
  double lo = lo_loss < hi_loss ? lo_loss : hi_loss - scale;
  int expansions = 0;
  double step = scale;
  while (detail::eta_subgradient(losses, lo, c) >= 0.0) {
    lo -= step;
    step *= 2.0;
    if (++expansions > max_bracket_expansions) {
      throw solver_error("solve_eta: bracket expansion budget exhausted");
    }
  }

  const double threshold = tolerance * scale;
  while (hi - lo > threshold) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
    if (detail::eta_subgradient(losses, mid, c) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double eta = 0.5 * (lo + hi);
  return {eta, dro_loss(losses, eta, c), true};
}

inline EtaSolution solve_eta(const Eigen::VectorXd& losses,
                             const DroConfig& cfg) {
  return solve_eta(losses, cfg.c(), cfg.eta_tolerance,
                   cfg.max_bracket_expansions);
}

// Split-variant dual value: dro_loss over the D1-restricted split-loss
// vector.
inline double split_dro_loss(const Eigen::VectorXd& d1_losses, double eta,
                             double c) {
  if (d1_losses.size() == 0) throw config_error("split_dro_loss: empty D1");
  return dro_loss(d1_losses, eta, c);
}

// Diagnostic worst-case reweighting dQ/dP proportional to (l - eta*)_+:
// records below eta* get zero weight, the rest split the mass in
// proportion to their excess loss.
inline Eigen::VectorXd worst_case_weights(const Eigen::VectorXd& losses,
                                          double eta_star) {
  if (losses.size() == 0) {
    throw config_error("worst_case_weights: empty loss vector");
  }
  Eigen::VectorXd pos = (losses.array() - eta_star).max(0.0);
  const double total = pos.sum();
  if (!(total > 0.0)) {
    throw numeric_error("worst_case_weights: no loss exceeds eta*");
  }
  return pos / total;
}

}  // namespace survdro
