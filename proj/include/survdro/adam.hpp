#pragma once

#include <Eigen/Core>
#include <cmath>

#include "survdro/errors.hpp"

namespace survdro {

// Standard Adam with bias-corrected moments. Owned and mutated by a single
// training loop.
struct AdamState {
  double learning_rate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  AdamState(double lr, Eigen::Index size)
      : learning_rate(lr),
        m(Eigen::VectorXd::Zero(size)),
        v(Eigen::VectorXd::Zero(size)) {}

  void update(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (params.size() != m.size() || grad.size() != m.size()) {
      throw shape_error("adam: parameter/gradient size mismatch");
    }
    if (!grad.allFinite()) {
      throw numeric_error("adam: non-finite gradient at step " +
                          std::to_string(step + 1));
    }
    ++step;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    params.array() -= learning_rate * (m.array() / corr1) /
                      ((v.array() / corr2).sqrt() + epsilon);
  }
};

}  // namespace survdro
