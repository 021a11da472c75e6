#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "survdro/adam.hpp"
#include "survdro/cox_loss.hpp"
#include "survdro/dataset.hpp"
#include "survdro/dro.hpp"
#include "survdro/errors.hpp"
#include "survdro/metrics.hpp"
#include "survdro/model.hpp"

namespace survdro {

enum class TrainerKind {
  erm,
  dro,
  dro_split,
  dro_split_one_side,
  reg_individual,
  reg_group,
  reg_intersectional,
};

inline std::string to_string(TrainerKind k) {
  switch (k) {
    case TrainerKind::erm: return "erm";
    case TrainerKind::dro: return "dro";
    case TrainerKind::dro_split: return "dro_split";
    case TrainerKind::dro_split_one_side: return "dro_split_one_side";
    case TrainerKind::reg_individual: return "reg_individual";
    case TrainerKind::reg_group: return "reg_group";
    case TrainerKind::reg_intersectional: return "reg_intersectional";
  }
  return "erm";
}

inline TrainerKind trainer_kind_from_string(const std::string& s) {
  if (s == "erm") return TrainerKind::erm;
  if (s == "dro") return TrainerKind::dro;
  if (s == "dro_split") return TrainerKind::dro_split;
  if (s == "dro_split_one_side") return TrainerKind::dro_split_one_side;
  if (s == "reg_individual") return TrainerKind::reg_individual;
  if (s == "reg_group") return TrainerKind::reg_group;
  if (s == "reg_intersectional") return TrainerKind::reg_intersectional;
  throw config_error("unknown trainer kind '" + s + "'");
}

inline bool is_dro_kind(TrainerKind k) {
  return k == TrainerKind::dro || k == TrainerKind::dro_split ||
         k == TrainerKind::dro_split_one_side;
}

inline bool is_split_kind(TrainerKind k) {
  return k == TrainerKind::dro_split || k == TrainerKind::dro_split_one_side;
}

inline bool is_reg_kind(TrainerKind k) {
  return k == TrainerKind::reg_individual || k == TrainerKind::reg_group ||
         k == TrainerKind::reg_intersectional;
}

struct TrainConfig {
  TrainerKind trainer = TrainerKind::erm;
  ModelKind model = ModelKind::linear;
  std::size_t hidden_dim = 24;
  double alpha = 0.2;    // dro kinds; 1 reduces exactly to erm
  double lambda = 0.0;   // reg kinds
  double learning_rate = 0.01;
  std::size_t max_iterations = 500;
  std::size_t n1 = 0;    // split kinds; 0 means n/2
  std::uint64_t seed = 0;
  std::size_t patience = 0;  // early stopping on validation c-index; 0 = off
  double gamma = 0.01;       // individual-fairness scale in reg_individual
  std::string reg_attribute;                // reg_group target attribute
  std::vector<std::string> reg_attributes;  // reg_intersectional; empty = all
  bool uncensored_only_dro = false;  // restrict the DRO average to events
  double eta_tolerance = 1e-8;
  int max_bracket_expansions = 200;
};

struct TraceRow {
  std::size_t iteration = 0;
  double objective = 0.0;
  double mean_loss = 0.0;  // plain average Cox loss at the same parameters
  std::optional<double> eta;
  std::optional<double> eta_prime;
  std::optional<double> val_c_index;
};

struct TrainTrace {
  std::vector<TraceRow> rows;

  void to_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write '" + path + "'");
    out << "iter,objective,mean_loss,eta,eta_prime,val_c_index\n";
    char buf[64];
    auto fmt = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return std::string(buf);
    };
    for (const auto& r : rows) {
      out << r.iteration << ',' << fmt(r.objective) << ',' << fmt(r.mean_loss);
      out << ',' << (r.eta ? fmt(*r.eta) : "");
      out << ',' << (r.eta_prime ? fmt(*r.eta_prime) : "");
      out << ',' << (r.val_c_index ? fmt(*r.val_c_index) : "");
      out << '\n';
    }
  }
};

struct TrainResult {
  RiskModel model;
  TrainTrace trace;
};

// Raised when a run hits a non-finite objective or gradient; carries the
// trace accumulated so far so callers can persist it for diagnosis.
class training_aborted : public numeric_error {
 public:
  training_aborted(const std::string& message, TrainTrace partial)
      : numeric_error(message), trace(std::move(partial)) {}

  TrainTrace trace;
};

namespace detail {

struct RegPenalty {
  double value = 0.0;
  Eigen::VectorXd score_gradient;
};

// Value and score-space subgradient of the individual-fairness sum.
// Kink conventions: 0 at the ReLU kink and at equal hazards.
inline RegPenalty individual_penalty(const Eigen::VectorXd& scores,
                                     const Eigen::MatrixXd& x, double gamma) {
  RegPenalty out;
  out.score_gradient = Eigen::VectorXd::Zero(scores.size());
  const Eigen::VectorXd hazard = partial_hazards(scores);
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    for (Eigen::Index j = i + 1; j < scores.size(); ++j) {
      const double diff = hazard[i] - hazard[j];
      const double gap = std::abs(diff) - gamma * (x.row(i) - x.row(j)).norm();
      if (gap > 0.0 && diff != 0.0) {
        out.value += gap;
        const double s = diff > 0.0 ? 1.0 : -1.0;
        out.score_gradient[i] += s * hazard[i];
        out.score_gradient[j] -= s * hazard[j];
      }
    }
  }
  return out;
}

// Subgradient convention: the leftmost maximizing group in category order.
inline RegPenalty group_penalty(const Eigen::VectorXd& scores,
                                const GroupPartition& groups) {
  RegPenalty out;
  out.score_gradient = Eigen::VectorXd::Zero(scores.size());
  const Eigen::VectorXd hazard = partial_hazards(scores);
  const double population_mean = hazard.mean();
  const auto num_groups = static_cast<std::size_t>(groups.num_categories());
  std::vector<double> sums(num_groups, 0.0);
  std::vector<std::size_t> sizes(num_groups, 0);
  for (std::size_t i = 0; i < groups.categories.size(); ++i) {
    sums[static_cast<std::size_t>(groups.categories[i])] +=
        hazard[static_cast<Eigen::Index>(i)];
    sizes[static_cast<std::size_t>(groups.categories[i])] += 1;
  }
  int best = -1;
  double best_dev = -1.0;
  for (std::size_t g = 0; g < num_groups; ++g) {
    if (sizes[g] == 0) continue;
    const double dev =
        std::abs(sums[g] / static_cast<double>(sizes[g]) - population_mean);
    if (dev > best_dev) {
      best_dev = dev;
      best = static_cast<int>(g);
    }
  }
  if (best < 0) throw config_error("group penalty: all groups empty");
  out.value = best_dev;
  const double mean_best =
      sums[static_cast<std::size_t>(best)] /
      static_cast<double>(sizes[static_cast<std::size_t>(best)]);
  const double sign = mean_best > population_mean    ? 1.0
                      : mean_best < population_mean ? -1.0
                                                    : 0.0;
  const double n = static_cast<double>(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const bool inside = groups.categories[static_cast<std::size_t>(i)] == best;
    const double indicator =
        inside ? 1.0 / static_cast<double>(sizes[static_cast<std::size_t>(best)])
               : 0.0;
    out.score_gradient[i] = sign * hazard[i] * (indicator - 1.0 / n);
  }
  return out;
}

// Subgradient convention: the leftmost maximizing ordered subgroup pair in
// lexicographic category order.
inline RegPenalty intersectional_penalty(
    const Eigen::VectorXd& scores,
    const std::vector<GroupPartition>& partitions) {
  RegPenalty out;
  out.score_gradient = Eigen::VectorXd::Zero(scores.size());
  const Eigen::VectorXd hazard = partial_hazards(scores);
  const auto n = static_cast<std::size_t>(scores.size());

  struct Subgroup {
    std::vector<std::size_t> members;
    double mean = 0.0;
  };
  std::vector<Subgroup> subgroups;
  std::vector<int> tuple(partitions.size(), 0);
  bool running = true;
  while (running) {
    Subgroup sg;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      bool inside = true;
      for (std::size_t a = 0; a < partitions.size(); ++a) {
        inside = inside && partitions[a].categories[i] == tuple[a];
      }
      if (inside) {
        sg.members.push_back(i);
        sum += hazard[static_cast<Eigen::Index>(i)];
      }
    }
    if (!sg.members.empty()) {
      sg.mean = sum / static_cast<double>(sg.members.size());
      subgroups.push_back(std::move(sg));
    }
    running = false;
    for (std::size_t a = partitions.size(); a > 0;) {
      --a;
      if (++tuple[a] < partitions[a].num_categories()) {
        running = true;
        break;
      }
      tuple[a] = 0;
    }
  }
  if (subgroups.empty()) {
    throw config_error("intersectional penalty: all intersections empty");
  }
  std::size_t best_a = 0, best_b = 0;
  double best = -1.0;
  for (std::size_t a = 0; a < subgroups.size(); ++a) {
    for (std::size_t b = 0; b < subgroups.size(); ++b) {
      const double v = std::abs(std::log(subgroups[a].mean / subgroups[b].mean));
      if (v > best) {
        best = v;
        best_a = a;
        best_b = b;
      }
    }
  }
  out.value = best;
  const double ratio_log =
      std::log(subgroups[best_a].mean / subgroups[best_b].mean);
  const double sign = ratio_log > 0.0 ? 1.0 : ratio_log < 0.0 ? -1.0 : 0.0;
  const auto& ga = subgroups[best_a];
  const auto& gb = subgroups[best_b];
  for (auto i : ga.members) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.score_gradient[idx] +=
        sign * hazard[idx] / (static_cast<double>(ga.members.size()) * ga.mean);
  }
  for (auto i : gb.members) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.score_gradient[idx] -=
        sign * hazard[idx] / (static_cast<double>(gb.members.size()) * gb.mean);
  }
  return out;
}

// dL/dl_i of the dual objective at eta:
// C (l_i - eta)_+ / (m sqrt(mean (l - eta)_+^2)); zero when the radicand
// vanishes (every loss at or below eta).
inline Eigen::VectorXd dro_loss_weights(const Eigen::VectorXd& losses,
                                        double eta, double c) {
  const auto pos = (losses.array() - eta).max(0.0);
  const double m = static_cast<double>(losses.size());
  const double rms = std::sqrt(pos.square().sum() / m);
  if (rms == 0.0) return Eigen::VectorXd::Zero(losses.size());
  return (c / (m * rms)) * pos.matrix();
}

inline std::vector<std::size_t> events_of(const Dataset& ds,
                                          const std::vector<std::size_t>& ids) {
  std::vector<std::size_t> out;
  for (auto i : ids) {
    if (ds.events[i]) out.push_back(i);
  }
  if (out.empty()) {
    throw config_error("train: the uncensored-only restriction left no events");
  }
  return out;
}

inline void validate_train_config(const Dataset& ds, const TrainConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) {
    throw config_error("train: learning rate must be positive");
  }
  if (cfg.max_iterations < 1) {
    throw config_error("train: max_iterations must be at least 1");
  }
  if (ds.event_count() == 0) {
    throw config_error("train: need at least one uncensored record");
  }
  if (is_dro_kind(cfg.trainer) && !(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) {
    throw config_error("train: alpha must lie in (0, 1]");
  }
  if (is_split_kind(cfg.trainer) && cfg.n1 >= ds.size() && cfg.n1 != 0) {
    throw config_error("train: n1 must satisfy 0 < n1 < n");
  }
  if (is_reg_kind(cfg.trainer) && cfg.lambda < 0.0) {
    throw config_error("train: lambda must be nonnegative");
  }
  if (cfg.trainer == TrainerKind::reg_individual && ds.size() > 5000) {
    throw config_error(
        "train: the individual-fairness penalty is quadratic in n; batches "
        "are capped at 5000 records");
  }
  if (cfg.trainer == TrainerKind::reg_group) {
    if (cfg.reg_attribute.empty()) {
      throw config_error("train: reg_group needs a group attribute");
    }
    if (!ds.groups.count(cfg.reg_attribute)) {
      throw config_error("train: dataset has no group attribute '" +
                         cfg.reg_attribute + "'");
    }
  }
  if (cfg.trainer == TrainerKind::reg_intersectional) {
    if (cfg.reg_attributes.empty() && ds.groups.empty()) {
      throw config_error("train: reg_intersectional needs group attributes");
    }
    for (const auto& a : cfg.reg_attributes) {
      if (!ds.groups.count(a)) {
        throw config_error("train: dataset has no group attribute '" + a + "'");
      }
    }
  }
}

}  // namespace detail

// One evaluation of a trainer's objective and its gradient with respect to
// the flat parameter vector, at the model's current parameters. This is
// exactly what the training loop steps on each iteration. The dual
// variables are re-solved to optimality unless pinned via `frozen_eta` /
// `frozen_eta_prime` (gradient checks pin them: the parameter gradient is
// taken at fixed eta).
struct StepOptions {
  std::optional<double> frozen_eta;
  std::optional<double> frozen_eta_prime;
};

struct StepEval {
  double objective = 0.0;
  double mean_loss = 0.0;
  Eigen::VectorXd gradient;
  std::optional<double> eta;
  std::optional<double> eta_prime;
};

inline StepEval evaluate_step(const RiskModel& model, const Dataset& ds,
                              const TrainConfig& cfg,
                              const StepOptions& options = {}) {
  const Eigen::MatrixXd& x = ds.features;
  const Eigen::VectorXd& y = ds.durations;
  const auto& delta = ds.events;
  const auto n = ds.size();
  const Eigen::VectorXd scores = risk_scores(model, x);
  const double c_dual =
      is_dro_kind(cfg.trainer) ? dro_constants(cfg.alpha).c : 1.0;

  StepEval eval;
  Eigen::VectorXd upstream;

  if (is_split_kind(cfg.trainer)) {
    const std::size_t n1 = cfg.n1 == 0 ? n / 2 : cfg.n1;
    const auto halves = halve_indices(n, n1, cfg.seed);
    const auto d1_used = cfg.uncensored_only_dro
                             ? detail::events_of(ds, halves.d1)
                             : halves.d1;
    eval.mean_loss = average_cox_loss(scores, y, delta);

    const Eigen::VectorXd u = split_losses(scores, y, delta, d1_used, halves.d2);
    Eigen::VectorXd w1;
    if (c_dual == 1.0) {
      eval.objective = u.mean();
      w1 = Eigen::VectorXd::Constant(u.size(),
                                     1.0 / static_cast<double>(u.size()));
    } else {
      double eta;
      if (options.frozen_eta) {
        eta = *options.frozen_eta;
      } else {
        eta = solve_eta(u, c_dual, cfg.eta_tolerance, cfg.max_bracket_expansions)
                  .eta;
      }
      eval.objective = dro_loss(u, eta, c_dual);
      w1 = detail::dro_loss_weights(u, eta, c_dual);
      eval.eta = eta;
    }
    upstream = split_upstream_weighted(scores, y, delta, d1_used, halves.d2, w1);

    if (cfg.trainer == TrainerKind::dro_split) {
      const auto d2_used = cfg.uncensored_only_dro
                               ? detail::events_of(ds, halves.d2)
                               : halves.d2;
      const Eigen::VectorXd v = split_losses(scores, y, delta, d2_used, halves.d1);
      Eigen::VectorXd w2;
      if (c_dual == 1.0) {
        eval.objective += v.mean();
        w2 = Eigen::VectorXd::Constant(v.size(),
                                       1.0 / static_cast<double>(v.size()));
      } else {
        double eta_prime;
        if (options.frozen_eta_prime) {
          eta_prime = *options.frozen_eta_prime;
        } else {
          eta_prime = solve_eta(v, c_dual, cfg.eta_tolerance,
                                cfg.max_bracket_expansions)
                          .eta;
        }
        eval.objective += dro_loss(v, eta_prime, c_dual);
        w2 = detail::dro_loss_weights(v, eta_prime, c_dual);
        eval.eta_prime = eta_prime;
      }
      upstream += split_upstream_weighted(scores, y, delta, d2_used, halves.d1, w2);
    }
  } else {
    const Eigen::VectorXd losses = individual_cox_losses(scores, y, delta);
    eval.mean_loss = losses.mean();
    Eigen::VectorXd weights;
    if (cfg.trainer == TrainerKind::dro && c_dual > 1.0) {
      if (cfg.uncensored_only_dro) {
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        const auto event_ids = detail::events_of(ds, all);
        Eigen::VectorXd event_losses(static_cast<Eigen::Index>(event_ids.size()));
        for (std::size_t k = 0; k < event_ids.size(); ++k) {
          event_losses[static_cast<Eigen::Index>(k)] =
              losses[static_cast<Eigen::Index>(event_ids[k])];
        }
        const double eta =
            options.frozen_eta
                ? *options.frozen_eta
                : solve_eta(event_losses, c_dual, cfg.eta_tolerance,
                            cfg.max_bracket_expansions)
                      .eta;
        const Eigen::VectorXd w =
            detail::dro_loss_weights(event_losses, eta, c_dual);
        weights = Eigen::VectorXd::Zero(scores.size());
        for (std::size_t k = 0; k < event_ids.size(); ++k) {
          weights[static_cast<Eigen::Index>(event_ids[k])] =
              w[static_cast<Eigen::Index>(k)];
        }
        eval.objective = dro_loss(event_losses, eta, c_dual);
        eval.eta = eta;
      } else {
        const double eta = options.frozen_eta
                               ? *options.frozen_eta
                               : solve_eta(losses, c_dual, cfg.eta_tolerance,
                                           cfg.max_bracket_expansions)
                                     .eta;
        weights = detail::dro_loss_weights(losses, eta, c_dual);
        eval.objective = dro_loss(losses, eta, c_dual);
        eval.eta = eta;
      }
    } else {
      // ERM, the alpha = 1 reduction of DRO, and the Cox part of the
      // regularized trainers: uniform weights 1/n.
      weights =
          Eigen::VectorXd::Constant(scores.size(), 1.0 / static_cast<double>(n));
      eval.objective = eval.mean_loss;
    }
    upstream = cox_upstream_weighted(scores, y, delta, weights);

    if (is_reg_kind(cfg.trainer) && cfg.lambda > 0.0) {
      detail::RegPenalty penalty;
      if (cfg.trainer == TrainerKind::reg_individual) {
        penalty = detail::individual_penalty(scores, x, cfg.gamma);
      } else if (cfg.trainer == TrainerKind::reg_group) {
        penalty = detail::group_penalty(
            scores, GroupPartition::from_dataset(ds, cfg.reg_attribute));
      } else {
        std::vector<GroupPartition> partitions;
        if (cfg.reg_attributes.empty()) {
          for (const auto& [name, attr] : ds.groups) {
            partitions.push_back(GroupPartition::from_dataset(ds, name));
          }
        } else {
          for (const auto& name : cfg.reg_attributes) {
            partitions.push_back(GroupPartition::from_dataset(ds, name));
          }
        }
        penalty = detail::intersectional_penalty(scores, partitions);
      }
      eval.objective += cfg.lambda * penalty.value;
      upstream += cfg.lambda * penalty.score_gradient;
    }
  }

  eval.gradient = backward(model, x, upstream);
  return eval;
}

// One full-batch training run. Deterministic given (dataset, config,
// validation set). The DRO kinds re-solve their dual variable(s) every
// iteration and take one Adam step on the reweighted Cox gradient;
// alpha = 1 makes that path coincide with plain ERM bit for bit.
inline TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                         const Dataset* validation = nullptr) {
  detail::validate_train_config(ds, cfg);
  if (is_split_kind(cfg.trainer)) {
    // Resolve and validate the halving up front (throws on bad n1).
    halve_indices(ds.size(), cfg.n1 == 0 ? ds.size() / 2 : cfg.n1, cfg.seed);
  }

  RiskModel model = init_params(cfg.model, ds.dim(), cfg.hidden_dim, cfg.seed);
  Eigen::VectorXd params = model.flatten();
  AdamState adam(cfg.learning_rate, params.size());

  TrainTrace trace;
  trace.rows.reserve(cfg.max_iterations);
  double best_val = -std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
    StepEval eval = evaluate_step(model, ds, cfg);
    if (!std::isfinite(eval.objective)) {
      throw training_aborted("train: non-finite objective at iteration " +
                                 std::to_string(iter),
                             std::move(trace));
    }
    try {
      adam.update(params, eval.gradient);
    } catch (const numeric_error& e) {
      throw training_aborted(e.what(), std::move(trace));
    }
    model.set_from_flat(params);

    TraceRow row;
    row.iteration = iter;
    row.objective = eval.objective;
    row.mean_loss = eval.mean_loss;
    row.eta = eval.eta;
    row.eta_prime = eval.eta_prime;

    if (cfg.patience > 0 && validation != nullptr) {
      const Eigen::VectorXd val_scores =
          risk_scores(model, validation->features);
      const double v =
          c_index(val_scores, validation->durations, validation->events);
      row.val_c_index = v;
      trace.rows.push_back(row);
      if (v > best_val) {
        best_val = v;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    } else {
      trace.rows.push_back(row);
    }
  }
  return {std::move(model), std::move(trace)};
}

inline TrainResult train_erm(const Dataset& ds, TrainConfig cfg,
                             const Dataset* validation = nullptr) {
  cfg.trainer = TrainerKind::erm;
  return train(ds, cfg, validation);
}

inline TrainResult train_dro_cox(const Dataset& ds, TrainConfig cfg,
                                 const Dataset* validation = nullptr) {
  cfg.trainer = TrainerKind::dro;
  return train(ds, cfg, validation);
}

inline TrainResult train_dro_cox_split(const Dataset& ds, TrainConfig cfg,
                                       const Dataset* validation = nullptr) {
  cfg.trainer = TrainerKind::dro_split;
  return train(ds, cfg, validation);
}

inline TrainResult train_dro_cox_split_one_side(
    const Dataset& ds, TrainConfig cfg, const Dataset* validation = nullptr) {
  cfg.trainer = TrainerKind::dro_split_one_side;
  return train(ds, cfg, validation);
}

inline TrainResult train_fair_regularized(const Dataset& ds, TrainConfig cfg,
                                          const Dataset* validation = nullptr) {
  if (!is_reg_kind(cfg.trainer)) cfg.trainer = TrainerKind::reg_group;
  return train(ds, cfg, validation);
}

}  // namespace survdro
