#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "survdro/cox_loss.hpp"
#include "survdro/dataset.hpp"
#include "survdro/errors.hpp"

namespace survdro {

// A discrete grouping of the evaluated records by one sensitive attribute.
struct GroupPartition {
  std::string name;
  std::vector<int> categories;       // per record
  std::vector<std::string> labels;   // label per category

  int num_categories() const { return static_cast<int>(labels.size()); }

  static GroupPartition from_dataset(const Dataset& ds,
                                     const std::string& attribute) {
    auto it = ds.groups.find(attribute);
    if (it == ds.groups.end()) {
      throw config_error("dataset has no group attribute '" + attribute + "'");
    }
    return {attribute, it->second.categories, it->second.labels};
  }
};

struct FairnessConfig {
  double gamma = 0.01;  // scale factor in the individual-fairness metric
  // Distance on feature vectors; empty means Euclidean.
  std::function<double(const Eigen::RowVectorXd&, const Eigen::RowVectorXd&)>
      distance;
};

// Partial hazards exp(f), evaluated with scalar std::exp so results match
// a plain loop bit for bit (Eigen's vectorized exp can differ by an ulp).
inline Eigen::VectorXd partial_hazards(const Eigen::VectorXd& scores) {
  Eigen::VectorXd out(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i) out[i] = std::exp(scores[i]);
  return out;
}

namespace detail {

struct ConcordanceCounts {
  std::vector<double> numerator;
  std::vector<double> denominator;
};

// Pair loop shared by the concordance fraction and the c-index. For every
// ordered pair (i, j), i != j:
//  - the pair is skipped when the earlier observation is censored (or both
//    are censored at a tied time): nothing about the order of the true
//    event times is known then;
//  - otherwise patient i's group denominator grows by one and the
//    numerator gains 1, 0.5 or 0 depending on how the risk scores order
//    against the observed times, ties in score counting one half. Tied
//    times with both events reward equal scores with a full point; the
//    remaining tied-time cases with exactly one event give the full point
//    only to the order consistent with the censoring, and one half
//    otherwise.
inline ConcordanceCounts concordance_counts(
    const Eigen::VectorXd& scores, const Eigen::VectorXd& durations,
    const std::vector<std::uint8_t>& events, const std::vector<int>& group_of,
    int num_groups) {
  const auto n = static_cast<std::size_t>(scores.size());
  ConcordanceCounts counts;
  counts.numerator.assign(static_cast<std::size_t>(num_groups), 0.0);
  counts.denominator.assign(static_cast<std::size_t>(num_groups), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto gi = static_cast<std::size_t>(group_of[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto jj = static_cast<Eigen::Index>(j);
      const double yi = durations[ii], yj = durations[jj];
      const bool di = events[i] != 0, dj = events[j] != 0;
      if ((yi < yj && !di) || (yj < yi && !dj) || (yi == yj && !di && !dj)) {
        continue;
      }
      counts.denominator[gi] += 1.0;
      const double fi = scores[ii], fj = scores[jj];
      if (yi < yj) {
        if (fi > fj) {
          counts.numerator[gi] += 1.0;
        } else if (fi == fj) {
          counts.numerator[gi] += 0.5;
        }
      } else if (yi > yj) {
        if (fi < fj) {
          counts.numerator[gi] += 1.0;
        } else if (fi == fj) {
          counts.numerator[gi] += 0.5;
        }
      } else {
        if (di && dj) {
          counts.numerator[gi] += fi == fj ? 1.0 : 0.5;
        } else if (!di && dj && fi < fj) {
          counts.numerator[gi] += 1.0;
        } else if (di && !dj && fi > fj) {
          counts.numerator[gi] += 1.0;
        } else {
          counts.numerator[gi] += 0.5;
        }
      }
    }
  }
  return counts;
}

}  // namespace detail

// Fraction of comparable ordered pairs ranked correctly; the concordance
// fraction of a single all-inclusive group.
inline double c_index(const Eigen::VectorXd& scores,
                      const Eigen::VectorXd& durations,
                      const std::vector<std::uint8_t>& events) {
  detail::check_loss_inputs(scores, durations, events);
  std::vector<int> one_group(static_cast<std::size_t>(scores.size()), 0);
  const auto counts =
      detail::concordance_counts(scores, durations, events, one_group, 1);
  if (counts.denominator[0] == 0.0) {
    throw undefined_metric_error("c_index: no comparable pairs");
  }
  return counts.numerator[0] / counts.denominator[0];
}

// Worst-case gap between per-group concordance fractions, in percent.
inline double concordance_imparity(const Eigen::VectorXd& scores,
                                   const Eigen::VectorXd& durations,
                                   const std::vector<std::uint8_t>& events,
                                   const GroupPartition& groups) {
  detail::check_loss_inputs(scores, durations, events);
  if (groups.categories.size() != static_cast<std::size_t>(scores.size())) {
    throw shape_error("concordance_imparity: partition size mismatch");
  }
  if (groups.num_categories() < 2) {
    throw config_error("concordance_imparity: need at least two groups");
  }
  const auto counts = detail::concordance_counts(
      scores, durations, events, groups.categories, groups.num_categories());
  std::vector<double> cf(counts.numerator.size());
  for (std::size_t g = 0; g < cf.size(); ++g) {
    if (counts.denominator[g] == 0.0) {
      throw undefined_metric_error(
          "concordance_imparity: group '" + groups.labels[g] +
          "' has no comparable pairs");
    }
    cf[g] = counts.numerator[g] / counts.denominator[g];
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < cf.size(); ++a) {
    for (std::size_t b = 0; b < cf.size(); ++b) {
      if (a != b) worst = std::max(worst, std::abs(cf[a] - cf[b]));
    }
  }
  return 100.0 * worst;
}

// Sum over unordered pairs of [ |h(x_i) - h(x_j)| - gamma * ||x_i - x_j|| ]_+
// evaluated on partial hazards h = exp(f). Zero iff the partial hazard is
// gamma-Lipschitz across the evaluated points.
inline double fairness_individual(const Eigen::VectorXd& scores,
                                  const Eigen::MatrixXd& x,
                                  const FairnessConfig& cfg = {}) {
  if (scores.size() != x.rows()) {
    throw shape_error("fairness_individual: scores/features size mismatch");
  }
  if (scores.size() < 2) {
    throw config_error("fairness_individual: need at least two records");
  }
  const Eigen::VectorXd hazard = partial_hazards(scores);
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    for (Eigen::Index j = i + 1; j < scores.size(); ++j) {
      const double dist = cfg.distance
                              ? cfg.distance(x.row(i), x.row(j))
                              : (x.row(i) - x.row(j)).norm();
      const double gap = std::abs(hazard[i] - hazard[j]) - cfg.gamma * dist;
      if (gap > 0.0) total += gap;
    }
  }
  return total;
}

// Largest deviation of a group's mean partial hazard from the population
// mean partial hazard.
inline double fairness_group(const Eigen::VectorXd& scores,
                             const GroupPartition& groups) {
  if (groups.categories.size() != static_cast<std::size_t>(scores.size())) {
    throw shape_error("fairness_group: partition size mismatch");
  }
  if (groups.num_categories() < 1) {
    throw config_error("fairness_group: empty partition");
  }
  const Eigen::VectorXd hazard = partial_hazards(scores);
  const double population_mean = hazard.mean();
  std::vector<double> sums(static_cast<std::size_t>(groups.num_categories()), 0.0);
  std::vector<std::size_t> sizes(sums.size(), 0);
  for (std::size_t i = 0; i < groups.categories.size(); ++i) {
    sums[static_cast<std::size_t>(groups.categories[i])] +=
        hazard[static_cast<Eigen::Index>(i)];
    sizes[static_cast<std::size_t>(groups.categories[i])] += 1;
  }
  double worst = 0.0;
  for (std::size_t g = 0; g < sums.size(); ++g) {
    if (sizes[g] == 0) {
      throw config_error("fairness_group: group '" + groups.labels[g] +
                         "' is empty");
    }
    worst = std::max(
        worst, std::abs(sums[g] / static_cast<double>(sizes[g]) - population_mean));
  }
  return worst;
}

// Worst-case absolute log ratio of mean partial hazards between two
// nonempty intersectional subgroups (one category picked from each
// partition). Empty intersections are skipped.
inline double fairness_intersectional(const Eigen::VectorXd& scores,
                                      const std::vector<GroupPartition>& partitions) {
  if (partitions.empty()) {
    throw config_error("fairness_intersectional: no partitions given");
  }
  const auto n = static_cast<std::size_t>(scores.size());
  for (const auto& p : partitions) {
    if (p.categories.size() != n) {
      throw shape_error("fairness_intersectional: partition size mismatch");
    }
  }
  const Eigen::VectorXd hazard = partial_hazards(scores);

  // Enumerate category tuples lexicographically; record the mean hazard of
  // each nonempty intersection.
  std::vector<int> tuple(partitions.size(), 0);
  std::vector<double> means;
  bool running = true;
  while (running) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      bool inside = true;
      for (std::size_t a = 0; a < partitions.size(); ++a) {
        inside = inside && partitions[a].categories[i] == tuple[a];
      }
      if (inside) {
        sum += hazard[static_cast<Eigen::Index>(i)];
        ++count;
      }
    }
    if (count > 0) means.push_back(sum / static_cast<double>(count));
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
  if (means.empty()) {
    throw config_error("fairness_intersectional: all intersections empty");
  }
  double worst = 0.0;
  for (double a : means) {
    for (double b : means) {
      worst = std::max(worst, std::abs(std::log(a / b)));
    }
  }
  return worst;
}

inline double fairness_average(double f_i, double f_g, double f_cap) {
  return (f_i + f_g + f_cap) / 3.0;
}

// Right-continuous nonincreasing step function equal to 1 before the first
// jump time.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(Eigen::VectorXd times, Eigen::VectorXd values)
      : times_(std::move(times)), values_(std::move(values)) {}

  double operator()(double t) const {
    const double* begin = times_.data();
    const double* end = begin + times_.size();
    const auto k = std::upper_bound(begin, end, t) - begin;
    return k == 0 ? 1.0 : values_[k - 1];
  }

  // Left limit: the value just before t.
  double left_limit(double t) const {
    const double* begin = times_.data();
    const double* end = begin + times_.size();
    const auto k = std::lower_bound(begin, end, t) - begin;
    return k == 0 ? 1.0 : values_[k - 1];
  }

 private:
  Eigen::VectorXd times_;
  Eigen::VectorXd values_;
};

// Kaplan-Meier estimate of the censoring survival function: the "events"
// of this estimator are the censorings (delta = 0); everyone with Y >= t
// is at risk at t.
inline StepFunction km_censoring(const Eigen::VectorXd& durations,
                                 const std::vector<std::uint8_t>& events) {
  if (durations.size() == 0) throw config_error("km_censoring: empty input");
  const auto n = static_cast<std::size_t>(durations.size());
  const auto order = detail::order_by_duration(durations, /*descending=*/false);
  std::vector<double> times, values;
  double surv = 1.0;
  std::size_t i = 0;
  std::size_t at_risk = n;
  while (i < n) {
    std::size_t j = i;
    const double t = durations[static_cast<Eigen::Index>(order[i])];
    std::size_t censorings = 0;
    while (j < n && durations[static_cast<Eigen::Index>(order[j])] == t) {
      censorings += events[order[j]] ? 0u : 1u;
      ++j;
    }
    if (censorings > 0) {
      surv *= 1.0 - static_cast<double>(censorings) / static_cast<double>(at_risk);
      times.push_back(t);
      values.push_back(surv);
    }
    at_risk -= j - i;
    i = j;
  }
  Eigen::VectorXd tv = Eigen::Map<Eigen::VectorXd>(times.data(),
                                                   static_cast<Eigen::Index>(times.size()));
  Eigen::VectorXd vv = Eigen::Map<Eigen::VectorXd>(values.data(),
                                                   static_cast<Eigen::Index>(values.size()));
  return StepFunction(tv, vv);
}

// Kaplan-Meier estimate of the event survival function (used for the
// grid-averaging weights of the time-dependent AUC).
inline StepFunction km_event(const Eigen::VectorXd& durations,
                             const std::vector<std::uint8_t>& events) {
  std::vector<std::uint8_t> flipped(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) flipped[i] = events[i] ? 0 : 1;
  return km_censoring(durations, flipped);
}

// Default evaluation grid: equally spaced points between the 5th and 95th
// percentile (nearest rank) of observed event times.
inline Eigen::VectorXd default_time_grid(const Eigen::VectorXd& durations,
                                         const std::vector<std::uint8_t>& events,
                                         std::size_t count = 100) {
  std::vector<double> event_times;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i]) event_times.push_back(durations[static_cast<Eigen::Index>(i)]);
  }
  if (event_times.empty()) {
    throw undefined_metric_error("time grid: no observed events");
  }
  std::sort(event_times.begin(), event_times.end());
  auto percentile = [&](double p) {
    const auto rank = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(event_times.size())));
    return event_times[std::min(event_times.size() - 1, rank == 0 ? 0 : rank - 1)];
  };
  const double lo = percentile(0.05);
  const double hi = percentile(0.95);
  Eigen::VectorXd grid(static_cast<Eigen::Index>(count));
  if (count == 1 || hi == lo) {
    grid.setConstant(lo);
    grid.conservativeResize(1);
    return grid;
  }
  for (std::size_t k = 0; k < count; ++k) {
    grid[static_cast<Eigen::Index>(k)] =
        lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return grid;
}

// IPCW Brier score at time t, averaged over the grid by the trapezoidal
// rule. `survival(i, t)` supplies the model's survival estimate for
// record i. Records whose IPCW weight denominator falls below 1e-8 are
// dropped from that grid point's average, with the count adjusted.
template <typename SurvivalFn>
inline double integrated_brier(SurvivalFn&& survival,
                               const Eigen::VectorXd& durations,
                               const std::vector<std::uint8_t>& events,
                               const Eigen::VectorXd& grid) {
  if (grid.size() == 0) throw config_error("integrated_brier: empty grid");
  const auto censor = km_censoring(durations, events);
  const auto n = static_cast<std::size_t>(durations.size());
  constexpr double kMinWeight = 1e-8;

  Eigen::VectorXd bs(grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    const double g_t = censor(t);
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = durations[static_cast<Eigen::Index>(i)];
      const double s = survival(i, t);
      if (yi <= t && events[i]) {
        const double g = censor.left_limit(yi);
        if (g < kMinWeight) continue;
        sum += s * s / g;
        ++used;
      } else if (yi > t) {
        if (g_t < kMinWeight) continue;
        sum += (1.0 - s) * (1.0 - s) / g_t;
        ++used;
      } else {
        ++used;  // censored at or before t contributes zero but counts
      }
    }
    bs[k] = used == 0 ? 0.0 : sum / static_cast<double>(used);
  }
  if (grid.size() == 1) return bs[0];
  double integral = 0.0;
  for (Eigen::Index k = 0; k + 1 < grid.size(); ++k) {
    integral += 0.5 * (bs[k] + bs[k + 1]) * (grid[k + 1] - grid[k]);
  }
  return integral / (grid[grid.size() - 1] - grid[0]);
}

// Cumulative/dynamic time-dependent AUC with IPCW case weights
// 1 / G(Y_i^-), averaged over the grid with weights proportional to the
// Kaplan-Meier event-survival mass in each grid interval (plain mean when
// no mass falls inside the grid). Grid points without at least one case
// and one control are skipped; if none are valid the metric is undefined.
inline double time_dependent_auc(const Eigen::VectorXd& scores,
                                 const Eigen::VectorXd& durations,
                                 const std::vector<std::uint8_t>& events,
                                 const Eigen::VectorXd& grid) {
  detail::check_loss_inputs(scores, durations, events);
  if (grid.size() == 0) throw config_error("time_dependent_auc: empty grid");
  const auto censor = km_censoring(durations, events);
  const auto surv_event = km_event(durations, events);
  const auto n = static_cast<std::size_t>(durations.size());

  std::vector<double> auc_values, mass_weights;
  double prev_surv = 1.0;
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    std::vector<std::size_t> cases, controls;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = durations[static_cast<Eigen::Index>(i)];
      if (yi <= t && events[i]) {
        cases.push_back(i);
      } else if (yi > t) {
        controls.push_back(i);
      }
    }
    const double s_t = surv_event(t);
    const double mass = std::max(prev_surv - s_t, 0.0);
    prev_surv = s_t;
    if (cases.empty() || controls.empty()) continue;
    double num = 0.0, case_mass = 0.0;
    for (auto i : cases) {
      const double g = censor.left_limit(durations[static_cast<Eigen::Index>(i)]);
      if (g < 1e-8) continue;
      const double w = 1.0 / g;
      case_mass += w;
      const double fi = scores[static_cast<Eigen::Index>(i)];
      double correct = 0.0;
      for (auto j : controls) {
        const double fj = scores[static_cast<Eigen::Index>(j)];
        if (fi > fj) {
          correct += 1.0;
        } else if (fi == fj) {
          correct += 0.5;
        }
      }
      num += w * correct;
    }
    if (case_mass == 0.0) continue;
    auc_values.push_back(num / (case_mass * static_cast<double>(controls.size())));
    mass_weights.push_back(mass);
  }
  if (auc_values.empty()) {
    throw undefined_metric_error("time_dependent_auc: no valid grid point");
  }
  double total_mass = 0.0;
  for (double w : mass_weights) total_mass += w;
  double acc = 0.0;
  if (total_mass > 0.0) {
    for (std::size_t k = 0; k < auc_values.size(); ++k) {
      acc += auc_values[k] * mass_weights[k] / total_mass;
    }
    return acc;
  }
  for (double a : auc_values) acc += a;
  return acc / static_cast<double>(auc_values.size());
}

// Test-set log partial likelihood: the negative mean Cox loss (<= 0).
inline double test_lpl(const Eigen::VectorXd& scores,
                       const Eigen::VectorXd& durations,
                       const std::vector<std::uint8_t>& events) {
  return -average_cox_loss(scores, durations, events);
}

}  // namespace survdro
