#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "survdro/errors.hpp"

namespace survdro {

// Streaming log-sum-exp: push values one at a time, query
// log(sum_k exp(v_k)) of everything pushed so far. Internally keeps the
// running maximum and the sum rescaled by it, so the result never
// overflows and a singleton query returns its value exactly.
class LogSumExp {
 public:
  void push(double x) {
    if (count_ == 0) {
      max_ = x;
      sum_ = 1.0;
    } else if (x <= max_) {
      sum_ += std::exp(x - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - x) + 1.0;
      max_ = x;
    }
    ++count_;
  }

  bool empty() const { return count_ == 0; }
  std::size_t count() const { return count_; }
  double max_value() const { return max_; }
  double scaled_sum() const { return sum_; }  // total = exp(max) * scaled_sum

  double value() const {
    if (count_ == 0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

  double value_with(double x) const {
    LogSumExp copy = *this;
    copy.push(x);
    return copy.value();
  }

 private:
  double max_ = 0.0;
  double sum_ = 0.0;
  std::size_t count_ = 0;
};

namespace detail {

// Indices ordered by duration; ties keep index order so results are
// deterministic.
inline std::vector<std::size_t> order_by_duration(const Eigen::VectorXd& y,
                                                  bool descending) {
  std::vector<std::size_t> order(static_cast<std::size_t>(y.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ya = y[static_cast<Eigen::Index>(a)];
    const double yb = y[static_cast<Eigen::Index>(b)];
    if (ya != yb) return descending ? ya > yb : ya < yb;
    return a < b;
  });
  return order;
}

inline void check_loss_inputs(const Eigen::VectorXd& scores,
                              const Eigen::VectorXd& durations,
                              const std::vector<std::uint8_t>& events) {
  if (scores.size() == 0) throw config_error("cox loss: empty input");
  if (scores.size() != durations.size() ||
      static_cast<std::size_t>(scores.size()) != events.size()) {
    throw shape_error("cox loss: scores/durations/events sizes disagree");
  }
}

}  // namespace detail

// Per-record negative log partial likelihood terms
//   l_i = -delta_i * [f_i - log sum_{j : Y_j >= Y_i} exp(f_j)],
// Breslow tie convention (the risk set includes every record with
// Y_j == Y_i, in particular i itself, so l_i >= 0). Computed by a single
// descending sweep with a running log-sum-exp, O(n log n).
inline Eigen::VectorXd individual_cox_losses(
    const Eigen::VectorXd& scores, const Eigen::VectorXd& durations,
    const std::vector<std::uint8_t>& events) {
  detail::check_loss_inputs(scores, durations, events);
  const auto n = static_cast<std::size_t>(scores.size());
  const auto order = detail::order_by_duration(durations, /*descending=*/true);
  Eigen::VectorXd losses = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  LogSumExp lse;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    const double t = durations[static_cast<Eigen::Index>(order[i])];
    while (j < n && durations[static_cast<Eigen::Index>(order[j])] == t) {
      lse.push(scores[static_cast<Eigen::Index>(order[j])]);
      ++j;
    }
    const double log_denom = lse.value();
    for (std::size_t k = i; k < j; ++k) {
      const auto idx = static_cast<Eigen::Index>(order[k]);
      if (events[order[k]]) losses[idx] = log_denom - scores[idx];
    }
    i = j;
  }
  return losses;
}

inline double average_cox_loss(const Eigen::VectorXd& scores,
                               const Eigen::VectorXd& durations,
                               const std::vector<std::uint8_t>& events) {
  return individual_cox_losses(scores, durations, events).mean();
}

// Gradient of sum_i w_i * l_i with respect to the score vector:
//   g_j = -w_j delta_j
//         + exp(f_j) * sum_{events k : Y_k <= Y_j} w_k / S(Y_k),
// where S(t) = sum_{Y_j >= t} exp(f_j). Two sweeps: a descending one for
// the per-event log denominators, an ascending one accumulating the
// event terms log(w_k) - log S(Y_k) in a running log-sum-exp. Every
// exponential taken is <= sum of weights, so the result stays finite for
// any score scale.
inline Eigen::VectorXd cox_upstream_weighted(
    const Eigen::VectorXd& scores, const Eigen::VectorXd& durations,
    const std::vector<std::uint8_t>& events, const Eigen::VectorXd& weights) {
  detail::check_loss_inputs(scores, durations, events);
  if (weights.size() != scores.size()) {
    throw shape_error("cox upstream: weight length mismatch");
  }
  const auto n = static_cast<std::size_t>(scores.size());

  Eigen::VectorXd log_denom(static_cast<Eigen::Index>(n));
  {
    const auto order = detail::order_by_duration(durations, /*descending=*/true);
    LogSumExp lse;
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      const double t = durations[static_cast<Eigen::Index>(order[i])];
      while (j < n && durations[static_cast<Eigen::Index>(order[j])] == t) {
        lse.push(scores[static_cast<Eigen::Index>(order[j])]);
        ++j;
      }
      for (std::size_t k = i; k < j; ++k) {
        log_denom[static_cast<Eigen::Index>(order[k])] = lse.value();
      }
      i = j;
    }
  }

  Eigen::VectorXd grad(static_cast<Eigen::Index>(n));
  for (std::size_t idx = 0; idx < n; ++idx) {
    grad[static_cast<Eigen::Index>(idx)] =
        events[idx] ? -weights[static_cast<Eigen::Index>(idx)] : 0.0;
  }
  const auto order = detail::order_by_duration(durations, /*descending=*/false);
  LogSumExp prefix;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    const double t = durations[static_cast<Eigen::Index>(order[i])];
    while (j < n && durations[static_cast<Eigen::Index>(order[j])] == t) ++j;
    for (std::size_t k = i; k < j; ++k) {
      const auto idx = static_cast<Eigen::Index>(order[k]);
      if (events[order[k]] && weights[idx] > 0.0) {
        prefix.push(std::log(weights[idx]) - log_denom[idx]);
      }
    }
    if (!prefix.empty()) {
      const double p = prefix.value();
      for (std::size_t k = i; k < j; ++k) {
        const auto idx = static_cast<Eigen::Index>(order[k]);
        grad[idx] += std::exp(scores[idx] + p);
      }
    }
    i = j;
  }
  return grad;
}

// Gradient of sum_i l_i with respect to the scores (unit weights).
inline Eigen::VectorXd cox_loss_upstream(const Eigen::VectorXd& scores,
                                         const Eigen::VectorXd& durations,
                                         const std::vector<std::uint8_t>& events) {
  return cox_upstream_weighted(scores, durations, events,
                               Eigen::VectorXd::Ones(scores.size()));
}

// Sample-split individual loss for record i against the fixed reference
// set D2:
//   -delta_i * [f_i - log(exp(f_i) + sum_{j in D2 : Y_j >= Y_i} exp(f_j))].
// The self term keeps the loss nonnegative even when D2 contributes
// nothing.
inline double split_individual_loss(std::size_t i, const Eigen::VectorXd& scores,
                                    const Eigen::VectorXd& durations,
                                    const std::vector<std::uint8_t>& events,
                                    const std::vector<std::size_t>& d2) {
  detail::check_loss_inputs(scores, durations, events);
  for (auto j : d2) {
    if (j == i) {
      throw config_error("split_individual_loss: record belongs to D2");
    }
  }
  if (!events[i]) return 0.0;
  LogSumExp lse;
  lse.push(scores[static_cast<Eigen::Index>(i)]);
  for (auto j : d2) {
    if (durations[static_cast<Eigen::Index>(j)] >=
        durations[static_cast<Eigen::Index>(i)]) {
      lse.push(scores[static_cast<Eigen::Index>(j)]);
    }
  }
  return lse.value() - scores[static_cast<Eigen::Index>(i)];
}

// All split losses for D1 at once (result aligned with the order of
// `d1`). A shared descending sweep over D2 makes this O((|D1|+|D2|) log n).
inline Eigen::VectorXd split_losses(const Eigen::VectorXd& scores,
                                    const Eigen::VectorXd& durations,
                                    const std::vector<std::uint8_t>& events,
                                    const std::vector<std::size_t>& d1,
                                    const std::vector<std::size_t>& d2) {
  detail::check_loss_inputs(scores, durations, events);
  if (d1.empty()) throw config_error("split_losses: empty D1");

  auto by_duration_desc = [&](const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> pos(ids.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
      const double ya = durations[static_cast<Eigen::Index>(ids[a])];
      const double yb = durations[static_cast<Eigen::Index>(ids[b])];
      if (ya != yb) return ya > yb;
      return ids[a] < ids[b];
    });
    return pos;
  };
  const auto p1 = by_duration_desc(d1);
  const auto p2 = by_duration_desc(d2);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d1.size()));
  LogSumExp suffix;
  std::size_t next = 0;
  for (auto pos : p1) {
    const std::size_t i = d1[pos];
    const double yi = durations[static_cast<Eigen::Index>(i)];
    while (next < p2.size() &&
           durations[static_cast<Eigen::Index>(d2[p2[next]])] >= yi) {
      suffix.push(scores[static_cast<Eigen::Index>(d2[p2[next]])]);
      ++next;
    }
    if (events[i]) {
      const double fi = scores[static_cast<Eigen::Index>(i)];
      out[static_cast<Eigen::Index>(pos)] = suffix.value_with(fi) - fi;
    }
  }
  return out;
}

// Gradient of sum_{i in D1} w_i * split loss_i with respect to the full
// score vector. D1 records get the self-term derivative; D2 records
// accumulate exp(f_j) times a running log-sum-exp over the D1 events with
// Y_i <= Y_j of log(w_i) - log Phi_i.
inline Eigen::VectorXd split_upstream_weighted(
    const Eigen::VectorXd& scores, const Eigen::VectorXd& durations,
    const std::vector<std::uint8_t>& events, const std::vector<std::size_t>& d1,
    const std::vector<std::size_t>& d2, const Eigen::VectorXd& weights) {
  detail::check_loss_inputs(scores, durations, events);
  if (weights.size() != static_cast<Eigen::Index>(d1.size())) {
    throw shape_error("split upstream: weight length mismatch");
  }
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(scores.size());
  if (d1.empty()) return grad;

  // log Phi_i for every event in D1, via the same sweep as split_losses.
  std::vector<double> log_phi(d1.size(), 0.0);
  {
    auto by_desc = [&](const std::vector<std::size_t>& ids) {
      std::vector<std::size_t> pos(ids.size());
      std::iota(pos.begin(), pos.end(), std::size_t{0});
      std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
        const double ya = durations[static_cast<Eigen::Index>(ids[a])];
        const double yb = durations[static_cast<Eigen::Index>(ids[b])];
        if (ya != yb) return ya > yb;
        return ids[a] < ids[b];
      });
      return pos;
    };
    const auto p1 = by_desc(d1);
    const auto p2 = by_desc(d2);
    LogSumExp suffix;
    std::size_t next = 0;
    for (auto pos : p1) {
      const std::size_t i = d1[pos];
      const double yi = durations[static_cast<Eigen::Index>(i)];
      while (next < p2.size() &&
             durations[static_cast<Eigen::Index>(d2[p2[next]])] >= yi) {
        suffix.push(scores[static_cast<Eigen::Index>(d2[p2[next]])]);
        ++next;
      }
      log_phi[pos] = suffix.value_with(scores[static_cast<Eigen::Index>(i)]);
    }
  }

  for (std::size_t pos = 0; pos < d1.size(); ++pos) {
    const std::size_t i = d1[pos];
    if (!events[i]) continue;
    const double w = weights[static_cast<Eigen::Index>(pos)];
    if (w == 0.0) continue;
    const auto idx = static_cast<Eigen::Index>(i);
    grad[idx] += w * (std::exp(scores[idx] - log_phi[pos]) - 1.0);
  }

  // Ascending sweep over D2, folding in D1 events as they fall at or
  // below the current D2 duration.
  auto by_asc = [&](const std::vector<std::size_t>& ids) {
    std::vector<std::size_t> pos(ids.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::sort(pos.begin(), pos.end(), [&](std::size_t a, std::size_t b) {
      const double ya = durations[static_cast<Eigen::Index>(ids[a])];
      const double yb = durations[static_cast<Eigen::Index>(ids[b])];
      if (ya != yb) return ya < yb;
      return ids[a] < ids[b];
    });
    return pos;
  };
  const auto a1 = by_asc(d1);
  const auto a2 = by_asc(d2);
  LogSumExp prefix;
  std::size_t next = 0;
  for (auto pos2 : a2) {
    const std::size_t j = d2[pos2];
    const double yj = durations[static_cast<Eigen::Index>(j)];
    while (next < a1.size() &&
           durations[static_cast<Eigen::Index>(d1[a1[next]])] <= yj) {
      const std::size_t pos1 = a1[next];
      const std::size_t i = d1[pos1];
      const double w = weights[static_cast<Eigen::Index>(pos1)];
      if (events[i] && w > 0.0) prefix.push(std::log(w) - log_phi[pos1]);
      ++next;
    }
    if (!prefix.empty()) {
      const auto idx = static_cast<Eigen::Index>(j);
      grad[idx] += std::exp(scores[idx] + prefix.value());
    }
  }
  return grad;
}

// Breslow step estimate of the baseline hazard. `times` are the unique
// event times in increasing order, `increments` the hazard mass at each.
struct BaselineHazard {
  Eigen::VectorXd times;
  Eigen::VectorXd increments;
  Eigen::VectorXd cumulative_sums;

  // H0(t) = sum of increments at event times <= t; 0 before the first.
  double cumulative(double t) const {
    const double* begin = times.data();
    const double* end = begin + times.size();
    const auto k = std::upper_bound(begin, end, t) - begin;
    return k == 0 ? 0.0 : cumulative_sums[k - 1];
  }
};

inline BaselineHazard breslow_baseline(const Eigen::VectorXd& scores,
                                       const Eigen::VectorXd& durations,
                                       const std::vector<std::uint8_t>& events) {
  detail::check_loss_inputs(scores, durations, events);
  const auto n = static_cast<std::size_t>(scores.size());
  const auto order = detail::order_by_duration(durations, /*descending=*/true);

  std::vector<double> rev_times, rev_increments;
  LogSumExp lse;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    const double t = durations[static_cast<Eigen::Index>(order[i])];
    std::size_t d = 0;
    while (j < n && durations[static_cast<Eigen::Index>(order[j])] == t) {
      lse.push(scores[static_cast<Eigen::Index>(order[j])]);
      d += events[order[j]];
      ++j;
    }
    if (d > 0) {
      // d * exp(-max) / scaled_sum: reduces to d / (#at risk) exactly
      // when all scores are zero.
      rev_times.push_back(t);
      rev_increments.push_back(static_cast<double>(d) *
                               std::exp(-lse.max_value()) / lse.scaled_sum());
    }
    i = j;
  }
  if (rev_times.empty()) {
    throw config_error("breslow_baseline: no observed events");
  }

  BaselineHazard bh;
  const auto m = static_cast<Eigen::Index>(rev_times.size());
  bh.times.resize(m);
  bh.increments.resize(m);
  bh.cumulative_sums.resize(m);
  double acc = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    bh.times[k] = rev_times[static_cast<std::size_t>(m - 1 - k)];
    bh.increments[k] = rev_increments[static_cast<std::size_t>(m - 1 - k)];
    acc += bh.increments[k];
    bh.cumulative_sums[k] = acc;
  }
  return bh;
}

// S(t | x) = exp(-H0(t) * exp(f)); equal to 1 before the first event time.
inline double survival_estimate(const BaselineHazard& bh, double score,
                                double t) {
  return std::exp(-bh.cumulative(t) * std::exp(score));
}

inline void save_baseline_csv(const BaselineHazard& bh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write '" + path + "'");
  out << "time,hazard_increment\n";
  char buf[96];
  for (Eigen::Index k = 0; k < bh.times.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", bh.times[k], bh.increments[k]);
    out << buf;
  }
}

}  // namespace survdro
