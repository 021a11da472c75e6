#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "survdro/cox_loss.hpp"
#include "survdro/rng.hpp"

using namespace survdro;

namespace {

struct Instance {
  Eigen::VectorXd scores;
  Eigen::VectorXd durations;
  std::vector<std::uint8_t> events;
};

// Random survival instance with deliberate ties in both time and score.
Instance random_instance(std::size_t n, std::uint64_t seed,
                         bool force_event = true) {
  Rng rng(seed);
  Instance inst;
  inst.scores.resize(static_cast<Eigen::Index>(n));
  inst.durations.resize(static_cast<Eigen::Index>(n));
  inst.events.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst.scores[static_cast<Eigen::Index>(i)] =
        std::round(rng.normal() * 4.0) / 4.0;
    inst.durations[static_cast<Eigen::Index>(i)] =
        static_cast<double>(rng.below(std::max<std::uint64_t>(2, n / 2)));
    inst.events[i] = rng.uniform() < 0.7 ? 1 : 0;
  }
  if (force_event) inst.events[0] = 1;
  return inst;
}

}  // namespace

TEST_CASE("individual losses: censored records and singleton risk sets") {
  Eigen::VectorXd f(3), y(3);
  f << 0.2, -0.3, 1.0;
  y << 1.0, 2.0, 3.0;
  const auto losses = individual_cox_losses(f, y, {0, 0, 0});
  CHECK(losses.cwiseAbs().maxCoeff() == 0.0);

  Eigen::VectorXd f1(1), y1(1);
  f1 << 3.17;
  y1 << 5.0;
  CHECK(individual_cox_losses(f1, y1, {1})[0] == 0.0);
}

TEST_CASE("individual losses: two-record hand example") {
  Eigen::VectorXd f(2), y(2);
  f << 0.0, 0.0;
  y << 1.0, 2.0;
  const auto losses = individual_cox_losses(f, y, {1, 1});
  CHECK(losses[0] == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(losses[1] == Catch::Approx(0.0).margin(1e-15));
  CHECK(average_cox_loss(f, y, {1, 1}) ==
        Catch::Approx(std::log(2.0) / 2.0).epsilon(1e-12));
}

TEST_CASE("average loss: all censored is zero, constant shifts cancel") {
  const auto inst = random_instance(37, 21);
  std::vector<std::uint8_t> censored(inst.events.size(), 0);
  CHECK(average_cox_loss(inst.scores, inst.durations, censored) == 0.0);

  const double base = average_cox_loss(inst.scores, inst.durations, inst.events);
  const Eigen::VectorXd shifted = inst.scores.array() + 37.5;
  const double moved = average_cox_loss(shifted, inst.durations, inst.events);
  CHECK(moved == Catch::Approx(base).margin(1e-10));
}

TEST_CASE("individual losses are nonnegative and match the naive oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = random_instance(40, 100 + seed);
    const auto fast = individual_cox_losses(inst.scores, inst.durations, inst.events);
    const auto naive =
        oracles::naive_cox_losses(inst.scores, inst.durations, inst.events);
    CHECK(fast.minCoeff() >= 0.0);
    CHECK((fast - naive).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("upstream gradient: hand case and all-censored case") {
  Eigen::VectorXd f(2), y(2);
  f << 0.0, 0.0;
  y << 1.0, 2.0;
  const auto grad = cox_loss_upstream(f, y, {1, 1});
  CHECK(grad[0] == Catch::Approx(-0.5).epsilon(1e-12));
  CHECK(grad[1] == Catch::Approx(0.5).epsilon(1e-12));

  const auto inst = random_instance(12, 44);
  std::vector<std::uint8_t> censored(inst.events.size(), 0);
  CHECK(cox_loss_upstream(inst.scores, inst.durations, censored)
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("upstream gradient matches finite differences and the naive oracle") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = random_instance(20, 300 + seed);
    const auto analytic =
        cox_loss_upstream(inst.scores, inst.durations, inst.events);
    const auto naive = oracles::naive_cox_upstream(
        inst.scores, inst.durations, inst.events,
        Eigen::VectorXd::Ones(inst.scores.size()));
    CHECK((analytic - naive).cwiseAbs().maxCoeff() < 1e-10);

    auto total_loss = [&](const Eigen::VectorXd& scores) {
      return individual_cox_losses(scores, inst.durations, inst.events).sum();
    };
    const auto numeric = oracles::central_differences(total_loss, inst.scores);
    CHECK(oracles::max_relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("weighted upstream matches the naive oracle") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(25, 700 + seed);
    Rng rng(900 + seed);
    Eigen::VectorXd w(inst.scores.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w[i] = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    }
    const auto fast =
        cox_upstream_weighted(inst.scores, inst.durations, inst.events, w);
    const auto naive =
        oracles::naive_cox_upstream(inst.scores, inst.durations, inst.events, w);
    CHECK((fast - naive).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("split individual loss: contract and hand values") {
  Eigen::VectorXd f(3), y(3);
  f << 0.0, 0.0, 2.0;
  y << 1.0, 1.5, 0.5;
  const std::vector<std::uint8_t> d{1, 0, 1};

  CHECK_THROWS_AS(split_individual_loss(0, f, y, d, {0, 1}), config_error);
  // Censored record: zero regardless of D2.
  CHECK(split_individual_loss(1, f, y, d, {0}) == 0.0);
  // Empty D2: Phi reduces to the self term.
  CHECK(split_individual_loss(0, f, y, d, {}) == 0.0);
  // One D2 member at equal score with a later time: log 2.
  CHECK(split_individual_loss(0, f, y, d, {1}) ==
        Catch::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("split loss depends only on record i and D2") {
  const auto inst = random_instance(30, 1234);
  const std::vector<std::size_t> d2{3, 7, 11, 19};
  const std::size_t i = 5;
  const double base =
      split_individual_loss(i, inst.scores, inst.durations, inst.events, d2);

  auto mutated = inst;
  for (std::size_t k = 0; k < 30; ++k) {
    const bool outside = k != i && std::find(d2.begin(), d2.end(), k) == d2.end();
    if (outside) {
      mutated.scores[static_cast<Eigen::Index>(k)] += 3.0;
      mutated.durations[static_cast<Eigen::Index>(k)] += 11.0;
      mutated.events[k] = 1;
    }
  }
  const double after = split_individual_loss(i, mutated.scores, mutated.durations,
                                             mutated.events, d2);
  CHECK(after == base);
}

TEST_CASE("batch split losses agree with the single-record form") {
  const auto inst = random_instance(40, 77);
  std::vector<std::size_t> d1, d2;
  for (std::size_t k = 0; k < 40; ++k) (k % 2 ? d1 : d2).push_back(k);
  const auto batch = split_losses(inst.scores, inst.durations, inst.events, d1, d2);
  for (std::size_t pos = 0; pos < d1.size(); ++pos) {
    const double single = oracles::naive_split_loss(d1[pos], inst.scores,
                                                    inst.durations, inst.events, d2);
    CHECK(batch[static_cast<Eigen::Index>(pos)] ==
          Catch::Approx(single).margin(1e-11));
  }
}

TEST_CASE("split upstream matches finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = random_instance(24, 4000 + seed);
    std::vector<std::size_t> d1, d2;
    for (std::size_t k = 0; k < 24; ++k) (k < 12 ? d1 : d2).push_back(k);
    Rng rng(5000 + seed);
    Eigen::VectorXd w(static_cast<Eigen::Index>(d1.size()));
    for (Eigen::Index k = 0; k < w.size(); ++k) w[k] = rng.uniform();

    const auto analytic = split_upstream_weighted(inst.scores, inst.durations,
                                                  inst.events, d1, d2, w);
    auto weighted_total = [&](const Eigen::VectorXd& scores) {
      const auto u = split_losses(scores, inst.durations, inst.events, d1, d2);
      return u.dot(w);
    };
    const auto numeric = oracles::central_differences(weighted_total, inst.scores);
    CHECK(oracles::max_relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("breslow with zero scores reproduces Nelson-Aalen exactly") {
  const auto inst = random_instance(60, 888);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(inst.scores.size());
  const auto bh = breslow_baseline(zero, inst.durations, inst.events);
  const auto na = oracles::nelson_aalen(inst.durations, inst.events);
  REQUIRE(static_cast<std::size_t>(bh.times.size()) == na.size());
  for (std::size_t k = 0; k < na.size(); ++k) {
    CHECK(bh.times[static_cast<Eigen::Index>(k)] == na[k].time);
    CHECK(bh.increments[static_cast<Eigen::Index>(k)] == na[k].increment);
  }
}

TEST_CASE("breslow hand examples") {
  Eigen::VectorXd f1(1), y1(1);
  f1 << 0.0;
  y1 << 2.5;
  const auto single = breslow_baseline(f1, y1, {1});
  REQUIRE(single.times.size() == 1);
  CHECK(single.times[0] == 2.5);
  CHECK(single.increments[0] == 1.0);  // one event over one at-risk subject

  f1 << 0.4;
  const auto scaled = breslow_baseline(f1, y1, {1});
  CHECK(scaled.increments[0] == Catch::Approx(std::exp(-0.4)).epsilon(1e-12));

  Eigen::VectorXd f(3), y(3);
  f << 0.0, 0.0, 0.0;
  y << 1.0, 1.0, 2.0;
  const auto bh = breslow_baseline(f, y, {1, 1, 0});
  REQUIRE(bh.times.size() == 1);
  CHECK(bh.increments[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(bh.cumulative(2.0) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(bh.cumulative(0.5) == 0.0);

  CHECK_THROWS_AS(breslow_baseline(f, y, std::vector<std::uint8_t>{0, 0, 0}),
                  config_error);
}

TEST_CASE("survival estimates: range, monotonicity, limits") {
  Eigen::VectorXd f(3), y(3);
  f << 0.0, 0.0, 0.0;
  y << 1.0, 1.0, 2.0;
  const auto bh = breslow_baseline(f, y, {1, 1, 0});
  CHECK(survival_estimate(bh, 0.0, 0.5) == 1.0);
  CHECK(survival_estimate(bh, 0.0, 2.0) ==
        Catch::Approx(std::exp(-2.0 / 3.0)).epsilon(1e-12));
  CHECK(survival_estimate(bh, 50.0, 1.0) < 1e-10);

  double prev = 1.0;
  for (double t = 0.0; t < 3.0; t += 0.1) {
    const double s = survival_estimate(bh, 0.3, t);
    CHECK(s <= prev + 1e-15);
    prev = s;
  }
}

TEST_CASE("end-to-end shift invariance of reconstructed survival") {
  const auto inst = random_instance(50, 3210);
  const double shift = 1.75;
  const Eigen::VectorXd shifted = inst.scores.array() + shift;
  const auto bh0 = breslow_baseline(inst.scores, inst.durations, inst.events);
  const auto bh1 = breslow_baseline(shifted, inst.durations, inst.events);
  for (double t : {0.5, 1.0, 3.0, 7.0}) {
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double s0 = survival_estimate(bh0, inst.scores[i], t);
      const double s1 = survival_estimate(bh1, inst.scores[i] + shift, t);
      CHECK(s0 == Catch::Approx(s1).margin(1e-12));
    }
  }
}
