#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "survdro/metrics.hpp"
#include "survdro/rng.hpp"

using namespace survdro;

namespace {

struct Instance {
  Eigen::VectorXd scores;
  Eigen::VectorXd durations;
  std::vector<std::uint8_t> events;
  std::vector<int> groups;
};

Instance random_instance(std::size_t n, int num_groups, std::uint64_t seed) {
  Rng rng(seed);
  Instance inst;
  inst.scores.resize(static_cast<Eigen::Index>(n));
  inst.durations.resize(static_cast<Eigen::Index>(n));
  inst.events.resize(n);
  inst.groups.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    inst.scores[static_cast<Eigen::Index>(i)] =
        std::round(rng.normal() * 2.0) / 2.0;
    inst.durations[static_cast<Eigen::Index>(i)] =
        static_cast<double>(rng.below(std::max<std::uint64_t>(2, n / 3)));
    inst.events[i] = rng.uniform() < 0.65 ? 1 : 0;
    inst.groups[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_groups)));
  }
  inst.events[0] = 1;
  return inst;
}

GroupPartition make_partition(const std::vector<int>& groups, int count) {
  GroupPartition part;
  part.name = "g";
  part.categories = groups;
  for (int g = 0; g < count; ++g) part.labels.push_back(std::to_string(g));
  return part;
}

}  // namespace

TEST_CASE("c-index endpoints") {
  Eigen::VectorXd f(4), y(4);
  y << 1.0, 2.0, 3.0, 4.0;
  f << 4.0, 3.0, 2.0, 1.0;  // strictly decreasing in time
  CHECK(c_index(f, y, {1, 1, 1, 1}) == 1.0);

  Eigen::VectorXd flat = Eigen::VectorXd::Zero(4);
  CHECK(c_index(flat, y, {1, 1, 1, 1}) == 0.5);
}

TEST_CASE("c-index requires a comparable pair") {
  Eigen::VectorXd f(2), y(2);
  f << 1.0, 2.0;
  y << 3.0, 3.0;
  CHECK_THROWS_AS(c_index(f, y, std::vector<std::uint8_t>{0, 0}),
                  undefined_metric_error);
}

TEST_CASE("c-index equals the independent reference bit for bit") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto inst = random_instance(60 + (seed % 140), 1, seed);
    CHECK(c_index(inst.scores, inst.durations, inst.events) ==
          oracles::reference_c_index(inst.scores, inst.durations, inst.events));
  }
}

TEST_CASE("c-index is invariant under strictly increasing transforms") {
  const auto inst = random_instance(80, 1, 999);
  const double base = c_index(inst.scores, inst.durations, inst.events);
  const Eigen::VectorXd exp_scores = inst.scores.array().exp();
  const Eigen::VectorXd affine = 2.0 * inst.scores.array() + 7.0;
  CHECK(c_index(exp_scores, inst.durations, inst.events) == base);
  CHECK(c_index(affine, inst.durations, inst.events) == base);
}

TEST_CASE("concordance imparity endpoints") {
  // Two groups carrying identical (score, time, event) multisets.
  Eigen::VectorXd f(6), y(6);
  f << 1.0, 2.0, 3.0, 1.0, 2.0, 3.0;
  y << 1.0, 2.0, 3.0, 1.0, 2.0, 3.0;
  const auto part = make_partition({0, 0, 0, 1, 1, 1}, 2);
  CHECK(concordance_imparity(f, y, {1, 1, 1, 1, 1, 1}, part) ==
        Catch::Approx(0.0).margin(1e-12));

  // Group 0 is concordant everywhere; group 1 is anti-concordant within
  // itself but its cross pairs (which the all-pairs denominator counts)
  // stay concordant: CF(0) = 15/15, CF(1) = 9/15, so CI = 40.
  Eigen::VectorXd f2(6), y2(6);
  y2 << 1.0, 2.0, 3.0, 10.0, 20.0, 30.0;
  f2 << 30.0, 20.0, 10.0, 1.0, 2.0, 3.0;
  CHECK(concordance_imparity(f2, y2, {1, 1, 1, 1, 1, 1}, part) ==
        Catch::Approx(40.0).margin(1e-12));
}

TEST_CASE("concordance imparity rejects degenerate partitions") {
  Eigen::VectorXd f(3), y(3);
  f << 1.0, 2.0, 3.0;
  y << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(
      concordance_imparity(f, y, {1, 1, 1}, make_partition({0, 0, 0}, 1)),
      config_error);
  // Second group exists but its only member forms no comparable pair as
  // the earlier observation is censored.
  Eigen::VectorXd f2(3), y2(3);
  f2 << 1.0, 2.0, 3.0;
  y2 << 5.0, 6.0, 1.0;
  CHECK_THROWS_AS(concordance_imparity(f2, y2, std::vector<std::uint8_t>{1, 1, 0},
                                       make_partition({0, 0, 1}, 2)),
                  undefined_metric_error);
}

TEST_CASE("concordance imparity equals the independent reference bit for bit") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int num_groups = 2 + static_cast<int>(seed % 2);
    const auto inst = random_instance(50 + (seed % 150), num_groups, 7000 + seed);
    const auto part = make_partition(inst.groups, num_groups);
    double ours = 0.0, reference = 0.0;
    bool ours_defined = true, reference_defined = true;
    try {
      ours = concordance_imparity(inst.scores, inst.durations, inst.events, part);
    } catch (const undefined_metric_error&) {
      ours_defined = false;
    }
    try {
      reference = oracles::reference_concordance_imparity(
          inst.scores, inst.durations, inst.events, inst.groups, num_groups);
      reference_defined = std::isfinite(reference);
    } catch (...) {
      reference_defined = false;
    }
    REQUIRE(ours_defined == reference_defined);
    if (ours_defined) CHECK(ours == reference);
  }
}

TEST_CASE("individual fairness hand values") {
  Eigen::VectorXd f(2);
  f << 0.0, std::log(2.0);
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 10.0;
  CHECK(fairness_individual(f, x, {0.01}) == Catch::Approx(0.9).epsilon(1e-12));
  // A huge gamma clamps everything.
  CHECK(fairness_individual(f, x, {1e6}) == 0.0);

  Eigen::VectorXd equal = Eigen::VectorXd::Constant(5, 0.7);
  Eigen::MatrixXd xs = Eigen::MatrixXd::Random(5, 3);
  CHECK(fairness_individual(equal, xs, {0.01}) == 0.0);

  // A user-supplied metric replaces the Euclidean default: with the
  // Manhattan distance the same two points sit 10 apart as well.
  FairnessConfig manhattan;
  manhattan.gamma = 0.01;
  manhattan.distance = [](const Eigen::RowVectorXd& a,
                          const Eigen::RowVectorXd& b) {
    return (a - b).cwiseAbs().sum();
  };
  CHECK(fairness_individual(f, x, manhattan) ==
        Catch::Approx(0.9).epsilon(1e-12));
  manhattan.gamma = 0.2;  // now 0.2 * 10 = 2 > |1 - 2| clamps the pair
  CHECK(fairness_individual(f, x, manhattan) == 0.0);
}

TEST_CASE("group fairness hand values and invariances") {
  // One group covering the whole population.
  Eigen::VectorXd f = Eigen::VectorXd::Random(6);
  CHECK(fairness_group(f, make_partition({0, 0, 0, 0, 0, 0}, 1)) ==
        Catch::Approx(0.0).margin(1e-12));

  // Hazards {1,1} vs {3,3}: population mean 2, deviation 1.
  Eigen::VectorXd g(4);
  g << 0.0, 0.0, std::log(3.0), std::log(3.0);
  CHECK(fairness_group(g, make_partition({0, 0, 1, 1}, 2)) ==
        Catch::Approx(1.0).epsilon(1e-12));

  // Permuting records within groups changes nothing.
  Eigen::VectorXd p(4);
  p << std::log(3.0), 0.0, std::log(3.0), 0.0;
  CHECK(fairness_group(p, make_partition({1, 0, 1, 0}, 2)) ==
        Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("intersectional fairness hand values and brute force") {
  Eigen::VectorXd equal = Eigen::VectorXd::Constant(8, 0.3);
  GroupPartition a = make_partition({0, 0, 1, 1, 0, 0, 1, 1}, 2);
  GroupPartition b = make_partition({0, 1, 0, 1, 0, 1, 0, 1}, 2);
  CHECK(fairness_intersectional(equal, {a, b}) == Catch::Approx(0.0).margin(1e-12));

  // Two subgroups with mean hazards e and 1.
  Eigen::VectorXd two(2);
  two << 1.0, 0.0;
  GroupPartition only = make_partition({0, 1}, 2);
  CHECK(fairness_intersectional(two, {only}) == Catch::Approx(1.0).epsilon(1e-12));

  // Random data, J=2 binary attributes: compare against exhaustive pairs.
  Rng rng(31);
  Eigen::VectorXd f(12);
  std::vector<int> ga(12), gb(12);
  for (std::size_t i = 0; i < 12; ++i) {
    f[static_cast<Eigen::Index>(i)] = rng.normal();
    ga[i] = static_cast<int>(rng.below(2));
    gb[i] = static_cast<int>(rng.below(2));
  }
  const auto pa = make_partition(ga, 2);
  const auto pb = make_partition(gb, 2);

  double expected = 0.0;
  for (int c0 = 0; c0 < 2; ++c0) {
    for (int c1 = 0; c1 < 2; ++c1) {
      for (int d0 = 0; d0 < 2; ++d0) {
        for (int d1 = 0; d1 < 2; ++d1) {
          double sum_a = 0.0, sum_b = 0.0;
          int na = 0, nb = 0;
          for (std::size_t i = 0; i < 12; ++i) {
            const double h = std::exp(f[static_cast<Eigen::Index>(i)]);
            if (ga[i] == c0 && gb[i] == c1) {
              sum_a += h;
              ++na;
            }
            if (ga[i] == d0 && gb[i] == d1) {
              sum_b += h;
              ++nb;
            }
          }
          if (na > 0 && nb > 0) {
            expected = std::max(
                expected, std::abs(std::log((sum_a / na) / (sum_b / nb))));
          }
        }
      }
    }
  }
  CHECK(fairness_intersectional(f, {pa, pb}) ==
        Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fairness average") {
  CHECK(fairness_average(0.0, 0.0, 0.0) == 0.0);
  CHECK(fairness_average(3.0, 0.0, 0.0) == 1.0);
  CHECK(fairness_average(0.2793, 0.4694, 0.7880) ==
        Catch::Approx(0.5122).margin(5e-5));
  const double exact = fairness_average(0.11, 0.22, 0.55);
  CHECK(std::abs(exact - (0.11 + 0.22 + 0.55) / 3.0) < 1e-15);
}

TEST_CASE("scaling all scores toward zero shrinks F_I and F_G") {
  const auto inst = random_instance(40, 2, 515);
  const auto part = make_partition(inst.groups, 2);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(40, 3);
  const double fi_base = fairness_individual(inst.scores, x, {0.01});
  const double fg_base = fairness_group(inst.scores, part);
  REQUIRE(fi_base > 0.0);
  REQUIRE(fg_base > 0.0);
  const Eigen::VectorXd shrunk = 0.5 * inst.scores;
  CHECK(fairness_individual(shrunk, x, {0.01}) < fi_base);
  CHECK(fairness_group(shrunk, part) < fg_base);
  // The ranking metric is untouched by the same scaling.
  CHECK(c_index(shrunk, inst.durations, inst.events) ==
        c_index(inst.scores, inst.durations, inst.events));
}

TEST_CASE("fairness metrics ignore record order") {
  const auto inst = random_instance(25, 2, 808);
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(25, 2);
  const auto part = make_partition(inst.groups, 2);
  const double fi = fairness_individual(inst.scores, x, {0.01});
  const double fg = fairness_group(inst.scores, part);

  std::vector<std::size_t> perm(25);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::reverse(perm.begin(), perm.end());
  Eigen::VectorXd ps(25);
  Eigen::MatrixXd px(25, 2);
  std::vector<int> pg(25);
  for (std::size_t i = 0; i < 25; ++i) {
    ps[static_cast<Eigen::Index>(i)] = inst.scores[static_cast<Eigen::Index>(perm[i])];
    px.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(perm[i]));
    pg[i] = inst.groups[perm[i]];
  }
  CHECK(fairness_individual(ps, px, {0.01}) == Catch::Approx(fi).epsilon(1e-12));
  CHECK(fairness_group(ps, make_partition(pg, 2)) ==
        Catch::Approx(fg).epsilon(1e-12));
}

TEST_CASE("censoring Kaplan-Meier estimator") {
  Eigen::VectorXd y1(3);
  y1 << 1.0, 2.0, 3.0;
  const auto none = km_censoring(y1, {1, 1, 1});
  CHECK(none(0.5) == 1.0);
  CHECK(none(10.0) == 1.0);

  Eigen::VectorXd y2(2);
  y2 << 1.0, 2.0;
  const auto g = km_censoring(y2, {0, 1});
  CHECK(g(0.99) == 1.0);
  CHECK(g(1.0) == Catch::Approx(0.5));
  CHECK(g(5.0) == Catch::Approx(0.5));
  CHECK(g.left_limit(1.0) == 1.0);

  // Five-record hand computation.
  Eigen::VectorXd y5(5);
  y5 << 1.0, 2.0, 3.0, 4.0, 5.0;
  const auto g5 = km_censoring(y5, {0, 1, 0, 0, 1});
  CHECK(g5(0.5) == 1.0);
  CHECK(g5(1.0) == Catch::Approx(4.0 / 5.0).epsilon(1e-15));
  CHECK(g5(2.5) == Catch::Approx(4.0 / 5.0).epsilon(1e-15));
  CHECK(g5(3.0) == Catch::Approx(8.0 / 15.0).epsilon(1e-15));
  CHECK(g5(4.0) == Catch::Approx(4.0 / 15.0).epsilon(1e-15));
  CHECK(g5(6.0) == Catch::Approx(4.0 / 15.0).epsilon(1e-15));

  const auto inst = random_instance(60, 1, 1100);
  const auto gr = km_censoring(inst.durations, inst.events);
  double prev = 1.0;
  for (double t = 0.0; t < 25.0; t += 0.25) {
    CHECK(gr(t) <= prev + 1e-15);
    prev = gr(t);
  }
}

TEST_CASE("integrated Brier score") {
  // Constant 1/2 prediction without censoring: BS(t) = 1/4 at every t.
  Eigen::VectorXd y(8);
  y << 1, 2, 3, 4, 5, 6, 7, 8;
  std::vector<std::uint8_t> d(8, 1);
  Eigen::VectorXd grid(3);
  grid << 2.5, 4.5, 6.5;
  const double half = integrated_brier([](std::size_t, double) { return 0.5; },
                                       y, d, grid);
  CHECK(half == Catch::Approx(0.25).epsilon(1e-12));

  // An oracle that knows each event time exactly scores zero.
  const double oracle = integrated_brier(
      [&](std::size_t i, double t) {
        return t < y[static_cast<Eigen::Index>(i)] ? 1.0 : 0.0;
      },
      y, d, grid);
  CHECK(oracle == 0.0);

  // Random data with censoring stays within [0, 1].
  const auto inst = random_instance(80, 1, 2022);
  const auto g = default_time_grid(inst.durations, inst.events, 25);
  const double value = integrated_brier(
      [&](std::size_t i, double t) {
        return std::exp(-0.1 * t * std::exp(inst.scores[static_cast<Eigen::Index>(i)] * 0.1));
      },
      inst.durations, inst.events, g);
  CHECK(value >= 0.0);
  CHECK(value <= 1.0);
}

TEST_CASE("time-dependent AUC") {
  // Scores perfectly anti-ranked with time: AUC 1 at every grid point.
  Eigen::VectorXd y(10), f(10);
  for (int i = 0; i < 10; ++i) {
    y[i] = i + 1.0;
    f[i] = -static_cast<double>(i);
  }
  std::vector<std::uint8_t> d(10, 1);
  Eigen::VectorXd grid(4);
  grid << 1.5, 3.5, 5.5, 8.5;
  CHECK(time_dependent_auc(f, y, d, grid) == Catch::Approx(1.0).epsilon(1e-12));

  // Constant scores: every comparison is a tie.
  const Eigen::VectorXd flat = Eigen::VectorXd::Zero(10);
  CHECK(time_dependent_auc(flat, y, d, grid) == Catch::Approx(0.5).epsilon(1e-12));

  // Single grid point without censoring reduces to the rank-statistic AUC.
  const auto inst = random_instance(40, 1, 3033);
  std::vector<std::uint8_t> all_events(40, 1);
  Eigen::VectorXd single(1);
  single << inst.durations.mean();
  std::vector<double> cases, controls;
  for (Eigen::Index i = 0; i < 40; ++i) {
    if (inst.durations[i] <= single[0]) {
      cases.push_back(inst.scores[i]);
    } else {
      controls.push_back(inst.scores[i]);
    }
  }
  REQUIRE(!cases.empty());
  REQUIRE(!controls.empty());
  CHECK(time_dependent_auc(inst.scores, inst.durations, all_events, single) ==
        Catch::Approx(oracles::wilcoxon_auc(cases, controls)).epsilon(1e-12));

  // No grid point with both a case and a control: undefined.
  Eigen::VectorXd early(1);
  early << 0.5;
  CHECK_THROWS_AS(time_dependent_auc(f, y, d, early), undefined_metric_error);
}

TEST_CASE("test LPL is the sign-flipped mean Cox loss") {
  Eigen::VectorXd f(2), y(2);
  f << 0.0, 0.0;
  y << 1.0, 2.0;
  CHECK(test_lpl(f, y, {1, 1}) ==
        Catch::Approx(-std::log(2.0) / 2.0).epsilon(1e-12));
  CHECK(test_lpl(f, y, {0, 0}) == 0.0);

  const auto inst = random_instance(50, 1, 4044);
  CHECK(test_lpl(inst.scores, inst.durations, inst.events) <= 0.0);
}
