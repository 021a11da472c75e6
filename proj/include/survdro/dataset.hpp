#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "survdro/errors.hpp"
#include "survdro/rng.hpp"

namespace survdro {

// One categorical attribute (e.g. "gender") over all records. Category
// codes are assigned in first-appearance order; labels[c] keeps the
// original spelling of code c.
struct GroupAttribute {
  std::vector<int> categories;
  std::vector<std::string> labels;

  int num_categories() const { return static_cast<int>(labels.size()); }
};

// Survival dataset: features X (n x d), observed durations Y >= 0, event
// indicators (1 = event observed, 0 = censored) and named group
// attributes. Treated as immutable once built; safe to share across
// threads.
struct Dataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd durations;
  std::vector<std::uint8_t> events;
  std::vector<std::string> feature_names;
  std::map<std::string, GroupAttribute> groups;

  std::size_t size() const { return static_cast<std::size_t>(durations.size()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  std::size_t event_count() const {
    std::size_t c = 0;
    for (auto e : events) c += e;
    return c;
  }

  void validate() const {
    const auto n = size();
    if (static_cast<std::size_t>(features.rows()) != n ||
        events.size() != n) {
      throw shape_error("dataset: features/durations/events sizes disagree");
    }
    if (feature_names.size() != dim()) {
      throw shape_error("dataset: feature_names does not match feature count");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!(durations[static_cast<Eigen::Index>(i)] >= 0.0)) {
        throw parse_error("dataset: negative or non-finite duration at record " +
                          std::to_string(i + 1));
      }
      if (events[i] > 1) {
        throw parse_error("dataset: event indicator outside {0,1} at record " +
                          std::to_string(i + 1));
      }
    }
    for (const auto& [name, attr] : groups) {
      if (attr.categories.size() != n) {
        throw shape_error("dataset: group attribute '" + name +
                          "' does not cover every record");
      }
      for (int c : attr.categories) {
        if (c < 0 || c >= attr.num_categories()) {
          throw shape_error("dataset: group attribute '" + name +
                            "' has an out-of-range category");
        }
      }
    }
  }

  Dataset subset(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.feature_names = feature_names;
    out.features.resize(static_cast<Eigen::Index>(idx.size()),
                        features.cols());
    out.durations.resize(static_cast<Eigen::Index>(idx.size()));
    out.events.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.features.row(static_cast<Eigen::Index>(r)) =
          features.row(static_cast<Eigen::Index>(idx[r]));
      out.durations[static_cast<Eigen::Index>(r)] =
          durations[static_cast<Eigen::Index>(idx[r])];
      out.events[r] = events[idx[r]];
    }
    for (const auto& [name, attr] : groups) {
      GroupAttribute sub;
      sub.labels = attr.labels;
      sub.categories.reserve(idx.size());
      for (auto i : idx) sub.categories.push_back(attr.categories[i]);
      out.groups.emplace(name, std::move(sub));
    }
    return out;
  }
};

// Disjoint covering pair of index sets over {0, ..., n-1}.
struct SplitIndices {
  std::vector<std::size_t> d1;
  std::vector<std::size_t> d2;
};

// Seeded partition with |d1| = n1. Indices come back sorted so downstream
// iteration order is deterministic.
inline SplitIndices halve_indices(std::size_t n, std::size_t n1,
                                  std::uint64_t seed) {
  if (n1 == 0 || n1 >= n) {
    throw config_error("halve_indices: n1 must satisfy 0 < n1 < n");
  }
  Rng rng(seed);
  auto perm = rng.permutation(n);
  SplitIndices out;
  out.d1.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n1));
  out.d2.assign(perm.begin() + static_cast<std::ptrdiff_t>(n1), perm.end());
  std::sort(out.d1.begin(), out.d1.end());
  std::sort(out.d2.begin(), out.d2.end());
  return out;
}

// Seeded shuffle split into train/val/test with sizes given by rounded
// proportions. Any empty part is an error.
inline std::tuple<Dataset, Dataset, Dataset> split_dataset(
    const Dataset& ds, double train_frac, double val_frac, double test_frac,
    std::uint64_t seed) {
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(test_frac > 0.0)) {
    throw config_error("split_dataset: fractions must be positive");
  }
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
    throw config_error("split_dataset: fractions must sum to 1");
  }
  const std::size_t n = ds.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw config_error("split_dataset: a split would be empty");
  }
  Rng rng(seed);
  auto perm = rng.permutation(n);
  auto take = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                 perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::sort(idx.begin(), idx.end());
    return ds.subset(idx);
  };
  return {take(0, n_train), take(n_train, n_train + n_val),
          take(n_train + n_val, n)};
}

// Two-way variant used by the experiment harness (train/test and
// train/validation splits).
inline std::pair<Dataset, Dataset> split_dataset_two(const Dataset& ds,
                                                     double first_frac,
                                                     std::uint64_t seed) {
  if (!(first_frac > 0.0 && first_frac < 1.0)) {
    throw config_error("split_dataset_two: fraction must lie in (0,1)");
  }
  const std::size_t n = ds.size();
  const auto n_first = static_cast<std::size_t>(std::llround(first_frac * static_cast<double>(n)));
  if (n_first == 0 || n_first >= n) {
    throw config_error("split_dataset_two: a split would be empty");
  }
  Rng rng(seed);
  auto perm = rng.permutation(n);
  std::vector<std::size_t> a(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_first));
  std::vector<std::size_t> b(perm.begin() + static_cast<std::ptrdiff_t>(n_first), perm.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {ds.subset(a), ds.subset(b)};
}

struct Standardization {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;  // 0 marks a zero-variance feature (centered only)

  void apply(Dataset& ds) const {
    if (ds.dim() != static_cast<std::size_t>(means.size())) {
      throw shape_error("standardization: feature dimension mismatch");
    }
    for (Eigen::Index j = 0; j < means.size(); ++j) {
      ds.features.col(j).array() -= means[j];
      if (stds[j] > 0.0) ds.features.col(j).array() /= stds[j];
    }
  }
};

// Per-feature z-score with statistics taken from `train` only (population
// standard deviation). Zero-variance features are centered but not scaled.
// The same transform is applied to every dataset in `others`.
inline Standardization standardize_features(Dataset& train,
                                            std::vector<Dataset*> others = {}) {
  const auto n = static_cast<double>(train.size());
  if (n == 0) throw config_error("standardize_features: empty training set");
  Standardization st;
  st.means = train.features.colwise().mean();
  st.stds.resize(train.features.cols());
  for (Eigen::Index j = 0; j < train.features.cols(); ++j) {
    const double var =
        (train.features.col(j).array() - st.means[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    st.stds[j] = sd > 1e-12 * (1.0 + std::abs(st.means[j])) ? sd : 0.0;
  }
  st.apply(train);
  for (Dataset* ds : others) st.apply(*ds);
  return st;
}

}  // namespace survdro
