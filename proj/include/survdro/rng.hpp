#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace survdro {

// Deterministic random source used wherever a seed appears. The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard; all
// variate transforms live here rather than in std:: distributions (whose
// output is implementation-defined), so datasets, splits and parameter
// draws reproduce bit-for-bit across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) using the top 53 bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [-bound, bound].
  double uniform_symmetric(double bound) {
    return bound * (2.0 * uniform() - 1.0);
  }

  // Standard normal via Box-Muller; the sine variate of each pair is
  // cached and returned on the next call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) {
    return -std::log1p(-uniform()) / rate;
  }

  // Integer in [0, n). Modulo draw; the bias is far below anything the
  // shuffles here could observe.
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }

  // Category index distributed as `weights` (assumed to sum to 1).
  int categorical(const std::vector<double>& weights) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      acc += weights[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  // Fisher-Yates permutation of {0, ..., n-1}.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
      std::swap(idx[i - 1], idx[static_cast<std::size_t>(below(i))]);
    }
    return idx;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace survdro
