#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace backoff {

// One seedable stream. Binomials with n <= kSmallBinomial are drawn as
// per-trial Bernoullis in order, so count-mode and identity-mode runs
// consume the engine's draws identically on small populations.
class Rng {
 public:
  static constexpr std::uint64_t kSmallBinomial = 32;

  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  void seed(std::uint64_t s) { gen_.seed(s); }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(gen_);
  }

  bool bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return uniform() < p;
  }

  std::uint64_t binomial(std::uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (n <= kSmallBinomial) {
      std::uint64_t k = 0;
      for (std::uint64_t i = 0; i < n; ++i) k += bernoulli(p) ? 1 : 0;
      return k;
    }
    std::binomial_distribution<std::uint64_t> d(n, p);
    return d(gen_);
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(gen_);
  }

  // Poisson(mean) conditioned on being >= 1, by inversion on the
  // truncated distribution.
  std::uint64_t poisson_at_least_one(double mean) {
    double p0 = std::exp(-mean);
    double u = std::uniform_real_distribution<double>(p0, 1.0)(gen_);
    double cdf = p0;
    double pk = p0;
    std::uint64_t k = 0;
    while (cdf < u && k < 1u << 20) {
      ++k;
      pk *= mean / static_cast<double>(k);
      cdf += pk;
    }
    return k == 0 ? 1 : k;
  }

  std::uint64_t uniform_index(std::uint64_t n) {
    std::uniform_int_distribution<std::uint64_t> d(0, n - 1);
    return d(gen_);
  }

  std::mt19937_64& raw() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace backoff
