#pragma once

#include <cmath>
#include <cstdint>

#include "backoff/error.hpp"

namespace backoff {

// The lambda-derived constants used by the bin classifier and by the
// noise-scale functions L and LL. canonical() fills in the full-strength
// values; tests and desk-scale runs may construct smaller ones directly
// (synthetic-constants mode) while keeping every formula's shape.
struct ClassifierConstants {
  double lambda = 0.1;
  double c_no = 300.0;
  double c_se = 0.0;       // 10 * c_no * ceil(ln(1/lambda))
  double c_upsilon = 320.0;
  double c_nb = 0.0;       // 1 / (30 * c_upsilon)
  double c_fill = 2.0;
  double phi = 100.0;
  double chi = 1000.0;
  double c0 = 0.0;         // 2 phi c_fill c_upsilon c_no^2 ln(6/lambda) / (c_nb lambda)

  static ClassifierConstants canonical(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
      raise(errc::validation_error, "classifier constants need lambda in (0,1)");
    ClassifierConstants c;
    c.lambda = lambda;
    c.c_no = 300.0;
    c.c_se = 10.0 * c.c_no * std::ceil(std::log(1.0 / lambda));
    c.c_upsilon = 320.0;
    c.c_nb = 1.0 / (30.0 * c.c_upsilon);
    c.c_fill = 2.0;
    c.phi = 100.0;
    c.chi = 1000.0;
    c.c0 = 2.0 * c.phi * c.c_fill * c.c_upsilon * c.c_no * c.c_no *
           std::log(6.0 / lambda) / (c.c_nb * lambda);
    return c;
  }

  // Small overrides keeping the formula structure; used where the
  // canonical values put every threshold out of desk-scale reach.
  static ClassifierConstants synthetic(double lambda, double phi_hat = 2.0,
                                       double chi_hat = 3.0) {
    ClassifierConstants c;
    c.lambda = lambda;
    c.c_no = 1.0;
    c.c_se = 1.0;
    c.c_upsilon = 1.0;
    c.c_nb = 1.0;
    c.c_fill = 2.0;
    c.phi = phi_hat;
    c.chi = chi_hat;
    c.c0 = 2.0 * c.phi * c.c_fill * c.c_upsilon * c.c_no * c.c_no *
           std::log(6.0 / lambda) / (c.c_nb * lambda);
    return c;
  }

  // LL(j) = c_se * ceil(max{1, ln ln j}); ln ln j is clamped to 1 where it
  // is undefined or below 1 (j <= 3).
  double loglog_scale(std::uint64_t j) const {
    double x = j >= 2 ? std::log(std::log(static_cast<double>(j))) : 1.0;
    return c_se * std::ceil(std::max(1.0, x));
  }

  // L(j) = c_no * ceil(max{ln(1/lambda), c_no * ln j}).
  double log_scale(std::uint64_t j) const {
    double lj = std::log(static_cast<double>(j));
    return c_no * std::ceil(std::max(std::log(1.0 / lambda), c_no * lj));
  }

  // K(i) = 2 * ceil(c_upsilon * LL(i) / lambda), used by the bottleneck test.
  double k_of(std::uint64_t i) const {
    return 2.0 * std::ceil(c_upsilon * loglog_scale(i) / lambda);
  }
};

}  // namespace backoff
