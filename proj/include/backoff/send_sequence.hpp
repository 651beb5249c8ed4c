#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "backoff/constants.hpp"
#include "backoff/error.hpp"

namespace backoff {

enum class Family {
  constant,
  binary_exponential,
  geometric,
  polynomial,
  explicit_list,
  interleaved_aloha_exp,
  weakly_exposed_example,
};

const char* family_name(Family f);

struct CapReport {
  bool all_pass = true;
  std::vector<bool> pass;                  // index 0 <-> j = 1
  std::optional<std::uint64_t> first_fail;
};

// A send sequence p_0 = 1, p_1, p_2, ... with weights W_k = 1/p_k.
// Immutable after construction; all predicates work in log space so that
// weights far beyond double range stay usable.
class SendSequence {
 public:
  static SendSequence constant(double p);
  static SendSequence binary_exponential();
  static SendSequence geometric(double base);
  static SendSequence polynomial(double exponent);
  static SendSequence explicit_list(std::vector<double> probs);
  // p_j = C^-j on even schedule intervals, 1/2 on odd ones. The schedule
  // must be strictly increasing with schedule[0] = 0; indices past the last
  // entry fall in the final (open) interval.
  static SendSequence interleaved_aloha_exp(double base,
                                            std::vector<std::uint64_t> schedule);
  // The weakly-exposed construction: bin a_k (k >= k0) gets C^-a_k, the
  // R(k) bins below it get a_k^-chi, everything else sends at 1/2, with
  // a_0 = 0 and a_k = (2C)^(a_{k-1}). R(k) = ceil(c_upsilon LL(a_k)/lambda)
  // from the supplied constants.
  static SendSequence weakly_exposed_example(double base, std::uint32_t k0,
                                             double lambda,
                                             const ClassifierConstants& cc);
  static SendSequence weakly_exposed_example(double base, std::uint32_t k0,
                                             double lambda);

  Family family() const { return family_; }
  const std::string& describe() const { return describe_; }

  // p_k. May underflow to 0 for astronomically heavy bins; use log_weight
  // for predicates.
  double prob(std::uint64_t k) const;

  // ln W_k = ln(1/p_k), computed from family parameters without overflow.
  double log_weight(std::uint64_t k) const;

  // W_k, with +infinity as the overflow sentinel.
  double weight(std::uint64_t k) const;

  // Reduction-cap check: log W_j <= j * ln(2/lambda) for j in [1, j_max].
  CapReport validate_cap(double lambda, std::uint64_t j_max) const;

 private:
  struct Band {           // weakly-exposed bands, reachable ones only
    double a;             // a_k
    double lo;            // a_k - R(k)
    double log_w_peak;    // a_k * ln C
    double log_w_band;    // chi * ln a_k
  };

  Family family_ = Family::constant;
  double p_ = 0.5;                // constant
  double log_w_ = 0.0;            // constant: ln(1/p)
  double base_ = 2.0;             // geometric / interleaved / weakly exposed
  double log_base_ = 0.0;
  double exponent_ = 1.0;         // polynomial
  std::vector<double> probs_;     // explicit
  std::vector<std::uint64_t> schedule_;
  std::vector<Band> bands_;
  std::string describe_;
};

}  // namespace backoff
