#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "backoff/send_sequence.hpp"

namespace testutil {

// Random explicit sequence with p_0 = 1 and integer-ish weights in
// [1, max_weight]; handy for oracle comparisons.
inline backoff::SendSequence random_sequence(std::mt19937_64& gen,
                                             std::size_t bins,
                                             double max_weight) {
  std::uniform_real_distribution<double> w(1.0, max_weight);
  std::vector<double> probs{1.0};
  for (std::size_t i = 0; i < bins; ++i) probs.push_back(1.0 / w(gen));
  return backoff::SendSequence::explicit_list(probs);
}

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n,
                                         double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(gen);
  return v;
}

}  // namespace testutil
