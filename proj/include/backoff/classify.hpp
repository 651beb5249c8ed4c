#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "backoff/constants.hpp"
#include "backoff/send_sequence.hpp"

namespace backoff {

enum class BinClass { many_covered, heavy_covered, weakly_exposed, strongly_exposed };

const char* bin_class_name(BinClass c);

inline bool is_covered(BinClass c) {
  return c == BinClass::many_covered || c == BinClass::heavy_covered;
}
inline bool is_exposed(BinClass c) { return !is_covered(c); }

struct ThresholdChoice {
  double value = 1.0;        // the maximising positive integer (exact while < 2^53)
  double log_value = 0.0;
  std::uint64_t count = 0;   // |{l in [j-1] : W_l >= value}|
};

struct BinClassification {
  BinClass bin_class = BinClass::strongly_exposed;
  bool prop1 = false;   // c_fill W_j j^phi <= exp(c_nb lambda Wt |Y|)
  bool prop2 = false;   // |{l : W_l >= j^2}|  >= c_upsilon L(j) / (2 lambda)
  bool prop3 = false;   // |{l : W_l >= j^chi}| >= c_upsilon LL(j) / lambda
  ThresholdChoice threshold;   // the Wtilde choice behind prop1
  double log_weight = 0.0;     // ln W_j
  bool rhs_overflow = false;   // prop1 RHS exponent exceeded double range
  bool se_weight_ok = true;    // exposed verdicts: ln W_j >= c_nb lambda j / 2
};

struct BottleneckWitness {
  bool is_bottleneck = false;
  bool cond_weight = false;      // ln W_i >= i / exp((ln ln i)^2)
  bool cond_predecessors = false; // all l < i: ln W_l <= ln W_i / (2 K(i))
  std::optional<std::uint64_t> strongly_exposed_at;  // first i+ found
  bool scan_truncated = false;   // search_cap bound the i+ scan
};

// |{l in [j-1] : ln W_l >= log_threshold}|; empty for j = 1.
std::uint64_t count_heavy_bins(const SendSequence& seq, std::uint64_t j,
                               double log_threshold);

// The positive integer W maximising W * |{l in [j-1]: W_l >= W}| subject to
// the count being at least min{j-1, c_upsilon L(j)/lambda}; W = 1 for j = 1.
// Ties break toward the largest W. Only the step points of the count
// function (floors/ceilings of the weights, plus 1) need scanning.
ThresholdChoice best_threshold(const SendSequence& seq,
                               const ClassifierConstants& cc, std::uint64_t j);

BinClassification classify_bin(const SendSequence& seq,
                               const ClassifierConstants& cc, std::uint64_t j);

BottleneckWitness is_bottleneck(const SendSequence& seq,
                                const ClassifierConstants& cc, std::uint64_t i,
                                std::uint64_t search_cap);

}  // namespace backoff
