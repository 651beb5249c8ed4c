#include "backoff/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace backoff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sorted distinct log-weights of bins [1, j-1] with multiplicities and
// suffix counts. Built in one pass; a run of equal consecutive values is
// folded cheaply so flat sequences with enormous j stay affordable.
struct WeightHistogram {
  std::vector<double> log_w;        // ascending, distinct
  std::vector<std::uint64_t> suffix; // suffix[i] = #bins with lw >= log_w[i]

  std::uint64_t count_at_least(double log_thr) const {
    auto it = std::lower_bound(log_w.begin(), log_w.end(), log_thr);
    if (it == log_w.end()) return 0;
    return suffix[static_cast<std::size_t>(it - log_w.begin())];
  }
};

WeightHistogram build_histogram(const SendSequence& seq, std::uint64_t j) {
  std::vector<std::pair<double, std::uint64_t>> acc;
  double last = -1.0;
  for (std::uint64_t l = 1; l + 1 <= j; ++l) {
    double lw = seq.log_weight(l);
    if (!acc.empty() && lw == last) {
      ++acc.back().second;
      continue;
    }
    acc.emplace_back(lw, 1);
    last = lw;
  }
  std::sort(acc.begin(), acc.end());
  WeightHistogram h;
  for (const auto& [lw, c] : acc) {
    if (!h.log_w.empty() && h.log_w.back() == lw) {
      h.suffix.back() += c;  // reused as plain count until the suffix pass
      continue;
    }
    h.log_w.push_back(lw);
    h.suffix.push_back(c);
  }
  std::uint64_t run = 0;
  for (std::size_t i = h.suffix.size(); i-- > 0;) {
    run += h.suffix[i];
    h.suffix[i] = run;
  }
  return h;
}

struct Candidate {
  double value;       // +inf when past exact-integer range
  double log_value;
};

// Step points of W |Y_{j,>=W}|: W = 1 and the floors/ceilings of each
// distinct weight. Past 2^53 the float weight itself stands in for both.
std::vector<Candidate> step_candidates(const WeightHistogram& h) {
  std::vector<Candidate> out;
  out.push_back({1.0, 0.0});
  for (double lw : h.log_w) {
    if (lw < 36.0) {  // exp(36) ~ 4.3e15 < 2^53
      double w = std::exp(lw);
      double lo = std::floor(w);
      double hi = std::ceil(w);
      if (lo >= 1.0) out.push_back({lo, std::log(lo)});
      out.push_back({hi, std::log(hi)});
    } else if (lw <= 709.0) {
      out.push_back({std::exp(lw), lw});
    } else {
      out.push_back({kInf, lw});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.log_value < b.log_value; });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Candidate& a, const Candidate& b) {
                          return a.log_value == b.log_value;
                        }),
            out.end());
  return out;
}

ThresholdChoice best_threshold_impl(const WeightHistogram& h,
                                    const ClassifierConstants& cc,
                                    std::uint64_t j) {
  ThresholdChoice best;
  if (j == 1) return best;  // {1, 0, 0}
  double need = std::min(static_cast<double>(j - 1),
                         cc.c_upsilon * cc.log_scale(j) / cc.lambda);
  bool have = false;
  long double best_prod = -1.0L;
  double best_log_score = -kInf;
  for (const Candidate& cand : step_candidates(h)) {
    std::uint64_t cnt = h.count_at_least(cand.log_value);
    if (static_cast<double>(cnt) < need) continue;
    bool exact = cand.value < 9.0e15;
    long double prod = exact ? static_cast<long double>(cand.value) * cnt : -1.0L;
    double log_score = cand.log_value + std::log(static_cast<double>(cnt));
    bool better;
    if (!have) {
      better = true;
    } else if (prod >= 0.0L && best_prod >= 0.0L) {
      better = prod > best_prod || (prod == best_prod && cand.log_value > best.log_value);
    } else {
      better = log_score > best_log_score ||
               (log_score == best_log_score && cand.log_value > best.log_value);
    }
    if (better) {
      have = true;
      best_prod = prod;
      best_log_score = log_score;
      best.value = cand.value;
      best.log_value = cand.log_value;
      best.count = cnt;
    }
  }
  return best;
}

}  // namespace

const char* bin_class_name(BinClass c) {
  switch (c) {
    case BinClass::many_covered: return "many_covered";
    case BinClass::heavy_covered: return "heavy_covered";
    case BinClass::weakly_exposed: return "weakly_exposed";
    case BinClass::strongly_exposed: return "strongly_exposed";
  }
  return "?";
}

std::uint64_t count_heavy_bins(const SendSequence& seq, std::uint64_t j,
                               double log_threshold) {
  std::uint64_t n = 0;
  for (std::uint64_t l = 1; l + 1 <= j; ++l)
    if (seq.log_weight(l) >= log_threshold) ++n;
  return n;
}

ThresholdChoice best_threshold(const SendSequence& seq,
                               const ClassifierConstants& cc, std::uint64_t j) {
  WeightHistogram h = build_histogram(seq, j);
  return best_threshold_impl(h, cc, j);
}

BinClassification classify_bin(const SendSequence& seq,
                               const ClassifierConstants& cc, std::uint64_t j) {
  if (j < 1) raise(errc::validation_error, "classify_bin needs j >= 1");
  WeightHistogram h = build_histogram(seq, j);
  BinClassification out;
  const double jd = static_cast<double>(j);
  out.log_weight = seq.log_weight(j);
  out.threshold = best_threshold_impl(h, cc, j);

  // Prop1 compared in log form: ln(c_fill W_j j^phi) <= c_nb lambda Wt |Y|.
  double lhs_log = std::log(cc.c_fill) + out.log_weight + cc.phi * std::log(jd);
  long double rhs = static_cast<long double>(cc.c_nb) * cc.lambda *
                    out.threshold.value * static_cast<long double>(out.threshold.count);
  out.rhs_overflow = !std::isfinite(static_cast<double>(rhs));
  out.prop1 = out.rhs_overflow || static_cast<long double>(lhs_log) <= rhs;

  out.prop2 = static_cast<double>(h.count_at_least(2.0 * std::log(jd))) >=
              cc.c_upsilon * cc.log_scale(j) / (2.0 * cc.lambda);
  out.prop3 = static_cast<double>(h.count_at_least(cc.chi * std::log(jd))) >=
              cc.c_upsilon * cc.loglog_scale(j) / cc.lambda;

  if (out.prop1)
    out.bin_class = BinClass::many_covered;
  else if (out.prop2)
    out.bin_class = BinClass::heavy_covered;
  else if (out.prop3)
    out.bin_class = BinClass::weakly_exposed;
  else
    out.bin_class = BinClass::strongly_exposed;

  if (is_exposed(out.bin_class))
    out.se_weight_ok = out.log_weight >= cc.c_nb * cc.lambda * jd / 2.0;
  return out;
}

BottleneckWitness is_bottleneck(const SendSequence& seq,
                                const ClassifierConstants& cc, std::uint64_t i,
                                std::uint64_t search_cap) {
  if (i < 16) raise(errc::validation_error, "is_bottleneck needs i >= 16");
  if (search_cap < i) raise(errc::validation_error, "search_cap must be >= i");
  BottleneckWitness w;
  const double id = static_cast<double>(i);
  double lwi = seq.log_weight(i);
  double lnln = std::log(std::log(id));
  w.cond_weight = lwi >= id / std::exp(lnln * lnln);

  double bound = lwi / (2.0 * cc.k_of(i));
  w.cond_predecessors = true;
  for (std::uint64_t l = 1; l < i; ++l) {
    if (seq.log_weight(l) > bound) {
      w.cond_predecessors = false;
      break;
    }
  }

  long double reach = static_cast<long double>(id) *
                      std::exp(std::sqrt(std::log(id)));
  std::uint64_t hi = search_cap;
  if (reach < static_cast<long double>(search_cap)) {
    hi = static_cast<std::uint64_t>(std::floor(static_cast<double>(reach)));
  } else {
    w.scan_truncated = true;
  }
  for (std::uint64_t cand = i; cand <= hi; ++cand) {
    if (classify_bin(seq, cc, cand).bin_class == BinClass::strongly_exposed) {
      w.strongly_exposed_at = cand;
      break;
    }
  }
  w.is_bottleneck =
      w.cond_weight && w.cond_predecessors && w.strongly_exposed_at.has_value();
  return w;
}

}  // namespace backoff
