#pragma once

#include <cstdint>
#include <vector>

#include "backoff/error.hpp"
#include "backoff/send_sequence.hpp"

namespace backoff {

enum class TraceKind { fill, arrival };

// Deterministic mean trajectory of a recurrence: values[t][x-1] is the
// expected count of bin x (x in [j]) after t steps.
struct ExpectationTrace {
  TraceKind kind = TraceKind::fill;
  std::uint64_t j = 0;
  std::uint64_t origin = 0;
  std::vector<std::vector<double>> values;
};

// gamma_x = 1 / (4 x^phi) for x in [j].
std::vector<double> canonical_damping(std::uint64_t j, double phi = 100.0);

// Limit mean of bin x under damping: lambda W_x prod_{a<=x} (1 - damping_a);
// lambda for x = 0. Throws numeric_overflow when W_x is unrepresentable.
double limit_mean(const SendSequence& seq, double lambda,
                  const std::vector<double>& damping, std::uint64_t x);

// Limit mean under the canonical damping. For phi >= 5 the result is
// checked against the 2 lambda W_x / 3 .. 3 lambda W_x / 4 envelope.
double limit_mean_canonical(const SendSequence& seq, double lambda,
                            std::uint64_t x, double phi = 100.0);

// Mean-fill trajectory: row 0 is init, then
//   v_x(t) = (1 - p_x) v_x(t-1) + (1 - damping_x) p_{x-1} v_{x-1}(t-1)
// with v_0(t) = lambda throughout.
ExpectationTrace run_fill_trace(const SendSequence& seq, double lambda,
                                const std::vector<double>& damping,
                                const std::vector<double>& init,
                                std::uint64_t steps);

// Final row only; O(j) memory for long horizons.
std::vector<double> run_fill_last(const SendSequence& seq, double lambda,
                                  const std::vector<double>& damping,
                                  const std::vector<double>& init,
                                  std::uint64_t steps);

// One in-place step of the fill recurrence with zero damping.
void fill_step(const SendSequence& seq, double lambda, std::vector<double>& v);

// ceil((4/lambda) j R / min_k slack_k): steps after which every bin in [j]
// is guaranteed full in expectation under the fill-time law's hypotheses.
std::uint64_t fill_time_bound(double lambda, std::uint64_t j, double deficit,
                              const std::vector<double>& slack);

// 80 j^2 floor(sum_{x in [j]} W_x), the guaranteed fill horizon.
std::uint64_t fill_horizon(const SendSequence& seq, std::uint64_t j);

// Mean trajectory of a constant-arrival process: row 0 is init, then
//   v_x(t) = (1 - p_x) v_x(t-1) + p_{x-1} v_{x-1}(t-1) + nu
// with v_0(t) = 0 throughout.
ExpectationTrace run_arrival_trace(const SendSequence& seq, double nu,
                                   const std::vector<double>& init,
                                   std::uint64_t steps);

// Fixed point of the arrival recurrence: x nu W_x for x in [j].
std::vector<double> arrival_fixed_point(const SendSequence& seq, double nu,
                                        std::uint64_t j);

// Per-bin arrival profile delta P_k W_k and the derived rates, kept in log
// space because the canonical base is doubly-exponentially small.
struct ArrivalProfile {
  double log_base = 0.0;              // ln xi
  std::vector<double> log_level;      // log_level[k-1] = ln P_k, k >= 1

  static ArrivalProfile canonical(double lambda, std::uint64_t j);
  static ArrivalProfile synthetic(double base, std::uint64_t j);

  double log_p(std::uint64_t k) const;       // ln P_k
  // P_k W_k, underflow-to-zero allowed.
  double level_weight(const SendSequence& seq, std::uint64_t k) const;
  static double nu_high(std::uint64_t j);    // (ln j)^-100
  static double nu_low(std::uint64_t j);     // j^-100
};

// sum_k max{0, x_k - delta P_k W_k}.
double excess(const std::vector<double>& occupancy, double delta,
              const ArrivalProfile& profile, const SendSequence& seq);

struct OccupancyConditions {
  bool excess_within = false;        // excess(x, 1) <= d
  bool coarse_excess_within = false; // excess(x, xi^{-1/3}) <= lambda j / 500
  bool heavy_rate_within = false;    // W_k >= varpi: p_k x_k <= nu k + (1+theta) P_k
  bool rate_within = false;          // all k: p_k x_k <= G j^2
  double excess_1 = 0.0;
  double excess_coarse = 0.0;
};

struct ConditionParams {
  double d = 0.0;
  double varpi = 0.0;
  double theta = 0.0;
  double nu = 0.0;
  double g = 1.0;
};

OccupancyConditions check_conditions(const std::vector<double>& occupancy,
                                     double lambda, const ConditionParams& params,
                                     const ArrivalProfile& profile,
                                     const SendSequence& seq);

// Good beginning for the advancing/filling phases: conditions 1 and 2.
bool good_fill_start(const std::vector<double>& occupancy, double lambda,
                     double d, const ArrivalProfile& profile,
                     const SendSequence& seq);

// Good beginning for the refilling/stabilising phases: conditions 1, 3 (at
// nu_high) and 4.
bool good_refill_start(const std::vector<double>& occupancy, double lambda,
                       double d, double varpi, double theta, double g,
                       const ArrivalProfile& profile, const SendSequence& seq);

}  // namespace backoff
