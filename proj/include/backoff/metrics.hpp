#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "backoff/engine.hpp"
#include "backoff/recurrence.hpp"
#include "backoff/send_sequence.hpp"

namespace backoff {

// Expected number of sends next step from the bins in `set`.
double noise(const std::vector<std::uint64_t>& occupancy, const SendSequence& seq,
             const std::vector<std::uint32_t>& set);

struct SingleSendBound {
  double bound = 1.0;       // exp(-noise / 16)
  bool applicable = false;  // |S| >= floor and noise >= lambda |S| / 80
  double noise_value = 0.0;
};

// Upper bound on P(at most one send next step); the hypothesis floor on |S|
// may be overridden for desk-scale runs (negative = 100 / lambda^2).
SingleSendBound single_send_bound(const std::vector<std::uint64_t>& occupancy,
                                  const SendSequence& seq, double lambda,
                                  const std::vector<std::uint32_t>& set,
                                  double size_floor = -1.0);

struct GofResult {
  double var_ratio = 1.0;
  double chi2_p = 1.0;
  double mean_error_se = 0.0;  // |empirical mean - mean| in standard errors
};

// Dispersion and chi-square fit of replica values against Po(mean), with
// buckets merged so every expected count is at least 5.
GofResult poisson_gof(const std::vector<std::uint64_t>& samples, double mean);

struct BottleConstants {
  double c_b = 0.0;      // 1 / (8 ln(7/lambda))
  double alpha_b = 0.0;  // c_b lambda / 640
  std::uint32_t j = 0;   // floor(c_b ln i)
  static BottleConstants of(double lambda, std::uint64_t i);
};

struct BottleEventFlags {
  bool noise_ok = false;  // N_[j](t) >= alpha_b ln i
  bool old_send = false;  // some send came from a ball born before this step
};

// Flags for one step given the occupancy before it and its report.
BottleEventFlags bottle_events_step(const std::vector<std::uint64_t>& before,
                                    const StepReport& report,
                                    const SendSequence& seq, double lambda,
                                    std::uint64_t i);

struct PseudorandomnessReport {
  OccupancyConditions conditions;
  bool fill_good = false;
  bool refill_good = false;
  double fill_slack = 0.0;    // d - excess(x, 1)
  double coarse_slack = 0.0;  // lambda j / 500 - coarse excess
};

PseudorandomnessReport pseudorandomness_report(
    const std::vector<double>& occupancy, double lambda,
    const ConditionParams& params, const ArrivalProfile& profile,
    const SendSequence& seq);

// One light record per step, cheap enough to keep for long runs.
struct StepStats {
  std::uint64_t step = 0;
  std::uint64_t backlog = 0;
  std::uint64_t escapes = 0;  // this step
  std::uint32_t max_bin = 0;
  bool empty = false;
  std::map<std::string, double> set_noise;
  std::map<std::uint32_t, std::uint64_t> bin_counts;  // tracked bins only
};

struct SummaryWindow {
  std::uint64_t window_start = 0;
  double backlog_mean = 0.0;
  std::map<std::string, double> noise_mean;
  std::map<std::uint32_t, double> bin_mean;
  std::uint64_t escapes_cum = 0;
  std::uint64_t empty_visits = 0;
  std::uint32_t max_bin = 0;
};

struct RunSummary {
  std::vector<SummaryWindow> windows;
  std::optional<std::uint64_t> sojourn;  // first return to the empty state
  bool sojourn_censored = false;
};

RunSummary summarize(const std::vector<StepStats>& trace, std::uint64_t window);

// Observer producing StepStats rows, with optional named noise sets.
class StatsObserver : public StepObserver {
 public:
  explicit StatsObserver(
      std::map<std::string, std::vector<std::uint32_t>> noise_sets = {},
      std::vector<std::uint32_t> tracked_bins = {})
      : noise_sets_(std::move(noise_sets)), tracked_bins_(std::move(tracked_bins)) {}
  void on_step(const ProcessState& state, const StepReport& report) override;
  const std::vector<StepStats>& trace() const { return trace_; }

 private:
  std::map<std::string, std::vector<std::uint32_t>> noise_sets_;
  std::vector<std::uint32_t> tracked_bins_;
  std::vector<StepStats> trace_;
};

}  // namespace backoff
