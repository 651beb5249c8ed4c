#pragma once

#include <cstdint>
#include <vector>

#include "backoff/engine.hpp"
#include "backoff/hls.hpp"

namespace backoff {

struct TransitionRecord {
  std::uint64_t g = 0;
  std::uint64_t tau = 0;
  std::uint32_t j = 0;
  StateType type = StateType::failure;
  RuleTag via = RuleTag::none;
  bool back_transition = false;
};

// The volume process: a j-jammed core whose bin means are tracked by the
// zero-damping fill recurrence and whose high-level state evolves under the
// backoff-bounding rule. On a state change each bin is thinned binomially
// to the new expected count.
class VolumeProcess {
 public:
  VolumeProcess(const RuleParams& params, const HighLevelState& initial,
                std::uint64_t seed);

  // One step: advance the jammed core, apply the rule, thin on change.
  Transition step();

  const HighLevelState& state() const { return state_; }
  const std::vector<double>& means() const { return means_; }
  std::uint64_t clock() const { return t_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t backlog() const;

  void set_counts(const std::vector<std::uint64_t>& counts);
  void sample_counts_poisson(const std::vector<double>& means);
  Rng& rng() { return rng_; }

 private:
  RuleParams params_;
  HighLevelState state_;
  std::vector<double> means_;
  std::vector<std::uint64_t> counts_;  // bins 1..j
  std::uint64_t bin0_ = 0;
  std::uint64_t t_;
  Rng rng_;
};

struct VebOptions {
  std::uint32_t j0 = 3;
  std::uint64_t horizon = 1000;
  std::uint64_t seed = 1;
  bool synthetic = true;
  double shat_floor = -1.0;  // escape-rate support floor; -1 = 100 / lambda^2
};

struct VebResult {
  std::vector<TransitionRecord> transitions;
  std::uint64_t i1_violations = 0;
  std::uint64_t i2_violations = 0;
  std::uint64_t steps = 0;
  std::uint64_t warmup = 0;          // tau_0 = fill horizon
  std::uint64_t max_backlog = 0;     // backoff-process population peak
  std::uint64_t failure_entry = 0;   // first step with failure type, 0 if none
  bool ever_failed = false;
};

// The composite volume-escape-backoff run: a cohort backoff process at
// birth rate 2*lambda, warmed up on forced B-cohort births, coupled with
// the volume process and a chain of escape processes. Asserts the noise
// floor (I1) and the subset invariant (I2) every step.
VebResult veb_run(const SendSequence& seq, double lambda, const VebOptions& opts);

}  // namespace backoff
