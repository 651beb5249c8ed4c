#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "backoff/error.hpp"
#include "backoff/rng.hpp"
#include "backoff/send_sequence.hpp"

namespace backoff {

enum class ProcessKind {
  backoff,
  externally_jammed,
  j_jammed,
  two_stream,
  under_backoff,
  constant_escape,
  escape,
};

const char* process_kind_name(ProcessKind k);

enum class PopulationMode { counts, identities };

enum class BirthKind { poisson, none, fixed };

// Ball names follow the (birth step, entry bin, ordinal) scheme.
using BallId = std::uint64_t;
inline BallId make_ball(std::uint64_t step, std::uint32_t bin, std::uint32_t ord) {
  return (step << 26) | (static_cast<std::uint64_t>(bin) << 14) | ord;
}

struct StepReport {
  std::uint64_t step = 0;
  std::uint64_t births = 0;
  std::map<std::uint32_t, std::uint64_t> sends;     // per bin, all streams
  std::map<std::uint32_t, std::uint64_t> escapes;
  std::map<std::uint32_t, std::uint64_t> arrivals;
  std::uint64_t total_sends = 0;
  std::uint64_t total_escapes = 0;
  std::uint64_t total_arrivals = 0;
  std::uint64_t backlog = 0;  // population after the step
};

struct ProcessOptions {
  PopulationMode mode = PopulationMode::counts;
  BirthKind birth = BirthKind::poisson;
  double lambda = 0.1;          // total birth rate, split across streams
  std::uint64_t fixed_births = 0;
  std::uint32_t jam_level = 1;  // j for j_jammed / constant_escape / escape
  double arrival_rate = 0.0;    // nu for constant_escape
  std::vector<std::vector<std::uint32_t>> noise_sets;  // escape kind
  double shat_floor = -1.0;     // escape kind; default 100 / lambda^2
  std::uint32_t cohorts = 1;    // backoff only; two_stream/under_backoff fix it
  std::uint64_t start_time = 0;
  std::uint64_t seed = 0;
  bool check_conservation = false;
};

class ProcessState {
 public:
  ProcessState(ProcessKind kind, const SendSequence& seq, ProcessOptions opts);

  // Initial populations land in stream 0 unless stated otherwise; bins are
  // 1-based (bin 0 only ever holds newborns mid-step since p_0 = 1).
  void set_initial_counts(const std::vector<std::uint64_t>& by_bin,
                          std::uint32_t stream = 0);
  void sample_initial_poisson(const std::vector<double>& means,
                              std::uint32_t stream = 0);

  StepReport step();
  StepReport step_with(Rng& rng);

  ProcessKind kind() const { return kind_; }
  PopulationMode mode() const { return opts_.mode; }
  std::uint64_t clock() const { return t_; }
  std::uint32_t streams() const { return static_cast<std::uint32_t>(pop_.size()); }
  const SendSequence& sequence() const { return *seq_; }
  const ProcessOptions& options() const { return opts_; }

  std::uint64_t backlog() const;
  bool empty() const { return backlog() == 0; }
  std::uint64_t bin_count(std::uint32_t bin) const;
  std::uint64_t stream_bin_count(std::uint32_t stream, std::uint32_t bin) const;
  std::uint32_t max_occupied_bin() const;
  std::vector<std::uint64_t> counts_upto(std::uint32_t j) const;
  const std::vector<BallId>& balls(std::uint32_t stream, std::uint32_t bin) const;
  std::vector<std::uint32_t> occupied_bins() const;

  double last_arrival_rate() const { return last_nu_; }
  std::uint64_t cumulative_escapes() const { return cumulative_escapes_; }

  Rng& rng() { return rng_; }

  friend class StandardCoupling;

 private:
  struct Stream {
    // exactly one of these is live, per mode
    std::map<std::uint32_t, std::uint64_t> counts;
    std::map<std::uint32_t, std::vector<BallId>> balls;
  };

  double stream_birth_mean() const;
  double escape_arrival_rate() const;  // nu of the escape kind

  ProcessKind kind_;
  const SendSequence* seq_;
  ProcessOptions opts_;
  std::uint64_t t_;
  std::vector<Stream> pop_;
  Rng rng_;
  double last_nu_ = 1.0;
  std::uint64_t cumulative_escapes_ = 0;
};

class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void on_step(const ProcessState& state, const StepReport& report) = 0;
};

// Applies step() horizon times, invoking each observer after each step.
void run(ProcessState& state, std::uint64_t horizon,
         const std::vector<StepObserver*>& observers);

enum class CouplingKind { backoff_pair, two_stream_under, under_backoff_under };

struct CoupledStepResult {
  StepReport lower;
  StepReport upper;
  std::uint64_t subset_violations = 0;  // bins where lower !<= upper
};

// Synchronized-send standard coupling. Supported pairs:
//  - backoff_pair: backoff (rate lambda') under backoff (rate lambda >= lambda')
//  - two_stream_under: two-stream under backoff with cohorts {A,B}, equal rate
//  - under_backoff_under: under-backoff under backoff with cohorts {A,B,C}
// Both processes must use identity mode; the coupling owns the shared stream.
class StandardCoupling {
 public:
  StandardCoupling(CouplingKind kind, const SendSequence& seq, double lambda_lower,
                   double lambda_upper, std::uint64_t seed);

  CoupledStepResult step();

  const ProcessState& lower() const { return lower_; }
  const ProcessState& upper() const { return upper_; }
  std::uint64_t total_violations() const { return violations_; }

 private:
  CouplingKind kind_;
  ProcessState lower_;
  ProcessState upper_;
  Rng rng_;
  std::uint64_t violations_ = 0;
};

}  // namespace backoff
