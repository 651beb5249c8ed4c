#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "backoff/classify.hpp"
#include "backoff/recurrence.hpp"
#include "backoff/rng.hpp"
#include "backoff/send_sequence.hpp"

namespace backoff {

enum class StateType { failure, initialising, advancing, filling, refilling, stabilising };

const char* state_type_name(StateType t);

// The interface tuple between the volume process and the escape processes:
// generation counter, start step, active bin, expected initial counts, and
// the family of disjoint noise sets.
struct HighLevelState {
  std::uint64_t g = 0;
  std::uint64_t tau = 0;
  std::uint32_t j = 1;
  std::vector<double> z;                           // length j
  std::vector<std::vector<std::uint32_t>> sets;    // disjoint subsets of [j]
  StateType type = StateType::failure;

  bool operator==(const HighLevelState& o) const;
  bool operator!=(const HighLevelState& o) const { return !(*this == o); }
};

// Everything the transition rule needs: the sequence, the classifier
// constants (canonical or synthetic), the damping exponent behind the bin
// targets, and the dwell exponents of the timed guards.
struct RuleParams {
  const SendSequence* seq = nullptr;
  ClassifierConstants cc;
  double lambda = 0.1;
  double dwell_exp_advance = 24.0;     // advancing/filling hold: tau + j^24
  double dwell_exp_refill = 146.0;     // refilling hold: tau + j^(phi+46)
  double dwell_exp_stabilise = 172.0;  // stabilising hold: tau + j^(phi+72)
  bool debug_skip_refill_zeroing = false;  // mutation hook for the axiom checker

  static RuleParams canonical(const SendSequence& seq, double lambda);
  static RuleParams synthetic(const SendSequence& seq, double lambda);

  double phi() const { return cc.phi; }
  double chi() const { return cc.chi; }
  double target(std::uint32_t x) const;  // mu_x under canonical damping
};

enum class RuleTag {
  none,
  failure_hold,            // R1(i)
  heavy_bin_starved,       // R1(ii)/(iii)
  noise_drop_failure,      // R2(i)
  noise_drop_refill,       // R2(ii)
  init_to_advancing,       // R3(i)
  init_to_filling,         // R3(ii)
  init_failure,            // R3 fallback
  fill_complete_advancing, // R4(i)(a)
  fill_complete_filling,   // R4(i)(b)
  fill_complete_failure,   // R4(i) fallback
  hold,                    // R4/R5/R6 (ii)
  refill_to_stabilising,   // R5(i)
  refill_back,             // R5(i) fallback
  stabilise_to_filling,    // R6(i)
  stabilise_back,          // R6(i) fallback
};

const char* rule_tag_name(RuleTag t);

struct Transition {
  HighLevelState next;
  RuleTag tag = RuleTag::none;
};

// State constructors. Each returns a state satisfying its type's shape or
// throws invariant_violation (e.g. advancing requested for an exposed bin).
HighLevelState make_failure_state(std::uint64_t g, std::uint64_t tau, std::uint32_t j);
HighLevelState make_initialising_state(const RuleParams& p, std::uint64_t tau,
                                       std::uint32_t j);
HighLevelState make_advancing_state(const RuleParams& p, std::uint64_t g,
                                    std::uint64_t tau, std::uint32_t j);
HighLevelState make_filling_state(const RuleParams& p, std::uint64_t g,
                                  std::uint64_t tau, std::uint32_t j, double z_j);
HighLevelState make_refilling_state(const RuleParams& p, std::uint64_t g,
                                    std::uint64_t tau, std::uint32_t j,
                                    const std::vector<double>& heavy_z);
HighLevelState make_stabilising_state(const RuleParams& p, std::uint64_t g,
                                      std::uint64_t tau, std::uint32_t j, double z_j);

void check_state_shape(const RuleParams& p, const HighLevelState& s);

// Expected bin counts of the state at time t (the zero-damping fill
// recurrence started from z at tau).
std::vector<double> state_means(const RuleParams& p, const HighLevelState& s,
                                std::uint64_t t);

// sum over bins in `set` of max{0, target_k - state mean at t}.
double missing_mass(const RuleParams& p, const HighLevelState& s,
                    const std::vector<std::uint32_t>& set, std::uint64_t t);

// The transition rule, evaluated in the R1..R6 priority order. `means`
// must be the state means at time t (callers tracking them incrementally
// pass them in; hls() computes them from scratch).
Transition hls_with_means(const RuleParams& p, const HighLevelState& s,
                          const std::vector<double>& means,
                          const std::vector<std::uint64_t>& occupancy,
                          std::uint64_t t);
Transition hls(const RuleParams& p, const HighLevelState& s,
               const std::vector<std::uint64_t>& occupancy, std::uint64_t t);

bool is_back_transition(const HighLevelState& prev, const HighLevelState& next,
                        RuleTag via);

struct AxiomViolation {
  std::size_t sample = 0;
  std::string axiom;
  std::string detail;
};

struct AxiomSample {
  HighLevelState state;
  std::vector<std::uint64_t> occupancy;
  std::uint64_t t = 0;
};

// Verifies T1..T5 directly on each sample and V1..V3 by re-invoking the
// rule on perturbed occupancy vectors (`raises` random raises per sample).
std::vector<AxiomViolation> check_axioms(const RuleParams& p,
                                         const std::vector<AxiomSample>& samples,
                                         Rng& rng, unsigned raises = 4);

// Randomized domain samples for the checker.
std::vector<AxiomSample> sample_axiom_domain(const RuleParams& p,
                                             std::size_t count,
                                             std::uint32_t j_min,
                                             std::uint32_t j_max, Rng& rng);

}  // namespace backoff
