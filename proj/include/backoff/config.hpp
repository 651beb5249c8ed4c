#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "backoff/send_sequence.hpp"

namespace backoff {

struct SequenceSpec {
  std::string family = "binary_exponential";
  double p = 0.5;           // constant
  double base = 2.0;        // geometric / interleaved / weakly exposed
  double exponent = 1.0;    // polynomial
  std::vector<double> probs;
  std::vector<std::uint64_t> schedule;
  std::uint32_t k0 = 3;

  bool operator==(const SequenceSpec&) const = default;
};

struct ObserverSpec {
  std::uint64_t window = 1;
  std::map<std::string, std::vector<std::uint32_t>> noise_sets;
  std::vector<std::uint32_t> bins;

  bool operator==(const ObserverSpec&) const = default;
};

struct ClassifySpec {
  std::uint64_t j_min = 1;
  std::uint64_t j_max = 64;
  bool operator==(const ClassifySpec&) const = default;
};

struct TraceSpec {
  std::string which = "f";  // f | h | F (F = f with zero damping)
  std::uint64_t steps = 100;
  std::string damping = "zero";  // zero | canonical
  std::vector<double> init;      // default: zeros of length j
  double nu = 0.0;               // h traces
  bool operator==(const TraceSpec&) const = default;
};

struct CoupleSpec {
  std::string pair = "standard";  // standard | two_stream | under_backoff
  double lambda_lower = 0.25;     // parse_config defaults this to lambda / 2
  std::uint64_t steps = 1000;
  std::uint64_t seeds = 10;
  bool operator==(const CoupleSpec&) const = default;
};

struct HlsCheckSpec {
  std::uint64_t samples = 1000;
  std::uint32_t j_min = 2;
  std::uint32_t j_max = 16;
  std::uint32_t raises = 4;
  bool mutation = false;
  bool operator==(const HlsCheckSpec&) const = default;
};

struct VebSpec {
  std::uint32_t j0 = 3;
  std::uint64_t horizon = 1000;
  std::uint64_t seeds = 10;
  double shat_floor = -1.0;
  bool operator==(const VebSpec&) const = default;
};

struct PlotSpec {
  std::string input;
  std::vector<std::string> series;
  bool operator==(const PlotSpec&) const = default;
};

struct ExperimentConfig {
  std::string experiment = "experiment";
  std::string kind = "backoff";
  SequenceSpec sequence;
  double lambda = 0.5;
  std::uint64_t horizon = 1000;
  std::uint64_t replicas = 1;
  std::uint64_t base_seed = 42;
  std::string format = "csv";  // csv | jsonl
  std::string mode = "counts";
  std::uint32_t j = 1;
  double nu = 0.0;
  bool synthetic = false;
  std::optional<std::vector<double>> initial_poisson;
  std::optional<std::vector<std::uint64_t>> initial_counts;
  ObserverSpec observers;
  ClassifySpec classify;
  TraceSpec trace;
  CoupleSpec couple;
  HlsCheckSpec hlscheck;
  VebSpec veb;
  PlotSpec plotdata;

  bool operator==(const ExperimentConfig&) const = default;
};

// Parses the key = value / [section] format documented in the README.
// Throws parse_error with line:column context, or validation_error listing
// every violated constraint (not just the first).
ExperimentConfig parse_config(const std::string& text);

std::string render_config(const ExperimentConfig& config);

SendSequence build_sequence(const SequenceSpec& spec, double lambda,
                            bool synthetic);

}  // namespace backoff
