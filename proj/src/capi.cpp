#include "backoff/capi.h"

#include <cstring>
#include <string>
#include <vector>

#include "backoff/classify.hpp"
#include "backoff/engine.hpp"
#include "backoff/error.hpp"
#include "backoff/recurrence.hpp"
#include "backoff/runner.hpp"
#include "backoff/send_sequence.hpp"
#include "backoff/version.hpp"

using namespace backoff;

namespace {

thread_local std::string g_last_error;

bkp_status status_of(const error& e) {
  switch (e.code()) {
    case errc::index_unavailable: return BKP_E_INDEX;
    case errc::numeric_overflow: return BKP_E_OVERFLOW;
    case errc::domain_violation: return BKP_E_DOMAIN;
    case errc::parse_error: return BKP_E_PARSE;
    case errc::io_failure: return BKP_E_IO;
    case errc::invalid_family_parameter:
    case errc::validation_error:
    case errc::incompatible_lengths:
    case errc::invalid_initial_population:
    case errc::mode_unsupported:
    case errc::coupling_precondition_violated:
      return BKP_E_INVALID;
    default: return BKP_E_RUNTIME;
  }
}

template <typename F>
bkp_status guarded(F&& f) {
  try {
    f();
    return BKP_OK;
  } catch (const error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BKP_E_RUNTIME;
  }
}

template <typename F>
auto guarded_new(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const error& e) {
    g_last_error = e.what();
    return nullptr;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  }
}

const SendSequence* unwrap(const bkp_sequence* s) {
  return reinterpret_cast<const SendSequence*>(s);
}
ProcessState* unwrap(bkp_process* p) { return reinterpret_cast<ProcessState*>(p); }
const ProcessState* unwrap(const bkp_process* p) {
  return reinterpret_cast<const ProcessState*>(p);
}
bkp_sequence* wrap(SendSequence* s) { return reinterpret_cast<bkp_sequence*>(s); }

}  // namespace

extern "C" {

const char* bkp_version(void) { return kVersion; }
const char* bkp_last_error(void) { return g_last_error.c_str(); }

bkp_sequence* bkp_seq_constant(double p) {
  return guarded_new([&] { return wrap(new SendSequence(SendSequence::constant(p))); });
}
bkp_sequence* bkp_seq_binary_exponential(void) {
  return guarded_new(
      [&] { return wrap(new SendSequence(SendSequence::binary_exponential())); });
}
bkp_sequence* bkp_seq_geometric(double base) {
  return guarded_new(
      [&] { return wrap(new SendSequence(SendSequence::geometric(base))); });
}
bkp_sequence* bkp_seq_polynomial(double exponent) {
  return guarded_new(
      [&] { return wrap(new SendSequence(SendSequence::polynomial(exponent))); });
}
bkp_sequence* bkp_seq_explicit(const double* probs, size_t count) {
  return guarded_new([&] {
    return wrap(new SendSequence(
        SendSequence::explicit_list(std::vector<double>(probs, probs + count))));
  });
}
bkp_sequence* bkp_seq_interleaved(double base, const uint64_t* schedule,
                                  size_t count) {
  return guarded_new([&] {
    return wrap(new SendSequence(SendSequence::interleaved_aloha_exp(
        base, std::vector<std::uint64_t>(schedule, schedule + count))));
  });
}
bkp_sequence* bkp_seq_weakly_exposed(double base, uint32_t k0, double lambda,
                                     int synthetic_constants) {
  return guarded_new([&] {
    ClassifierConstants cc = synthetic_constants
                                 ? ClassifierConstants::synthetic(lambda)
                                 : ClassifierConstants::canonical(lambda);
    return wrap(new SendSequence(
        SendSequence::weakly_exposed_example(base, k0, lambda, cc)));
  });
}
void bkp_seq_destroy(bkp_sequence* seq) {
  delete reinterpret_cast<SendSequence*>(seq);
}

bkp_status bkp_seq_prob(const bkp_sequence* seq, uint64_t k, double* out) {
  return guarded([&] { *out = unwrap(seq)->prob(k); });
}
bkp_status bkp_seq_log_weight(const bkp_sequence* seq, uint64_t k, double* out) {
  return guarded([&] { *out = unwrap(seq)->log_weight(k); });
}
bkp_status bkp_seq_validate_cap(const bkp_sequence* seq, double lambda,
                                uint64_t j_max, uint64_t* first_fail) {
  return guarded([&] {
    CapReport r = unwrap(seq)->validate_cap(lambda, j_max);
    *first_fail = r.first_fail.value_or(0);
  });
}

bkp_status bkp_classify_bin(const bkp_sequence* seq, double lambda,
                            int synthetic_constants, uint64_t j,
                            bkp_bin_class* out) {
  return guarded([&] {
    ClassifierConstants cc = synthetic_constants
                                 ? ClassifierConstants::synthetic(lambda)
                                 : ClassifierConstants::canonical(lambda);
    BinClassification r = classify_bin(*unwrap(seq), cc, j);
    out->bin_class = static_cast<int>(r.bin_class);
    out->prop1 = r.prop1;
    out->prop2 = r.prop2;
    out->prop3 = r.prop3;
    out->threshold = r.threshold.value;
    out->heavy_count = r.threshold.count;
    out->log_weight = r.log_weight;
    out->rhs_overflow = r.rhs_overflow;
    out->se_weight_ok = r.se_weight_ok;
  });
}

bkp_status bkp_fill_horizon(const bkp_sequence* seq, uint32_t j, uint64_t* out) {
  return guarded([&] { *out = fill_horizon(*unwrap(seq), j); });
}
bkp_status bkp_fill_time_bound(double lambda, uint32_t j, double deficit,
                               const double* slack, uint64_t* out) {
  return guarded([&] {
    *out = fill_time_bound(lambda, j, deficit,
                           std::vector<double>(slack, slack + j));
  });
}
bkp_status bkp_fill_trace(const bkp_sequence* seq, double lambda,
                          const double* damping, const double* init, uint32_t j,
                          uint64_t steps, double* out) {
  return guarded([&] {
    ExpectationTrace tr = run_fill_trace(
        *unwrap(seq), lambda, std::vector<double>(damping, damping + j),
        std::vector<double>(init, init + j), steps);
    for (std::size_t t = 0; t < tr.values.size(); ++t)
      std::memcpy(out + t * j, tr.values[t].data(), j * sizeof(double));
  });
}
bkp_status bkp_arrival_trace(const bkp_sequence* seq, double nu,
                             const double* init, uint32_t j, uint64_t steps,
                             double* out) {
  return guarded([&] {
    ExpectationTrace tr = run_arrival_trace(
        *unwrap(seq), nu, std::vector<double>(init, init + j), steps);
    for (std::size_t t = 0; t < tr.values.size(); ++t)
      std::memcpy(out + t * j, tr.values[t].data(), j * sizeof(double));
  });
}
bkp_status bkp_arrival_fixed_point(const bkp_sequence* seq, double nu,
                                   uint32_t j, double* out) {
  return guarded([&] {
    std::vector<double> k = arrival_fixed_point(*unwrap(seq), nu, j);
    std::memcpy(out, k.data(), j * sizeof(double));
  });
}

bkp_process* bkp_process_create(const bkp_sequence* seq, const char* kind,
                                double lambda, uint32_t j, double nu,
                                uint64_t seed, int identity_mode) {
  return guarded_new([&]() -> bkp_process* {
    ProcessOptions o;
    o.mode = identity_mode ? PopulationMode::identities : PopulationMode::counts;
    o.lambda = lambda;
    o.jam_level = j;
    o.arrival_rate = nu;
    o.seed = seed;
    std::string k = kind ? kind : "";
    ProcessKind pk;
    if (k == "backoff") pk = ProcessKind::backoff;
    else if (k == "externally_jammed") pk = ProcessKind::externally_jammed;
    else if (k == "jjammed") pk = ProcessKind::j_jammed;
    else if (k == "two_stream") pk = ProcessKind::two_stream;
    else if (k == "under_backoff") pk = ProcessKind::under_backoff;
    else if (k == "constant_escape") pk = ProcessKind::constant_escape;
    else if (k == "escape") pk = ProcessKind::escape;
    else raise(errc::validation_error, "unknown process kind '" + k + "'");
    return reinterpret_cast<bkp_process*>(
        new ProcessState(pk, *unwrap(seq), o));
  });
}

bkp_status bkp_process_init_counts(bkp_process* p, const uint64_t* by_bin,
                                   size_t count) {
  return guarded([&] {
    unwrap(p)->set_initial_counts(
        std::vector<std::uint64_t>(by_bin, by_bin + count));
  });
}
bkp_status bkp_process_init_poisson(bkp_process* p, const double* means,
                                    size_t count) {
  return guarded([&] {
    unwrap(p)->sample_initial_poisson(std::vector<double>(means, means + count));
  });
}
bkp_status bkp_process_step(bkp_process* p, bkp_step_report* out) {
  return guarded([&] {
    StepReport r = unwrap(p)->step();
    if (out) {
      out->step = r.step;
      out->births = r.births;
      out->total_sends = r.total_sends;
      out->total_escapes = r.total_escapes;
      out->total_arrivals = r.total_arrivals;
      out->backlog = r.backlog;
      out->max_bin = unwrap(p)->max_occupied_bin();
    }
  });
}
bkp_status bkp_process_bin_count(const bkp_process* p, uint32_t bin,
                                 uint64_t* out) {
  return guarded([&] { *out = unwrap(p)->bin_count(bin); });
}
void bkp_process_destroy(bkp_process* p) {
  delete reinterpret_cast<ProcessState*>(p);
}

int bkp_experiment_run(const char* config_text, const char* command,
                       const char* out_dir, const char* format,
                       int synthetic_constants, int has_seed,
                       uint64_t seed_override, char* message,
                       size_t message_len) {
  RunOverrides ov;
  if (has_seed) ov.seed = seed_override;
  if (format && format[0]) ov.format = std::string(format);
  ov.synthetic = synthetic_constants != 0;
  RunOutcome oc = run_command_text(command ? command : "",
                                   config_text ? config_text : "",
                                   out_dir ? out_dir : ".", ov);
  g_last_error = oc.message;
  if (message && message_len > 0) {
    std::snprintf(message, message_len, "%s", oc.message.c_str());
  }
  return oc.exit_code;
}

}  // extern "C"
