/* C interface of the backoff laboratory. All entry points return a status
 * code (bkp_status); bkp_last_error() describes the most recent failure on
 * the calling thread. Handles are opaque and freed with their _destroy
 * function. */
#ifndef BACKOFF_CAPI_H
#define BACKOFF_CAPI_H

#include <stddef.h>
#include <stdint.h>

#if defined(__cplusplus)
extern "C" {
#endif

typedef int bkp_status;
#define BKP_OK 0
#define BKP_E_INVALID 1
#define BKP_E_INDEX 2
#define BKP_E_OVERFLOW 3
#define BKP_E_DOMAIN 4
#define BKP_E_PARSE 5
#define BKP_E_IO 6
#define BKP_E_RUNTIME 7

typedef struct bkp_sequence bkp_sequence;
typedef struct bkp_process bkp_process;

const char* bkp_version(void);
const char* bkp_last_error(void);

/* ---- send sequences ---- */
bkp_sequence* bkp_seq_constant(double p);
bkp_sequence* bkp_seq_binary_exponential(void);
bkp_sequence* bkp_seq_geometric(double base);
bkp_sequence* bkp_seq_polynomial(double exponent);
bkp_sequence* bkp_seq_explicit(const double* probs, size_t count);
bkp_sequence* bkp_seq_interleaved(double base, const uint64_t* schedule,
                                  size_t count);
bkp_sequence* bkp_seq_weakly_exposed(double base, uint32_t k0, double lambda,
                                     int synthetic_constants);
void bkp_seq_destroy(bkp_sequence* seq);

bkp_status bkp_seq_prob(const bkp_sequence* seq, uint64_t k, double* out);
bkp_status bkp_seq_log_weight(const bkp_sequence* seq, uint64_t k, double* out);
/* first_fail receives 0 when every bin passes the cap log W_j <= j ln(2/lambda) */
bkp_status bkp_seq_validate_cap(const bkp_sequence* seq, double lambda,
                                uint64_t j_max, uint64_t* first_fail);

/* ---- classification ---- */
typedef struct bkp_bin_class {
  int bin_class; /* 0 many covered, 1 heavy covered, 2 weakly exposed, 3 strongly exposed */
  int prop1, prop2, prop3;
  double threshold;        /* the maximising integer weight */
  uint64_t heavy_count;    /* bins at or above it */
  double log_weight;
  int rhs_overflow;
  int se_weight_ok;
} bkp_bin_class;

bkp_status bkp_classify_bin(const bkp_sequence* seq, double lambda,
                            int synthetic_constants, uint64_t j,
                            bkp_bin_class* out);

/* ---- deterministic recurrences ---- */
bkp_status bkp_fill_horizon(const bkp_sequence* seq, uint32_t j, uint64_t* out);
bkp_status bkp_fill_time_bound(double lambda, uint32_t j, double deficit,
                               const double* slack, uint64_t* out);
/* out must hold (steps + 1) * j doubles, row-major by time */
bkp_status bkp_fill_trace(const bkp_sequence* seq, double lambda,
                          const double* damping, const double* init, uint32_t j,
                          uint64_t steps, double* out);
bkp_status bkp_arrival_trace(const bkp_sequence* seq, double nu,
                             const double* init, uint32_t j, uint64_t steps,
                             double* out);
bkp_status bkp_arrival_fixed_point(const bkp_sequence* seq, double nu,
                                   uint32_t j, double* out);

/* ---- processes ---- */
typedef struct bkp_step_report {
  uint64_t step;
  uint64_t births;
  uint64_t total_sends;
  uint64_t total_escapes;
  uint64_t total_arrivals;
  uint64_t backlog;
  uint32_t max_bin;
} bkp_step_report;

/* kind: "backoff", "externally_jammed", "jjammed", "two_stream",
 * "under_backoff", "constant_escape", "escape". j is the jam level where
 * the kind uses one; nu the constant-escape arrival rate. */
bkp_process* bkp_process_create(const bkp_sequence* seq, const char* kind,
                                double lambda, uint32_t j, double nu,
                                uint64_t seed, int identity_mode);
bkp_status bkp_process_init_counts(bkp_process* p, const uint64_t* by_bin,
                                   size_t count);
bkp_status bkp_process_init_poisson(bkp_process* p, const double* means,
                                    size_t count);
bkp_status bkp_process_step(bkp_process* p, bkp_step_report* out);
bkp_status bkp_process_bin_count(const bkp_process* p, uint32_t bin,
                                 uint64_t* out);
void bkp_process_destroy(bkp_process* p);

/* ---- experiment runner ----
 * command: classify | trace | simulate | couple | hls-check | veb | plotdata.
 * format: "csv", "jsonl" or NULL for the config's choice. seed_override is
 * honoured when has_seed is nonzero. Returns the CLI exit code contract:
 * 0 ok, 1 validation, 2 runtime, 3 invariant violations detected. message
 * (when non-NULL) receives a short human-readable outcome. */
int bkp_experiment_run(const char* config_text, const char* command,
                       const char* out_dir, const char* format,
                       int synthetic_constants, int has_seed,
                       uint64_t seed_override, char* message,
                       size_t message_len);

#if defined(__cplusplus)
}
#endif

#endif /* BACKOFF_CAPI_H */
