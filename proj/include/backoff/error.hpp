#pragma once

#include <stdexcept>
#include <string>

namespace backoff {

enum class errc {
  ok = 0,
  invalid_family_parameter,
  index_unavailable,
  numeric_overflow,
  incompatible_lengths,
  invalid_initial_population,
  mode_unsupported,
  coupling_precondition_violated,
  invariant_violation,
  domain_violation,
  parse_error,
  validation_error,
  io_failure,
  unknown_series,
  insufficient_samples,
};

const char* errc_name(errc c);

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
  throw error(code, what);
}

}  // namespace backoff
