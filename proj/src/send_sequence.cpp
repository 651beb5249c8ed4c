#include "backoff/send_sequence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace backoff {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* family_name(Family f) {
  switch (f) {
    case Family::constant: return "constant";
    case Family::binary_exponential: return "binary_exponential";
    case Family::geometric: return "geometric";
    case Family::polynomial: return "polynomial";
    case Family::explicit_list: return "explicit";
    case Family::interleaved_aloha_exp: return "interleaved_aloha_exp";
    case Family::weakly_exposed_example: return "weakly_exposed_example";
  }
  return "?";
}

SendSequence SendSequence::constant(double p) {
  if (!(p > 0.0 && p <= 1.0))
    raise(errc::invalid_family_parameter, "constant family needs p in (0,1]");
  SendSequence s;
  s.family_ = Family::constant;
  s.p_ = p;
  s.log_w_ = -std::log(p);
  std::ostringstream os;
  os << "constant(" << p << ")";
  s.describe_ = os.str();
  return s;
}

SendSequence SendSequence::binary_exponential() {
  SendSequence s;
  s.family_ = Family::binary_exponential;
  s.describe_ = "binary_exponential";
  return s;
}

SendSequence SendSequence::geometric(double base) {
  if (!(base >= 2.0) || base != std::floor(base))
    raise(errc::invalid_family_parameter, "geometric family needs integer C >= 2");
  SendSequence s;
  s.family_ = Family::geometric;
  s.base_ = base;
  s.log_base_ = std::log(base);
  std::ostringstream os;
  os << "geometric(" << base << ")";
  s.describe_ = os.str();
  return s;
}

SendSequence SendSequence::polynomial(double exponent) {
  if (!(exponent > 0.0))
    raise(errc::invalid_family_parameter, "polynomial family needs c > 0");
  SendSequence s;
  s.family_ = Family::polynomial;
  s.exponent_ = exponent;
  std::ostringstream os;
  os << "polynomial(" << exponent << ")";
  s.describe_ = os.str();
  return s;
}

SendSequence SendSequence::explicit_list(std::vector<double> probs) {
  if (probs.empty())
    raise(errc::invalid_family_parameter, "explicit family needs a non-empty list");
  if (probs.front() != 1.0)
    raise(errc::invalid_family_parameter, "explicit family needs p_0 = 1");
  for (double p : probs)
    if (!(p > 0.0 && p <= 1.0))
      raise(errc::invalid_family_parameter, "explicit entries must lie in (0,1]");
  SendSequence s;
  s.family_ = Family::explicit_list;
  s.probs_ = std::move(probs);
  std::ostringstream os;
  os << "explicit[" << s.probs_.size() << "]";
  s.describe_ = os.str();
  return s;
}

SendSequence SendSequence::interleaved_aloha_exp(double base,
                                                 std::vector<std::uint64_t> schedule) {
  if (!(base >= 2.0) || base != std::floor(base))
    raise(errc::invalid_family_parameter, "interleaved family needs integer C >= 2");
  if (schedule.empty() || schedule.front() != 0)
    raise(errc::invalid_family_parameter, "schedule must start at 0");
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (schedule[i] <= schedule[i - 1])
      raise(errc::invalid_family_parameter, "schedule must be strictly increasing");
  SendSequence s;
  s.family_ = Family::interleaved_aloha_exp;
  s.base_ = base;
  s.log_base_ = std::log(base);
  s.schedule_ = std::move(schedule);
  std::ostringstream os;
  os << "interleaved_aloha_exp(" << base << ", " << s.schedule_.size()
     << " breakpoints)";
  s.describe_ = os.str();
  return s;
}

SendSequence SendSequence::weakly_exposed_example(double base, std::uint32_t k0,
                                                  double lambda) {
  return weakly_exposed_example(base, k0, lambda, ClassifierConstants::canonical(lambda));
}

SendSequence SendSequence::weakly_exposed_example(double base, std::uint32_t k0,
                                                  double lambda,
                                                  const ClassifierConstants& cc) {
  if (!(base >= 2.0) || base != std::floor(base))
    raise(errc::invalid_family_parameter, "weakly-exposed family needs integer C >= 2");
  if (!(lambda > 0.0 && lambda < 1.0))
    raise(errc::invalid_family_parameter, "weakly-exposed family needs lambda in (0,1)");
  SendSequence s;
  s.family_ = Family::weakly_exposed_example;
  s.base_ = base;
  s.log_base_ = std::log(base);

  // Materialize the reachable prefix of a_k = (2C)^(a_{k-1}). Entries past
  // 2^63 cannot be hit by a 64-bit bin index and are dropped.
  const double reach = 9.2e18;
  std::vector<double> sched{0.0};
  while (true) {
    double next = std::pow(2.0 * base, sched.back());
    if (!(next > sched.back())) break;  // stuck at 0 -> 1 handled below
    sched.push_back(next);
    if (next > reach) break;
  }
  // a_0 = 0, a_1 = (2C)^0 = 1, ... the loop above stops once past reach.
  for (std::size_t k = k0; k < sched.size(); ++k) {
    double a = sched[k];
    if (a > reach) break;
    double r = std::ceil(cc.c_upsilon *
                         cc.loglog_scale(static_cast<std::uint64_t>(a)) / lambda);
    double lo = a - r;
    double prev = k > 0 ? sched[k - 1] : -1.0;
    if (lo <= prev || lo < 1.0)
      raise(errc::invalid_family_parameter,
            "weakly-exposed band below a_k overlaps earlier bins; raise k0 or "
            "use smaller constants");
    Band b;
    b.a = a;
    b.lo = lo;
    b.log_w_peak = a * std::log(base);
    b.log_w_band = cc.chi * std::log(a);
    s.bands_.push_back(b);
  }
  std::ostringstream os;
  os << "weakly_exposed_example(C=" << base << ", k0=" << k0
     << ", lambda=" << lambda << ", " << s.bands_.size() << " reachable bands)";
  s.describe_ = os.str();
  return s;
}

double SendSequence::log_weight(std::uint64_t k) const {
  if (k == 0) return 0.0;
  switch (family_) {
    case Family::constant:
      return log_w_;
    case Family::binary_exponential:
      return static_cast<double>(k) * M_LN2;
    case Family::geometric:
      return static_cast<double>(k) * log_base_;
    case Family::polynomial:
      return exponent_ * std::log(static_cast<double>(k));
    case Family::explicit_list:
      if (k >= probs_.size())
        raise(errc::index_unavailable, "explicit sequence has no bin " + std::to_string(k));
      return -std::log(probs_[k]);
    case Family::interleaved_aloha_exp: {
      // interval index = largest i with schedule[i] <= k
      auto it = std::upper_bound(schedule_.begin(), schedule_.end(), k);
      std::size_t idx = static_cast<std::size_t>(it - schedule_.begin()) - 1;
      if (idx % 2 == 0) return static_cast<double>(k) * log_base_;
      return std::log(2.0);
    }
    case Family::weakly_exposed_example: {
      double kd = static_cast<double>(k);
      for (const Band& b : bands_) {
        if (kd == b.a) return b.log_w_peak;
        if (kd >= b.lo && kd < b.a) return b.log_w_band;
      }
      return std::log(2.0);
    }
  }
  return 0.0;
}

double SendSequence::prob(std::uint64_t k) const {
  return std::exp(-log_weight(k));
}

double SendSequence::weight(std::uint64_t k) const {
  if (k == 0) return 1.0;
  if (log_weight(k) > 709.0) return kInf;
  switch (family_) {
    case Family::constant:
      return 1.0 / p_;
    case Family::binary_exponential:
      return std::exp2(static_cast<double>(k));
    case Family::geometric:
      return std::pow(base_, static_cast<double>(k));
    case Family::polynomial:
      return std::pow(static_cast<double>(k), exponent_);
    case Family::explicit_list:
      return 1.0 / probs_[k];
    default:
      return std::exp(log_weight(k));
  }
}

CapReport SendSequence::validate_cap(double lambda, std::uint64_t j_max) const {
  if (!(lambda > 0.0))
    raise(errc::validation_error, "validate_cap needs lambda > 0");
  if (j_max < 1) raise(errc::validation_error, "validate_cap needs j_max >= 1");
  CapReport rep;
  rep.pass.reserve(j_max);
  double cap_slope = std::log(2.0 / lambda);
  for (std::uint64_t j = 1; j <= j_max; ++j) {
    bool ok = log_weight(j) <= static_cast<double>(j) * cap_slope;
    rep.pass.push_back(ok);
    if (!ok && !rep.first_fail) {
      rep.first_fail = j;
      rep.all_pass = false;
    }
  }
  return rep;
}

}  // namespace backoff
