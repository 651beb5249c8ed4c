#include "backoff/recurrence.hpp"

#include <cassert>
#include <cmath>
#include <limits>

namespace backoff {

namespace {

void require_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    raise(errc::validation_error, "birth rate must lie in (0,1)");
}

void advance_fill(const SendSequence& seq, double lambda,
                  const std::vector<double>& damping, std::vector<double>& v,
                  std::vector<double>& scratch) {
  const std::size_t j = v.size();
  scratch.resize(j);
  double below = lambda;  // v_0(t-1)
  for (std::size_t x = 1; x <= j; ++x) {
    double px = seq.prob(x);
    double pxm1 = seq.prob(x - 1);
    scratch[x - 1] = (1.0 - px) * v[x - 1] + (1.0 - damping[x - 1]) * pxm1 * below;
    below = v[x - 1];
  }
  v.swap(scratch);
}

}  // namespace

std::vector<double> canonical_damping(std::uint64_t j, double phi) {
  std::vector<double> g(j);
  for (std::uint64_t x = 1; x <= j; ++x)
    g[x - 1] = 1.0 / (4.0 * std::pow(static_cast<double>(x), phi));
  return g;
}

double limit_mean(const SendSequence& seq, double lambda,
                  const std::vector<double>& damping, std::uint64_t x) {
  require_lambda(lambda);
  if (x == 0) return lambda;
  if (x > damping.size())
    raise(errc::incompatible_lengths, "damping vector shorter than bin index");
  double w = seq.weight(x);
  if (!std::isfinite(w))
    raise(errc::numeric_overflow, "W_x overflows; use log-space accessors");
  double prod = 1.0;
  for (std::uint64_t a = 1; a <= x; ++a) prod *= 1.0 - damping[a - 1];
  return lambda * w * prod;
}

double limit_mean_canonical(const SendSequence& seq, double lambda,
                            std::uint64_t x, double phi) {
  if (x == 0) return lambda;
  double w = seq.weight(x);
  if (!std::isfinite(w))
    raise(errc::numeric_overflow, "W_x overflows; use log-space accessors");
  double prod = 1.0;
  for (std::uint64_t a = 1; a <= x; ++a)
    prod *= 1.0 - 1.0 / (4.0 * std::pow(static_cast<double>(a), phi));
  double mu = lambda * w * prod;
  if (phi >= 5.0) {
    // the 2/3..3/4 envelope only holds for steep damping
    assert(mu >= 2.0 * lambda * w / 3.0 - 1e-9 * lambda * w);
    assert(mu <= 3.0 * lambda * w / 4.0 + 1e-9 * lambda * w);
  }
  return mu;
}

ExpectationTrace run_fill_trace(const SendSequence& seq, double lambda,
                                const std::vector<double>& damping,
                                const std::vector<double>& init,
                                std::uint64_t steps) {
  require_lambda(lambda);
  if (init.empty() || init.size() != damping.size())
    raise(errc::incompatible_lengths, "init and damping must have equal length j >= 1");
  for (double z : init)
    if (!(z >= 0.0)) raise(errc::validation_error, "init entries must be >= 0");
  ExpectationTrace tr;
  tr.kind = TraceKind::fill;
  tr.j = init.size();
  tr.values.reserve(steps + 1);
  tr.values.push_back(init);
  std::vector<double> v = init;
  std::vector<double> scratch;
  for (std::uint64_t t = 1; t <= steps; ++t) {
    advance_fill(seq, lambda, damping, v, scratch);
    tr.values.push_back(v);
  }
  return tr;
}

std::vector<double> run_fill_last(const SendSequence& seq, double lambda,
                                  const std::vector<double>& damping,
                                  const std::vector<double>& init,
                                  std::uint64_t steps) {
  require_lambda(lambda);
  if (init.empty() || init.size() != damping.size())
    raise(errc::incompatible_lengths, "init and damping must have equal length j >= 1");
  std::vector<double> v = init;
  std::vector<double> scratch;
  for (std::uint64_t t = 1; t <= steps; ++t)
    advance_fill(seq, lambda, damping, v, scratch);
  return v;
}

void fill_step(const SendSequence& seq, double lambda, std::vector<double>& v) {
  static thread_local std::vector<double> scratch;
  std::vector<double> zero(v.size(), 0.0);
  advance_fill(seq, lambda, zero, v, scratch);
}

std::uint64_t fill_time_bound(double lambda, std::uint64_t j, double deficit,
                              const std::vector<double>& slack) {
  require_lambda(lambda);
  if (j < 1 || slack.size() < j)
    raise(errc::incompatible_lengths, "need a slack entry for every bin in [j]");
  if (!(deficit >= 0.0)) raise(errc::validation_error, "deficit must be >= 0");
  double m = slack[0];
  for (std::uint64_t k = 1; k < j; ++k) m = std::min(m, slack[k]);
  if (!(m > 0.0 && m <= 1.0))
    raise(errc::validation_error, "slack entries must lie in (0,1]");
  double t = (4.0 / lambda) * static_cast<double>(j) * deficit / m;
  return static_cast<std::uint64_t>(std::ceil(t));
}

std::uint64_t fill_horizon(const SendSequence& seq, std::uint64_t j) {
  if (j < 1) raise(errc::validation_error, "fill_horizon needs j >= 1");
  long double sum = 0.0L;
  for (std::uint64_t x = 1; x <= j; ++x) {
    double w = seq.weight(x);
    if (!std::isfinite(w)) {
      raise(errc::numeric_overflow,
            "sum of weights overflows; log10 of leading weight ~ " +
                std::to_string(seq.log_weight(x) / std::log(10.0)));
    }
    sum += w;
  }
  long double horizon =
      80.0L * static_cast<long double>(j) * static_cast<long double>(j) *
      std::floor(sum);
  if (horizon > 9.2e18L)
    raise(errc::numeric_overflow,
          "fill horizon exceeds 2^63 steps; log10 ~ " +
              std::to_string(static_cast<double>(std::log10(horizon))));
  return static_cast<std::uint64_t>(horizon);
}

ExpectationTrace run_arrival_trace(const SendSequence& seq, double nu,
                                   const std::vector<double>& init,
                                   std::uint64_t steps) {
  if (!(nu >= 0.0)) raise(errc::validation_error, "arrival rate must be >= 0");
  if (init.empty())
    raise(errc::incompatible_lengths, "arrival trace needs j >= 1 initial entries");
  ExpectationTrace tr;
  tr.kind = TraceKind::arrival;
  tr.j = init.size();
  tr.values.reserve(steps + 1);
  tr.values.push_back(init);
  std::vector<double> v = init;
  std::vector<double> next(v.size());
  for (std::uint64_t t = 1; t <= steps; ++t) {
    double below = 0.0;  // v_0 = 0
    for (std::size_t x = 1; x <= v.size(); ++x) {
      next[x - 1] =
          (1.0 - seq.prob(x)) * v[x - 1] + seq.prob(x - 1) * below + nu;
      below = v[x - 1];
    }
    v = next;
    tr.values.push_back(v);
  }
  return tr;
}

std::vector<double> arrival_fixed_point(const SendSequence& seq, double nu,
                                        std::uint64_t j) {
  std::vector<double> k(j);
  for (std::uint64_t x = 1; x <= j; ++x) {
    double w = seq.weight(x);
    if (!std::isfinite(w))
      raise(errc::numeric_overflow, "fixed point overflows at bin " + std::to_string(x));
    k[x - 1] = static_cast<double>(x) * nu * w;
  }
  return k;
}

ArrivalProfile ArrivalProfile::canonical(double lambda, std::uint64_t j) {
  require_lambda(lambda);
  ArrivalProfile p;
  p.log_base = std::log(1.0 / 160.0) +
               (1.0e7 / (lambda * lambda * lambda)) * std::log(lambda / 4.0);
  p.log_level.resize(j);
  double acc = p.log_base;
  for (std::uint64_t l = 1; l <= j; ++l) {
    acc += std::log1p(1.0 / (static_cast<double>(l) * static_cast<double>(l)));
    p.log_level[l - 1] = acc;
  }
  return p;
}

ArrivalProfile ArrivalProfile::synthetic(double base, std::uint64_t j) {
  if (!(base > 0.0)) raise(errc::validation_error, "profile base must be > 0");
  ArrivalProfile p;
  p.log_base = std::log(base);
  p.log_level.resize(j);
  double acc = p.log_base;
  for (std::uint64_t l = 1; l <= j; ++l) {
    acc += std::log1p(1.0 / (static_cast<double>(l) * static_cast<double>(l)));
    p.log_level[l - 1] = acc;
  }
  return p;
}

double ArrivalProfile::log_p(std::uint64_t k) const {
  if (k == 0) return log_base;
  if (k > log_level.size())
    raise(errc::index_unavailable, "arrival profile built for fewer bins");
  return log_level[k - 1];
}

double ArrivalProfile::level_weight(const SendSequence& seq,
                                    std::uint64_t k) const {
  return std::exp(log_p(k) + seq.log_weight(k));
}

double ArrivalProfile::nu_high(std::uint64_t j) {
  return std::pow(std::log(static_cast<double>(j)), -100.0);
}

double ArrivalProfile::nu_low(std::uint64_t j) {
  return std::pow(static_cast<double>(j), -100.0);
}

double excess(const std::vector<double>& occupancy, double delta,
              const ArrivalProfile& profile, const SendSequence& seq) {
  if (!(delta > 0.0)) raise(errc::validation_error, "excess needs delta > 0");
  double s = 0.0;
  for (std::size_t k = 1; k <= occupancy.size(); ++k) {
    double cutoff = delta * profile.level_weight(seq, k);
    s += std::max(0.0, occupancy[k - 1] - cutoff);
  }
  return s;
}

OccupancyConditions check_conditions(const std::vector<double>& occupancy,
                                     double lambda, const ConditionParams& params,
                                     const ArrivalProfile& profile,
                                     const SendSequence& seq) {
  require_lambda(lambda);
  const std::size_t j = occupancy.size();
  OccupancyConditions out;
  out.excess_1 = excess(occupancy, 1.0, profile, seq);
  out.excess_within = out.excess_1 <= params.d;
  double coarse_delta = std::exp(-profile.log_base / 3.0);
  out.excess_coarse = excess(occupancy, coarse_delta, profile, seq);
  out.coarse_excess_within =
      out.excess_coarse <= lambda * static_cast<double>(j) / 500.0;
  out.heavy_rate_within = true;
  out.rate_within = true;
  for (std::size_t k = 1; k <= j; ++k) {
    double rate = seq.prob(k) * occupancy[k - 1];
    bool heavy = params.varpi <= 1.0 ||
                 seq.log_weight(k) >= std::log(params.varpi);  // W_k >= 1 always
    if (heavy) {
      double cap = params.nu * static_cast<double>(k) +
                   (1.0 + params.theta) * std::exp(profile.log_p(k));
      if (rate > cap) out.heavy_rate_within = false;
    }
    if (rate > params.g * static_cast<double>(j) * static_cast<double>(j))
      out.rate_within = false;
  }
  return out;
}

bool good_fill_start(const std::vector<double>& occupancy, double lambda,
                     double d, const ArrivalProfile& profile,
                     const SendSequence& seq) {
  ConditionParams p;
  p.d = d;
  OccupancyConditions c = check_conditions(occupancy, lambda, p, profile, seq);
  return c.excess_within && c.coarse_excess_within;
}

bool good_refill_start(const std::vector<double>& occupancy, double lambda,
                       double d, double varpi, double theta, double g,
                       const ArrivalProfile& profile, const SendSequence& seq) {
  ConditionParams p;
  p.d = d;
  p.varpi = varpi;
  p.theta = theta;
  p.nu = ArrivalProfile::nu_high(occupancy.size());
  p.g = g;
  OccupancyConditions c = check_conditions(occupancy, lambda, p, profile, seq);
  return c.excess_within && c.heavy_rate_within && c.rate_within;
}

}  // namespace backoff
