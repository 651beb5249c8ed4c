#include "backoff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

namespace backoff {

double noise(const std::vector<std::uint64_t>& occupancy, const SendSequence& seq,
             const std::vector<std::uint32_t>& set) {
  double s = 0.0;
  for (std::uint32_t bin : set) {
    if (bin < 1 || bin > occupancy.size()) continue;  // empty bins contribute 0
    s += seq.prob(bin) * static_cast<double>(occupancy[bin - 1]);
  }
  return s;
}

SingleSendBound single_send_bound(const std::vector<std::uint64_t>& occupancy,
                                  const SendSequence& seq, double lambda,
                                  const std::vector<std::uint32_t>& set,
                                  double size_floor) {
  SingleSendBound out;
  out.noise_value = noise(occupancy, seq, set);
  double floor_v = size_floor >= 0.0 ? size_floor : 100.0 / (lambda * lambda);
  out.applicable =
      static_cast<double>(set.size()) >= floor_v &&
      out.noise_value >= lambda * static_cast<double>(set.size()) / 80.0;
  out.bound = std::exp(-out.noise_value / 16.0);
  return out;
}

GofResult poisson_gof(const std::vector<std::uint64_t>& samples, double mean) {
  if (samples.size() < 100)
    raise(errc::insufficient_samples, "poisson_gof needs at least 100 samples");
  if (!(mean >= 0.0)) raise(errc::validation_error, "mean must be >= 0");
  const double n = static_cast<double>(samples.size());
  GofResult out;

  double sum = 0.0;
  std::uint64_t max_v = 0;
  for (std::uint64_t v : samples) {
    sum += static_cast<double>(v);
    max_v = std::max(max_v, v);
  }
  double emp_mean = sum / n;
  double ss = 0.0;
  for (std::uint64_t v : samples) {
    double d = static_cast<double>(v) - emp_mean;
    ss += d * d;
  }
  double var = ss / (n - 1.0);

  if (mean < 1e-12) {
    bool all_zero = max_v == 0;
    out.var_ratio = all_zero ? 1.0 : std::numeric_limits<double>::infinity();
    out.chi2_p = all_zero ? 1.0 : 0.0;
    out.mean_error_se = all_zero ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
  }
  out.var_ratio = var / mean;
  out.mean_error_se = std::abs(emp_mean - mean) / std::sqrt(mean / n);

  // observed histogram
  std::vector<double> obs(max_v + 1, 0.0);
  for (std::uint64_t v : samples) obs[v] += 1.0;

  // expected counts under Po(mean), tail mass folded into the last cell
  std::vector<double> expv(max_v + 2, 0.0);
  double pmf = std::exp(-mean);
  double cdf = 0.0;
  for (std::uint64_t k = 0; k <= max_v; ++k) {
    expv[k] = n * pmf;
    cdf += pmf;
    pmf *= mean / static_cast<double>(k + 1);
  }
  expv[max_v + 1] = n * std::max(0.0, 1.0 - cdf);
  obs.push_back(0.0);

  // merge consecutive cells until each bucket expects at least 5
  std::vector<std::pair<double, double>> buckets;  // (obs, exp)
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t k = 0; k < expv.size(); ++k) {
    o_acc += obs[k];
    e_acc += expv[k];
    if (e_acc >= 5.0) {
      buckets.emplace_back(o_acc, e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 || o_acc > 0.0) {
    if (!buckets.empty()) {
      buckets.back().first += o_acc;
      buckets.back().second += e_acc;
    } else {
      buckets.emplace_back(o_acc, e_acc);
    }
  }
  if (buckets.size() < 2) {
    out.chi2_p = 1.0;
    return out;
  }
  double chi2 = 0.0;
  for (const auto& [o, e] : buckets) chi2 += (o - e) * (o - e) / e;
  double dof = static_cast<double>(buckets.size() - 1);
  out.chi2_p = boost::math::gamma_q(dof / 2.0, chi2 / 2.0);
  return out;
}

BottleConstants BottleConstants::of(double lambda, std::uint64_t i) {
  if (!(lambda > 0.0 && lambda < 1.0))
    raise(errc::validation_error, "bottle constants need lambda in (0,1)");
  if (i < 16) raise(errc::validation_error, "bottle events need i >= 16");
  BottleConstants c;
  c.c_b = 1.0 / (8.0 * std::log(7.0 / lambda));
  c.alpha_b = c.c_b * lambda / 640.0;
  c.j = static_cast<std::uint32_t>(
      std::floor(c.c_b * std::log(static_cast<double>(i))));
  return c;
}

BottleEventFlags bottle_events_step(const std::vector<std::uint64_t>& before,
                                    const StepReport& report,
                                    const SendSequence& seq, double lambda,
                                    std::uint64_t i) {
  BottleConstants c = BottleConstants::of(lambda, i);
  BottleEventFlags f;
  double n = 0.0;
  for (std::uint32_t bin = 1; bin <= c.j && bin <= before.size(); ++bin)
    n += seq.prob(bin) * static_cast<double>(before[bin - 1]);
  f.noise_ok = n >= c.alpha_b * std::log(static_cast<double>(i));
  for (const auto& [bin, cnt] : report.sends) {
    if (bin >= 1 && cnt > 0) {
      f.old_send = true;  // bin-0 sends are newborn sends, excluded
      break;
    }
  }
  return f;
}

PseudorandomnessReport pseudorandomness_report(
    const std::vector<double>& occupancy, double lambda,
    const ConditionParams& params, const ArrivalProfile& profile,
    const SendSequence& seq) {
  PseudorandomnessReport rep;
  rep.conditions = check_conditions(occupancy, lambda, params, profile, seq);
  rep.fill_good = rep.conditions.excess_within && rep.conditions.coarse_excess_within;
  rep.refill_good = rep.conditions.excess_within &&
                    rep.conditions.heavy_rate_within && rep.conditions.rate_within;
  rep.fill_slack = params.d - rep.conditions.excess_1;
  rep.coarse_slack = lambda * static_cast<double>(occupancy.size()) / 500.0 -
                     rep.conditions.excess_coarse;
  return rep;
}

RunSummary summarize(const std::vector<StepStats>& trace, std::uint64_t window) {
  if (window < 1) raise(errc::validation_error, "window must be >= 1");
  RunSummary out;
  std::uint64_t escapes_cum = 0;
  SummaryWindow cur;
  std::uint64_t in_window = 0;
  std::map<std::string, double> noise_acc;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const StepStats& s = trace[i];
    if (in_window == 0) {
      cur = SummaryWindow{};
      cur.window_start = s.step;
    }
    cur.backlog_mean += static_cast<double>(s.backlog);
    escapes_cum += s.escapes;
    if (s.empty) cur.empty_visits += 1;
    cur.max_bin = std::max(cur.max_bin, s.max_bin);
    for (const auto& [name, v] : s.set_noise) noise_acc[name] += v;
    for (const auto& [bin, v] : s.bin_counts)
      cur.bin_mean[bin] += static_cast<double>(v);
    ++in_window;
    if (in_window == window || i + 1 == trace.size()) {
      cur.backlog_mean /= static_cast<double>(in_window);
      for (auto& [name, v] : noise_acc)
        cur.noise_mean[name] = v / static_cast<double>(in_window);
      for (auto& [bin, v] : cur.bin_mean) v /= static_cast<double>(in_window);
      noise_acc.clear();
      cur.escapes_cum = escapes_cum;
      out.windows.push_back(cur);
      in_window = 0;
    }
    if (!out.sojourn && s.empty) out.sojourn = s.step;
  }
  if (!out.sojourn && !trace.empty()) out.sojourn_censored = true;
  return out;
}

void StatsObserver::on_step(const ProcessState& state, const StepReport& report) {
  StepStats s;
  s.step = report.step;
  s.backlog = report.backlog;
  s.escapes = report.total_escapes;
  s.max_bin = state.max_occupied_bin();
  s.empty = report.backlog == 0;
  if (!noise_sets_.empty()) {
    std::uint32_t top = 0;
    for (const auto& [name, set] : noise_sets_)
      for (std::uint32_t b : set) top = std::max(top, b);
    std::vector<std::uint64_t> occ = state.counts_upto(top);
    for (const auto& [name, set] : noise_sets_)
      s.set_noise[name] = noise(occ, state.sequence(), set);
  }
  for (std::uint32_t bin : tracked_bins_) s.bin_counts[bin] = state.bin_count(bin);
  trace_.push_back(std::move(s));
}

}  // namespace backoff
