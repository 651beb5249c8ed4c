#include "backoff/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace backoff {

namespace {

// Per-step send bookkeeping for every stream.
struct SendSets {
  std::vector<std::map<std::uint32_t, std::uint64_t>> counts;
  std::vector<std::map<std::uint32_t, std::vector<BallId>>> balls;
  std::vector<std::uint64_t> per_stream;
  std::uint64_t total = 0;
};

struct EscapeSets {
  std::vector<std::map<std::uint32_t, std::uint64_t>> counts;
  std::vector<std::map<std::uint32_t, std::vector<BallId>>> balls;
  std::uint64_t total = 0;
};

std::vector<BallId> sorted_diff(const std::vector<BallId>& a,
                                const std::vector<BallId>& b) {
  std::vector<BallId> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

// Escape decisions are a pure function of the send sets plus (for the
// two-stream rule) two shared draws, so the plain and coupled step paths
// share this.
EscapeSets decide_escapes(ProcessKind kind, const ProcessOptions& opts,
                          PopulationMode mode, const SendSets& s, Rng& rng) {
  const std::uint32_t n = static_cast<std::uint32_t>(s.counts.size());
  EscapeSets e;
  e.counts.resize(n);
  e.balls.resize(n);

  auto escape_one = [&](std::uint32_t stream, std::uint32_t bin,
                        std::uint64_t ball_index) {
    e.counts[stream][bin] = 1;
    e.total += 1;
    if (mode == PopulationMode::identities)
      e.balls[stream][bin].push_back(s.balls[stream].at(bin)[ball_index]);
  };
  auto escape_all_from = [&](std::uint32_t stream, std::uint32_t min_bin) {
    for (const auto& [bin, cnt] : s.counts[stream]) {
      if (bin < min_bin || cnt == 0) continue;
      e.counts[stream][bin] = cnt;
      e.total += cnt;
      if (mode == PopulationMode::identities)
        e.balls[stream][bin] = s.balls[stream].at(bin);
    }
  };
  auto unique_sender = [&](std::uint32_t stream) {
    for (const auto& [bin, cnt] : s.counts[stream])
      if (cnt > 0) return bin;
    raise(errc::invariant_violation, "no sender found");
  };

  switch (kind) {
    case ProcessKind::externally_jammed:
      break;
    case ProcessKind::backoff:
      if (s.total == 1) {
        for (std::uint32_t st = 0; st < n; ++st)
          if (s.per_stream[st] == 1) escape_one(st, unique_sender(st), 0);
      }
      break;
    case ProcessKind::j_jammed:
    case ProcessKind::constant_escape:
    case ProcessKind::escape:
      for (std::uint32_t st = 0; st < n; ++st)
        escape_all_from(st, opts.jam_level);
      break;
    case ProcessKind::two_stream: {
      bool a_quiet = s.per_stream[0] == 0;
      bool b_quiet = s.per_stream[1] == 0;
      if (a_quiet != b_quiet) {
        std::uint32_t d = a_quiet ? 1 : 0;
        std::uint64_t r = rng.uniform_index(s.per_stream[d]);
        std::uint32_t chosen = 0;
        for (const auto& [bin, cnt] : s.counts[d]) {
          if (r < cnt) {
            chosen = bin;
            break;
          }
          r -= cnt;
        }
        std::uint64_t q = rng.uniform_index(s.counts[d].at(chosen));
        escape_one(d, chosen, q);
      }
      break;
    }
    case ProcessKind::under_backoff: {
      std::uint64_t sab = s.per_stream[0] + s.per_stream[1];
      if (sab == 1) {
        std::uint32_t d = s.per_stream[0] == 1 ? 0 : 1;
        escape_one(d, unique_sender(d), 0);
      }
      if (s.total == 1 && s.per_stream[2] == 1)
        escape_one(2, unique_sender(2), 0);
      break;
    }
  }
  return e;
}

}  // namespace

const char* process_kind_name(ProcessKind k) {
  switch (k) {
    case ProcessKind::backoff: return "backoff";
    case ProcessKind::externally_jammed: return "externally_jammed";
    case ProcessKind::j_jammed: return "jjammed";
    case ProcessKind::two_stream: return "two_stream";
    case ProcessKind::under_backoff: return "under_backoff";
    case ProcessKind::constant_escape: return "constant_escape";
    case ProcessKind::escape: return "escape";
  }
  return "?";
}

ProcessState::ProcessState(ProcessKind kind, const SendSequence& seq,
                           ProcessOptions opts)
    : kind_(kind), seq_(&seq), opts_(opts), t_(opts.start_time), rng_(opts.seed) {
  std::uint32_t streams = 1;
  switch (kind) {
    case ProcessKind::backoff:
      if (opts_.cohorts < 1 || opts_.cohorts > 3)
        raise(errc::validation_error, "backoff supports 1..3 cohorts");
      streams = opts_.cohorts;
      break;
    case ProcessKind::two_stream:
      streams = 2;
      break;
    case ProcessKind::under_backoff:
      streams = 3;
      break;
    default:
      streams = 1;
      break;
  }
  if (opts_.birth == BirthKind::poisson && !(opts_.lambda > 0.0))
    raise(errc::validation_error, "poisson births need lambda > 0");
  if (kind == ProcessKind::constant_escape || kind == ProcessKind::escape) {
    opts_.birth = BirthKind::none;
    if (opts_.jam_level < 1)
      raise(errc::validation_error, "escape processes need j >= 1");
  }
  if (kind == ProcessKind::j_jammed && opts_.jam_level < 1)
    raise(errc::validation_error, "j-jammed needs j >= 1");
  if (kind == ProcessKind::constant_escape &&
      !(opts_.arrival_rate >= 0.0 && opts_.arrival_rate <= 1.0))
    raise(errc::validation_error, "constant-escape arrival rate must lie in [0,1]");
  if (kind == ProcessKind::escape) {
    for (const auto& set : opts_.noise_sets)
      for (std::uint32_t b : set)
        if (b < 1 || b > opts_.jam_level)
          raise(errc::validation_error, "noise sets must be subsets of [j]");
  }
  pop_.resize(streams);
}

void ProcessState::set_initial_counts(const std::vector<std::uint64_t>& by_bin,
                                      std::uint32_t stream) {
  if (stream >= streams())
    raise(errc::invalid_initial_population, "no such stream");
  if (kind_ == ProcessKind::j_jammed || kind_ == ProcessKind::constant_escape ||
      kind_ == ProcessKind::escape) {
    for (std::size_t i = opts_.jam_level; i < by_bin.size(); ++i)
      if (by_bin[i] > 0)
        raise(errc::invalid_initial_population, "initial mass above bin j");
  }
  Stream& st = pop_[stream];
  for (std::size_t i = 0; i < by_bin.size(); ++i) {
    std::uint32_t bin = static_cast<std::uint32_t>(i + 1);
    std::uint64_t n = by_bin[i];
    if (n == 0) continue;
    if (opts_.mode == PopulationMode::counts) {
      st.counts[bin] += n;
    } else {
      auto& v = st.balls[bin];
      for (std::uint64_t k = 0; k < n; ++k)
        v.push_back(make_ball(t_, bin, static_cast<std::uint32_t>(v.size() + 1)));
    }
  }
}

void ProcessState::sample_initial_poisson(const std::vector<double>& means,
                                          std::uint32_t stream) {
  std::vector<std::uint64_t> counts(means.size());
  for (std::size_t i = 0; i < means.size(); ++i) counts[i] = rng_.poisson(means[i]);
  set_initial_counts(counts, stream);
}

double ProcessState::stream_birth_mean() const {
  return opts_.lambda / static_cast<double>(streams());
}

double ProcessState::escape_arrival_rate() const {
  const double lam = opts_.lambda;
  const double floor_v =
      opts_.shat_floor >= 0.0 ? opts_.shat_floor : 100.0 / (lam * lam);
  std::uint64_t shat = 0;
  for (const auto& set : opts_.noise_sets) {
    double noise = 0.0;
    for (std::uint32_t b : set)
      noise += seq_->prob(b) * static_cast<double>(bin_count(b));
    if (noise <= lam * static_cast<double>(set.size()) / 80.0) shat += set.size();
  }
  double xi = static_cast<double>(shat) >= floor_v
                  ? lam * static_cast<double>(shat) / 80.0
                  : 0.0;
  return std::exp(-xi / 192.0);
}

StepReport ProcessState::step() { return step_with(rng_); }

StepReport ProcessState::step_with(Rng& rng) {
  const std::uint64_t t = t_ + 1;
  const std::uint32_t n_streams = streams();
  StepReport rep;
  rep.step = t;

  double nu = 0.0;
  if (kind_ == ProcessKind::escape) {
    nu = escape_arrival_rate();
    last_nu_ = nu;
  } else if (kind_ == ProcessKind::constant_escape) {
    nu = opts_.arrival_rate;
    last_nu_ = nu;
  }

  const std::uint64_t before = backlog();

  // births, shared ordinal space across streams
  std::uint32_t ord = 0;
  for (std::uint32_t st = 0; st < n_streams; ++st) {
    std::uint64_t n = 0;
    switch (opts_.birth) {
      case BirthKind::poisson: n = rng.poisson(stream_birth_mean()); break;
      case BirthKind::none: n = 0; break;
      case BirthKind::fixed: n = st == 0 ? opts_.fixed_births : 0; break;
    }
    rep.births += n;
    if (n == 0) continue;
    if (opts_.mode == PopulationMode::counts) {
      pop_[st].counts[0] += n;
    } else {
      auto& v = pop_[st].balls[0];
      for (std::uint64_t k = 0; k < n; ++k) v.push_back(make_ball(t, 0, ++ord));
    }
  }

  // sends
  SendSets sends;
  sends.counts.resize(n_streams);
  sends.balls.resize(n_streams);
  sends.per_stream.assign(n_streams, 0);
  for (std::uint32_t st = 0; st < n_streams; ++st) {
    if (opts_.mode == PopulationMode::counts) {
      for (const auto& [bin, cnt] : pop_[st].counts) {
        std::uint64_t k = rng.binomial(cnt, seq_->prob(bin));
        if (k == 0) continue;
        sends.counts[st][bin] = k;
        sends.per_stream[st] += k;
      }
    } else {
      for (const auto& [bin, balls] : pop_[st].balls) {
        double p = seq_->prob(bin);
        std::vector<BallId> sent;
        for (BallId b : balls)
          if (rng.bernoulli(p)) sent.push_back(b);
        if (sent.empty()) continue;
        sends.counts[st][bin] = sent.size();
        sends.per_stream[st] += sent.size();
        sends.balls[st][bin] = std::move(sent);
      }
    }
    sends.total += sends.per_stream[st];
  }

  EscapeSets escapes = decide_escapes(kind_, opts_, opts_.mode, sends, rng);

  // end-of-step arrivals (escape kinds only): one Bernoulli(nu) per bin in [j]
  std::map<std::uint32_t, std::uint64_t> arrivals;
  if (kind_ == ProcessKind::constant_escape || kind_ == ProcessKind::escape) {
    for (std::uint32_t bin = 1; bin <= opts_.jam_level; ++bin)
      if (rng.bernoulli(nu)) arrivals[bin] = 1;
  }

  // rebuild populations
  for (std::uint32_t st = 0; st < n_streams; ++st) {
    Stream next;
    if (opts_.mode == PopulationMode::counts) {
      auto send_count = [&](std::uint32_t bin) -> std::uint64_t {
        auto it = sends.counts[st].find(bin);
        return it == sends.counts[st].end() ? 0 : it->second;
      };
      auto escape_count = [&](std::uint32_t bin) -> std::uint64_t {
        auto it = escapes.counts[st].find(bin);
        return it == escapes.counts[st].end() ? 0 : it->second;
      };
      for (const auto& [bin, cnt] : pop_[st].counts) {
        std::uint64_t stay = cnt - send_count(bin);
        if (stay > 0) next.counts[bin] += stay;
        std::uint64_t up = send_count(bin) - escape_count(bin);
        if (up > 0) next.counts[bin + 1] += up;
      }
      if (st == 0)
        for (const auto& [bin, cnt] : arrivals) next.counts[bin] += cnt;
    } else {
      for (const auto& [bin, balls] : pop_[st].balls) {
        std::vector<BallId> stay = balls;
        auto sit = sends.balls[st].find(bin);
        if (sit != sends.balls[st].end()) {
          stay = sorted_diff(balls, sit->second);
          std::vector<BallId> up = sit->second;
          auto eit = escapes.balls[st].find(bin);
          if (eit != escapes.balls[st].end()) up = sorted_diff(up, eit->second);
          if (!up.empty()) {
            auto& dst = next.balls[bin + 1];
            dst.insert(dst.end(), up.begin(), up.end());
          }
        }
        if (!stay.empty()) {
          auto& dst = next.balls[bin];
          std::vector<BallId> merged;
          merged.reserve(dst.size() + stay.size());
          std::merge(dst.begin(), dst.end(), stay.begin(), stay.end(),
                     std::back_inserter(merged));
          dst = std::move(merged);
        }
      }
      if (st == 0) {
        for (const auto& [bin, cnt] : arrivals) {
          auto& dst = next.balls[bin];
          dst.push_back(make_ball(t, bin, 1));
          std::sort(dst.begin(), dst.end());
        }
      }
#ifndef NDEBUG
      for (auto& [bin2, v] : next.balls) {
        (void)bin2;
        assert(std::is_sorted(v.begin(), v.end()));
      }
#endif
    }
    pop_[st] = std::move(next);
  }

  for (std::uint32_t st = 0; st < n_streams; ++st) {
    for (const auto& [bin, cnt] : sends.counts[st]) {
      rep.sends[bin] += cnt;
      rep.total_sends += cnt;
    }
    for (const auto& [bin, cnt] : escapes.counts[st]) {
      rep.escapes[bin] += cnt;
      rep.total_escapes += cnt;
    }
  }
  for (const auto& [bin, cnt] : arrivals) {
    rep.arrivals[bin] += cnt;
    rep.total_arrivals += cnt;
  }
  rep.backlog = backlog();
  cumulative_escapes_ += rep.total_escapes;
  t_ = t;

  if (opts_.check_conservation) {
    std::uint64_t expected =
        before + rep.births + rep.total_arrivals - rep.total_escapes;
    if (rep.backlog != expected)
      raise(errc::invariant_violation, "ball-count conservation failed");
  }
  return rep;
}

std::uint64_t ProcessState::backlog() const {
  std::uint64_t n = 0;
  for (const auto& st : pop_) {
    for (const auto& [bin, cnt] : st.counts) n += cnt;
    for (const auto& [bin, v] : st.balls) n += v.size();
  }
  return n;
}

std::uint64_t ProcessState::bin_count(std::uint32_t bin) const {
  std::uint64_t n = 0;
  for (std::uint32_t st = 0; st < streams(); ++st) n += stream_bin_count(st, bin);
  return n;
}

std::uint64_t ProcessState::stream_bin_count(std::uint32_t stream,
                                             std::uint32_t bin) const {
  const Stream& st = pop_[stream];
  if (opts_.mode == PopulationMode::counts) {
    auto it = st.counts.find(bin);
    return it == st.counts.end() ? 0 : it->second;
  }
  auto it = st.balls.find(bin);
  return it == st.balls.end() ? 0 : it->second.size();
}

std::uint32_t ProcessState::max_occupied_bin() const {
  std::uint32_t m = 0;
  for (const auto& st : pop_) {
    for (const auto& [bin, cnt] : st.counts)
      if (cnt > 0) m = std::max(m, bin);
    for (const auto& [bin, v] : st.balls)
      if (!v.empty()) m = std::max(m, bin);
  }
  return m;
}

std::vector<std::uint64_t> ProcessState::counts_upto(std::uint32_t j) const {
  std::vector<std::uint64_t> out(j, 0);
  for (std::uint32_t bin = 1; bin <= j; ++bin) out[bin - 1] = bin_count(bin);
  return out;
}

const std::vector<BallId>& ProcessState::balls(std::uint32_t stream,
                                               std::uint32_t bin) const {
  static const std::vector<BallId> empty;
  if (opts_.mode != PopulationMode::identities)
    raise(errc::mode_unsupported, "ball identities only exist in identity mode");
  auto it = pop_[stream].balls.find(bin);
  return it == pop_[stream].balls.end() ? empty : it->second;
}

std::vector<std::uint32_t> ProcessState::occupied_bins() const {
  std::vector<std::uint32_t> out;
  for (const auto& st : pop_) {
    for (const auto& [bin, cnt] : st.counts)
      if (cnt > 0) out.push_back(bin);
    for (const auto& [bin, v] : st.balls)
      if (!v.empty()) out.push_back(bin);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void run(ProcessState& state, std::uint64_t horizon,
         const std::vector<StepObserver*>& observers) {
  for (std::uint64_t i = 0; i < horizon; ++i) {
    StepReport rep = state.step();
    for (StepObserver* obs : observers) obs->on_step(state, rep);
  }
}

StandardCoupling::StandardCoupling(CouplingKind kind, const SendSequence& seq,
                                   double lambda_lower, double lambda_upper,
                                   std::uint64_t seed)
    : kind_(kind),
      lower_([&] {
        ProcessOptions o;
        o.mode = PopulationMode::identities;
        o.lambda = lambda_lower;
        switch (kind) {
          case CouplingKind::backoff_pair:
            return ProcessState(ProcessKind::backoff, seq, o);
          case CouplingKind::two_stream_under:
            return ProcessState(ProcessKind::two_stream, seq, o);
          case CouplingKind::under_backoff_under:
            return ProcessState(ProcessKind::under_backoff, seq, o);
        }
        raise(errc::coupling_precondition_violated, "unknown coupling kind");
      }()),
      upper_([&] {
        ProcessOptions o;
        o.mode = PopulationMode::identities;
        o.lambda = lambda_upper;
        switch (kind) {
          case CouplingKind::backoff_pair:
            o.cohorts = 1;
            break;
          case CouplingKind::two_stream_under:
            o.cohorts = 2;
            break;
          case CouplingKind::under_backoff_under:
            o.cohorts = 3;
            break;
        }
        return ProcessState(ProcessKind::backoff, seq, o);
      }()),
      rng_(seed) {
  if (kind_ == CouplingKind::backoff_pair) {
    if (!(lambda_lower <= lambda_upper))
      raise(errc::coupling_precondition_violated,
            "lower birth rate must not exceed the upper one");
  } else if (lambda_lower != lambda_upper) {
    raise(errc::coupling_precondition_violated,
          "stream couplings need equal birth rates");
  }
}

CoupledStepResult StandardCoupling::step() {
  const std::uint64_t t = upper_.clock() + 1;
  const std::uint32_t n_streams = upper_.streams();
  CoupledStepResult res;
  res.lower.step = res.upper.step = t;

  // synchronized births: the lower process takes a prefix of the upper's
  // newborns (thinned for the backoff pair, identical for stream pairs)
  std::uint32_t ord = 0;
  for (std::uint32_t st = 0; st < n_streams; ++st) {
    std::uint64_t n_up = rng_.poisson(upper_.options().lambda /
                                      static_cast<double>(n_streams));
    std::uint64_t n_lo = n_up;
    if (kind_ == CouplingKind::backoff_pair && n_up > 0)
      n_lo = rng_.binomial(n_up, lower_.options().lambda / upper_.options().lambda);
    res.upper.births += n_up;
    res.lower.births += n_lo;
    auto& up0 = upper_.pop_[st].balls[0];
    auto& lo0 = lower_.pop_[st].balls[0];
    for (std::uint64_t k = 0; k < n_up; ++k) {
      BallId b = make_ball(t, 0, ++ord);
      up0.push_back(b);
      if (k < n_lo) lo0.push_back(b);
    }
  }

  // synchronized sends: iterate the upper superset; shared balls use one draw
  SendSets up_s, lo_s;
  up_s.counts.resize(n_streams);
  up_s.balls.resize(n_streams);
  up_s.per_stream.assign(n_streams, 0);
  lo_s.counts.resize(n_streams);
  lo_s.balls.resize(n_streams);
  lo_s.per_stream.assign(n_streams, 0);
  for (std::uint32_t st = 0; st < n_streams; ++st) {
    for (const auto& [bin, up_balls] : upper_.pop_[st].balls) {
      double p = upper_.sequence().prob(bin);
      auto loit = lower_.pop_[st].balls.find(bin);
      const std::vector<BallId>* lo_balls =
          loit == lower_.pop_[st].balls.end() ? nullptr : &loit->second;
      for (BallId b : up_balls) {
        bool shared = lo_balls && std::binary_search(lo_balls->begin(),
                                                     lo_balls->end(), b);
        if (!rng_.bernoulli(p)) continue;
        up_s.balls[st][bin].push_back(b);
        up_s.per_stream[st] += 1;
        if (shared) {
          lo_s.balls[st][bin].push_back(b);
          lo_s.per_stream[st] += 1;
        }
      }
    }
    for (const auto& [bin, v] : up_s.balls[st]) up_s.counts[st][bin] = v.size();
    for (const auto& [bin, v] : lo_s.balls[st]) lo_s.counts[st][bin] = v.size();
    up_s.total += up_s.per_stream[st];
    lo_s.total += lo_s.per_stream[st];
  }

  EscapeSets lo_e = decide_escapes(lower_.kind(), lower_.options(),
                                   PopulationMode::identities, lo_s, rng_);
  EscapeSets up_e = decide_escapes(upper_.kind(), upper_.options(),
                                   PopulationMode::identities, up_s, rng_);

  auto rebuild = [&](ProcessState& ps, const SendSets& s, const EscapeSets& e,
                     StepReport& rep) {
    for (std::uint32_t st = 0; st < ps.streams(); ++st) {
      std::map<std::uint32_t, std::vector<BallId>> next;
      for (const auto& [bin, balls] : ps.pop_[st].balls) {
        std::vector<BallId> stay = balls;
        auto sit = s.balls[st].find(bin);
        if (sit != s.balls[st].end()) {
          stay = sorted_diff(balls, sit->second);
          std::vector<BallId> up = sit->second;
          auto eit = e.balls[st].find(bin);
          if (eit != e.balls[st].end()) up = sorted_diff(up, eit->second);
          if (!up.empty()) {
            auto& dst = next[bin + 1];
            dst.insert(dst.end(), up.begin(), up.end());
          }
        }
        if (!stay.empty()) {
          auto& dst = next[bin];
          std::vector<BallId> merged;
          merged.reserve(dst.size() + stay.size());
          std::merge(dst.begin(), dst.end(), stay.begin(), stay.end(),
                     std::back_inserter(merged));
          dst = std::move(merged);
        }
      }
      ps.pop_[st].balls = std::move(next);
    }
    for (std::uint32_t st = 0; st < ps.streams(); ++st) {
      for (const auto& [bin, cnt] : s.counts[st]) {
        rep.sends[bin] += cnt;
        rep.total_sends += cnt;
      }
      for (const auto& [bin, cnt] : e.counts[st]) {
        rep.escapes[bin] += cnt;
        rep.total_escapes += cnt;
      }
    }
    rep.backlog = ps.backlog();
    ps.cumulative_escapes_ += rep.total_escapes;
    ps.t_ = t;
  };
  rebuild(lower_, lo_s, lo_e, res.lower);
  rebuild(upper_, up_s, up_e, res.upper);

  // subset invariant, per stream and bin
  for (std::uint32_t st = 0; st < n_streams; ++st) {
    for (const auto& [bin, lo_balls] : lower_.pop_[st].balls) {
      if (lo_balls.empty()) continue;
      auto it = upper_.pop_[st].balls.find(bin);
      bool ok = it != upper_.pop_[st].balls.end() &&
                std::includes(it->second.begin(), it->second.end(),
                              lo_balls.begin(), lo_balls.end());
      if (!ok) res.subset_violations += 1;
    }
  }
  violations_ += res.subset_violations;
  return res;
}

}  // namespace backoff
