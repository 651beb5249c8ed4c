#include "backoff/volume.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>

namespace backoff {

VolumeProcess::VolumeProcess(const RuleParams& params,
                             const HighLevelState& initial, std::uint64_t seed)
    : params_(params),
      state_(initial),
      means_(initial.z),
      counts_(initial.j, 0),
      t_(initial.tau),
      rng_(seed) {}

std::uint64_t VolumeProcess::backlog() const {
  std::uint64_t n = bin0_;
  for (std::uint64_t c : counts_) n += c;
  return n;
}

void VolumeProcess::set_counts(const std::vector<std::uint64_t>& counts) {
  if (counts.size() != counts_.size())
    raise(errc::incompatible_lengths, "volume counts must have length j");
  counts_ = counts;
}

void VolumeProcess::sample_counts_poisson(const std::vector<double>& means) {
  if (means.size() != counts_.size())
    raise(errc::incompatible_lengths, "volume means must have length j");
  for (std::size_t i = 0; i < means.size(); ++i)
    counts_[i] = rng_.poisson(means[i]);
}

Transition VolumeProcess::step() {
  const SendSequence& seq = *params_.seq;
  const std::uint64_t t = t_ + 1;
  const std::uint32_t j = state_.j;

  // one j-jammed step on the counts
  bin0_ += rng_.poisson(params_.lambda);
  std::uint64_t up = rng_.binomial(bin0_, seq.prob(0));
  bin0_ -= up;
  for (std::uint32_t bin = 1; bin <= j; ++bin) {
    std::uint64_t s = rng_.binomial(counts_[bin - 1], seq.prob(bin));
    counts_[bin - 1] = counts_[bin - 1] - s + up;
    up = bin < j ? s : 0;  // bin-j sends escape
  }

  fill_step(seq, params_.lambda, means_);
  Transition tr = hls_with_means(params_, state_, means_, counts_, t);
  if (tr.next != state_) {
    const std::uint32_t j2 = tr.next.j;
    std::vector<std::uint64_t> thinned(j2, 0);
    for (std::uint32_t bin = 1; bin <= j && bin <= j2; ++bin) {
      double target = tr.next.z[bin - 1];
      double have = means_[bin - 1];
      double ratio =
          target <= 0.0 || have <= 0.0 ? 0.0 : std::min(1.0, target / have);
      thinned[bin - 1] = rng_.binomial(counts_[bin - 1], ratio);
    }
    counts_ = std::move(thinned);
    means_ = tr.next.z;
    state_ = tr.next;
  }
  t_ = t;
  return tr;
}

namespace {

using Bins = std::map<std::uint32_t, std::vector<BallId>>;

void insert_ball(Bins& b, std::uint32_t bin, BallId id) {
  auto& v = b[bin];
  v.insert(std::upper_bound(v.begin(), v.end(), id), id);
}

std::vector<BallId> sorted_diff(const std::vector<BallId>& a,
                                const std::vector<BallId>& b) {
  std::vector<BallId> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

void prune(Bins& b) {
  for (auto it = b.begin(); it != b.end();)
    it = it->second.empty() ? b.erase(it) : std::next(it);
}

// Move the sent balls up one bin, dropping those at or above `escape_from`
// (0 disables dropping).
void apply_sends(Bins& pop, const Bins& sends, std::uint32_t escape_from) {
  Bins next;
  for (const auto& [bin, balls] : pop) {
    auto sit = sends.find(bin);
    const std::vector<BallId>* sent = sit == sends.end() ? nullptr : &sit->second;
    std::vector<BallId> stay = sent ? sorted_diff(balls, *sent) : balls;
    if (!stay.empty()) {
      auto& dst = next[bin];
      std::vector<BallId> merged;
      std::merge(dst.begin(), dst.end(), stay.begin(), stay.end(),
                 std::back_inserter(merged));
      dst = std::move(merged);
    }
    if (sent && !(escape_from > 0 && bin >= escape_from)) {
      auto& dst = next[bin + 1];
      std::vector<BallId> merged;
      std::merge(dst.begin(), dst.end(), sent->begin(), sent->end(),
                 std::back_inserter(merged));
      dst = std::move(merged);
    }
  }
  prune(next);
  pop = std::move(next);
}

struct SendDraws {
  Rng* rng = nullptr;
  const SendSequence* seq = nullptr;
  std::map<std::pair<BallId, std::uint32_t>, bool> memo;

  bool operator()(BallId ball, std::uint32_t bin) {
    auto key = std::make_pair(ball, bin);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    bool v = rng->bernoulli(seq->prob(bin));
    memo.emplace(key, v);
    return v;
  }
};

Bins collect_sends(const Bins& pop, SendDraws& draw) {
  Bins out;
  for (const auto& [bin, balls] : pop) {
    std::vector<BallId> sent;
    for (BallId b : balls)
      if (draw(b, bin)) sent.push_back(b);
    if (!sent.empty()) out[bin] = std::move(sent);
  }
  return out;
}

}  // namespace

// The composite run tracks the bulky backoff population as anonymous
// per-bin counts and keeps ball identities only where the coupling needs
// them: the volume's balls (shared with the backoff process until they
// escape it) and the escape process's balls. Anonymous balls within a bin
// are exchangeable, so binomial sends are exact.
VebResult veb_run(const SendSequence& seq, double lambda, const VebOptions& opts) {
  if (!(lambda > 0.0 && lambda < 1.0 / 120.0))
    raise(errc::validation_error, "veb needs lambda in (0, 1/120)");
  RuleParams params = opts.synthetic ? RuleParams::synthetic(seq, lambda)
                                     : RuleParams::canonical(seq, lambda);
  const double shat_floor =
      opts.shat_floor >= 0.0 ? opts.shat_floor : 100.0 / (lambda * lambda);
  const std::uint32_t j0 = opts.j0;
  const std::uint64_t tau0 = fill_horizon(seq, j0);

  VebResult res;
  res.warmup = tau0;
  Rng rng(opts.seed);

  // anonymous backoff population, cohorts A and B
  std::vector<std::map<std::uint32_t, std::uint64_t>> xc(2);
  Bins vol;                    // the volume's balls, identities
  std::set<BallId> in_x;       // volume balls still present in the backoff process
  Bins esc;                    // current escape process
  std::uint32_t esc_j = j0;
  std::vector<std::vector<std::uint32_t>> esc_sets;

  std::uint64_t anon_total = 0;
  auto recount_anon = [&] {
    anon_total = 0;
    for (const auto& coh : xc)
      for (const auto& [bin, c] : coh) anon_total += c;
  };

  struct AnonStep {
    std::vector<std::map<std::uint32_t, std::uint64_t>> sends;
    std::uint64_t total = 0;
  };
  auto anon_sends = [&](double extra_identity_sends) {
    (void)extra_identity_sends;
    AnonStep st;
    st.sends.resize(2);
    for (std::size_t coh = 0; coh < 2; ++coh) {
      for (const auto& [bin, c] : xc[coh]) {
        std::uint64_t k = rng.binomial(c, seq.prob(bin));
        if (k > 0) {
          st.sends[coh][bin] = k;
          st.total += k;
        }
      }
    }
    return st;
  };
  auto apply_anon = [&](AnonStep& st, std::size_t esc_coh, std::uint32_t esc_bin,
                        bool escaped) {
    for (std::size_t coh = 0; coh < 2; ++coh) {
      for (const auto& [bin, k] : st.sends[coh]) {
        std::uint64_t up = k;
        if (escaped && coh == esc_coh && bin == esc_bin) up -= 1;
        xc[coh][bin] -= k;
        if (up > 0) xc[coh][bin + 1] += up;
      }
      for (auto it = xc[coh].begin(); it != xc[coh].end();)
        it = it->second == 0 ? xc[coh].erase(it) : std::next(it);
    }
    recount_anon();
  };

  // warmup and failure-regime steps run the backoff process alone
  auto plain_x_step = [&](std::uint64_t t, bool force_b) {
    std::uint64_t na = rng.poisson(lambda);
    std::uint64_t nb =
        force_b ? rng.poisson_at_least_one(lambda) : rng.poisson(lambda);
    if (na > 0) xc[0][0] += na;
    if (nb > 0) xc[1][0] += nb;
    AnonStep st = anon_sends(0);
    bool escaped = st.total == 1;
    std::size_t ecoh = 0;
    std::uint32_t ebin = 0;
    if (escaped) {
      for (std::size_t coh = 0; coh < 2; ++coh)
        for (const auto& [bin, k] : st.sends[coh])
          if (k == 1) {
            ecoh = coh;
            ebin = bin;
          }
    }
    apply_anon(st, ecoh, ebin, escaped);
    (void)t;
  };

  std::vector<double> warm_means(j0, 0.0);
  std::uint64_t t = 0;
  for (; t < tau0;) {
    ++t;
    plain_x_step(t, true);
    fill_step(seq, lambda, warm_means);
  }

  // volume initialisation: thin the anonymous A cohort toward the
  // initialising z and mint identities for the selected balls
  HighLevelState psi = make_initialising_state(params, tau0, j0);
  for (std::uint32_t bin = 1; bin <= j0; ++bin) {
    auto it = xc[0].find(bin);
    if (it == xc[0].end() || it->second == 0) continue;
    double ratio = warm_means[bin - 1] > 0.0
                       ? std::min(1.0, psi.z[bin - 1] / warm_means[bin - 1])
                       : 0.0;
    std::uint64_t n = rng.binomial(it->second, ratio);
    for (std::uint64_t k = 0; k < n; ++k) {
      BallId b = make_ball(tau0, bin, static_cast<std::uint32_t>(k + 3));
      insert_ball(vol, bin, b);
      in_x.insert(b);
    }
    it->second -= n;  // those balls are now tracked by identity
  }
  recount_anon();
  std::vector<double> means = psi.z;
  bool failed = false;

  auto x_backlog = [&] { return anon_total + in_x.size(); };

  for (std::uint64_t k = 0; k < opts.horizon; ++k) {
    ++t;
    res.steps += 1;

    if (failed) {
      plain_x_step(t, false);
      fill_step(seq, lambda, means);
      std::vector<std::uint64_t> counts(psi.j, 0);
      Transition tr = hls_with_means(params, psi, means, counts, t);
      psi = tr.next;
      res.transitions.push_back({psi.g, psi.tau, psi.j, psi.type, tr.tag, false});
      res.max_backlog = std::max(res.max_backlog, x_backlog());
      continue;
    }

    const std::uint32_t j = psi.j;
    const bool first_coupled_step = psi.type == StateType::initialising;

    // escape-process arrival rate from its own populations
    double nu = 1.0;
    if (!first_coupled_step) {
      std::uint64_t shat = 0;
      for (const auto& set : esc_sets) {
        double nz = 0.0;
        for (std::uint32_t b : set) {
          auto it = esc.find(b);
          if (it != esc.end())
            nz += seq.prob(b) * static_cast<double>(it->second.size());
        }
        if (nz <= lambda * static_cast<double>(set.size()) / 80.0)
          shat += set.size();
      }
      double xi = static_cast<double>(shat) >= shat_floor
                      ? lambda * static_cast<double>(shat) / 80.0
                      : 0.0;
      nu = std::exp(-xi / 192.0);
    }

    // births: the A cohort's newborns are the volume's newborns
    std::uint64_t na = rng.poisson(lambda);
    std::uint64_t nb = rng.poisson(lambda);
    for (std::uint64_t i = 0; i < na; ++i) {
      BallId b = make_ball(t, 0, static_cast<std::uint32_t>(i + 3));
      insert_ball(vol, 0, b);
      in_x.insert(b);
    }
    if (nb > 0) xc[1][0] += nb;
    anon_total += nb;

    // identity sends: one draw per ball; balls present in both the volume
    // and the escape process sit in the same bin and share the draw
    SendDraws draw{&rng, &seq, {}};
    Bins vol_sends = collect_sends(vol, draw);
    Bins esc_sends = first_coupled_step ? Bins{} : collect_sends(esc, draw);
    std::uint64_t shared_sends = 0;
    BallId shared_lone = 0;
    std::uint32_t shared_lone_bin = 0;
    for (const auto& [bin, balls] : vol_sends) {
      for (BallId b : balls) {
        if (in_x.count(b)) {
          shared_sends += 1;
          shared_lone = b;
          shared_lone_bin = bin;
        }
      }
    }

    AnonStep st = anon_sends(0);
    std::uint64_t total_x = st.total + shared_sends;

    // the backoff escape: a lone send leaves the process
    bool escaped = total_x == 1;
    bool escaped_shared = escaped && shared_sends == 1;
    std::size_t ecoh = 0;
    std::uint32_t ebin = 0;
    BallId escape_ball = 0;
    if (escaped) {
      if (escaped_shared) {
        ebin = shared_lone_bin;
        escape_ball = shared_lone;
        in_x.erase(shared_lone);  // stays in the volume, leaves the process
      } else {
        for (std::size_t coh = 0; coh < 2; ++coh)
          for (const auto& [bin, cnt] : st.sends[coh])
            if (cnt == 1) {
              ecoh = coh;
              ebin = bin;
            }
        escape_ball = make_ball(t, ebin + 1, 2);  // anonymous escapee
      }
    }
    apply_anon(st, ecoh, ebin, escaped && !escaped_shared);
    apply_sends(vol, vol_sends, j);
    if (!first_coupled_step) apply_sends(esc, esc_sends, esc_j);

    // dominating arrivals: the escaped ball joins the escape process where
    // its volume copy now sits (one bin up); Bernoulli(nu) arrivals fill
    // the other bins
    std::uint32_t landing = 0;
    if (escaped && ebin + 1 <= esc_j) landing = ebin + 1;
    if (first_coupled_step) {
      esc.clear();
      esc_j = j0;
      if (landing > 0) insert_ball(esc, landing, escape_ball);
    } else {
      for (std::uint32_t bin = 1; bin <= esc_j; ++bin) {
        bool r = rng.bernoulli(nu);
        if (bin == landing)
          insert_ball(esc, bin, escape_ball);
        else if (r)
          insert_ball(esc, bin, make_ball(t, bin, 1));
      }
    }

    // high-level transition on the jammed core's populations
    fill_step(seq, lambda, means);
    std::vector<std::uint64_t> counts(j, 0);
    for (std::uint32_t bin = 1; bin <= j; ++bin) {
      auto it = vol.find(bin);
      counts[bin - 1] = it == vol.end() ? 0 : it->second.size();
    }
    Transition tr = hls_with_means(params, psi, means, counts, t);

    // invariants, judged against the new state's type
    if (tr.next.type != StateType::initialising &&
        tr.next.type != StateType::failure) {
      for (const auto& set : tr.next.sets) {
        double nz = 0.0;
        for (std::uint32_t b : set)
          nz += seq.prob(b) * static_cast<double>(counts[b - 1]);
        if (nz < lambda * static_cast<double>(set.size()) / 40.0)
          res.i1_violations += 1;
      }
      for (const auto& [bin, balls] : vol) {
        if (bin == 0) continue;
        auto eit = esc.find(bin);
        for (BallId b : balls) {
          bool in_e = eit != esc.end() &&
                      std::binary_search(eit->second.begin(), eit->second.end(), b);
          if (!in_e && !in_x.count(b)) res.i2_violations += 1;
        }
      }
    }

    if (tr.next != psi) {
      const HighLevelState prev = psi;
      const std::uint32_t j2 = tr.next.j;
      Bins thinned;
      for (std::uint32_t bin = 1; bin <= j && bin <= j2; ++bin) {
        auto it = vol.find(bin);
        if (it == vol.end()) continue;
        double target = tr.next.z[bin - 1];
        double have = means[bin - 1];
        double ratio =
            target <= 0.0 || have <= 0.0 ? 0.0 : std::min(1.0, target / have);
        std::uint64_t n = rng.binomial(it->second.size(), ratio);
        if (n > 0)
          thinned[bin].assign(it->second.begin(), it->second.begin() + n);
        // dropped balls that are still in the backoff process return to the
        // anonymous pool
        for (std::size_t d = n; d < it->second.size(); ++d) {
          BallId b = it->second[d];
          if (in_x.erase(b) > 0) xc[0][bin] += 1;
        }
      }
      // balls in volume bin 0 are newborn; a transition keeps them only if
      // j stayed the same bin-0 slot -- they were already moved up by the
      // send phase, so bin 0 is empty here by construction
      vol = std::move(thinned);
      recount_anon();
      means = tr.next.z;
      psi = tr.next;
      esc_j = psi.j;
      esc_sets = psi.sets;
      res.transitions.push_back({psi.g, psi.tau, psi.j, psi.type, tr.tag,
                                 is_back_transition(prev, psi, tr.tag)});
      if (psi.type == StateType::failure) {
        if (!res.ever_failed) {
          res.ever_failed = true;
          res.failure_entry = t;
        }
        failed = true;
        // the coupling ends; surviving tracked balls rejoin the anonymous pool
        for (const auto& [bin, balls] : vol)
          for (BallId b : balls)
            if (in_x.erase(b) > 0) xc[0][bin] += 1;
        recount_anon();
      }
    }
    res.max_backlog = std::max(res.max_backlog, x_backlog());
  }
  return res;
}

}  // namespace backoff
