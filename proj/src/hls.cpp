#include "backoff/hls.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace backoff {

namespace {

std::vector<std::uint32_t> bins_with_weight_at_least(const SendSequence& seq,
                                                     std::uint32_t below,
                                                     double log_thr) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t l = 1; l < below; ++l)
    if (seq.log_weight(l) >= log_thr) out.push_back(l);
  return out;
}

double noise_of(const SendSequence& seq, const std::vector<std::uint32_t>& set,
                const std::vector<std::uint64_t>& b) {
  double s = 0.0;
  for (std::uint32_t k : set)
    s += seq.prob(k) * static_cast<double>(b[k - 1]);
  return s;
}

bool t3_holds(const RuleParams& p, const HighLevelState& ns,
              const std::vector<std::uint64_t>& b) {
  for (const auto& set : ns.sets) {
    if (noise_of(*p.seq, set, b) <
        p.lambda * static_cast<double>(set.size()) / 40.0)
      return false;
  }
  return true;
}

void push_nonempty(std::vector<std::vector<std::uint32_t>>& sets,
                   std::vector<std::uint32_t> s) {
  if (!s.empty()) sets.push_back(std::move(s));
}

}  // namespace

bool HighLevelState::operator==(const HighLevelState& o) const {
  return g == o.g && tau == o.tau && j == o.j && type == o.type && z == o.z &&
         sets == o.sets;
}

const char* state_type_name(StateType t) {
  switch (t) {
    case StateType::failure: return "failure";
    case StateType::initialising: return "initialising";
    case StateType::advancing: return "advancing";
    case StateType::filling: return "filling";
    case StateType::refilling: return "refilling";
    case StateType::stabilising: return "stabilising";
  }
  return "?";
}

const char* rule_tag_name(RuleTag t) {
  switch (t) {
    case RuleTag::none: return "none";
    case RuleTag::failure_hold: return "failure_hold";
    case RuleTag::heavy_bin_starved: return "heavy_bin_starved";
    case RuleTag::noise_drop_failure: return "noise_drop_failure";
    case RuleTag::noise_drop_refill: return "noise_drop_refill";
    case RuleTag::init_to_advancing: return "init_to_advancing";
    case RuleTag::init_to_filling: return "init_to_filling";
    case RuleTag::init_failure: return "init_failure";
    case RuleTag::fill_complete_advancing: return "fill_complete_advancing";
    case RuleTag::fill_complete_filling: return "fill_complete_filling";
    case RuleTag::fill_complete_failure: return "fill_complete_failure";
    case RuleTag::hold: return "hold";
    case RuleTag::refill_to_stabilising: return "refill_to_stabilising";
    case RuleTag::refill_back: return "refill_back";
    case RuleTag::stabilise_to_filling: return "stabilise_to_filling";
    case RuleTag::stabilise_back: return "stabilise_back";
  }
  return "?";
}

RuleParams RuleParams::canonical(const SendSequence& seq, double lambda) {
  RuleParams p;
  p.seq = &seq;
  p.lambda = lambda;
  p.cc = ClassifierConstants::canonical(lambda);
  p.dwell_exp_advance = 24.0;
  p.dwell_exp_refill = p.cc.phi + 46.0;
  p.dwell_exp_stabilise = p.cc.phi + 72.0;
  return p;
}

RuleParams RuleParams::synthetic(const SendSequence& seq, double lambda) {
  RuleParams p;
  p.seq = &seq;
  p.lambda = lambda;
  p.cc = ClassifierConstants::synthetic(lambda);
  p.dwell_exp_advance = 2.0;
  p.dwell_exp_refill = p.cc.phi + 1.0;
  p.dwell_exp_stabilise = p.cc.phi + 2.0;
  return p;
}

double RuleParams::target(std::uint32_t x) const {
  if (x == 0) return lambda;
  double w = seq->weight(x);  // +inf tolerated; comparisons stay well-defined
  double prod = 1.0;
  for (std::uint32_t a = 1; a <= x; ++a)
    prod *= 1.0 - 1.0 / (4.0 * std::pow(static_cast<double>(a), cc.phi));
  return lambda * w * prod;
}

HighLevelState make_failure_state(std::uint64_t g, std::uint64_t tau,
                                  std::uint32_t j) {
  HighLevelState s;
  s.g = g;
  s.tau = tau;
  s.j = j;
  s.z.assign(j, 0.0);
  s.type = StateType::failure;
  return s;
}

HighLevelState make_initialising_state(const RuleParams& p, std::uint64_t tau,
                                       std::uint32_t j) {
  HighLevelState s;
  s.g = 0;
  s.tau = tau;
  s.j = j;
  s.type = StateType::initialising;
  s.z.resize(j);
  for (std::uint32_t k = 1; k <= j; ++k) {
    double w = p.seq->weight(k);
    if (!std::isfinite(w))
      raise(errc::numeric_overflow, "initialising state needs representable weights");
    s.z[k - 1] = 3.0 * p.lambda * w / 4.0;
  }
  return s;
}

HighLevelState make_advancing_state(const RuleParams& p, std::uint64_t g,
                                    std::uint64_t tau, std::uint32_t j) {
  BinClassification cls = classify_bin(*p.seq, p.cc, j);
  if (!is_covered(cls.bin_class))
    raise(errc::invariant_violation, "advancing state needs a covered bin");
  HighLevelState s;
  s.g = g;
  s.tau = tau;
  s.j = j;
  s.type = StateType::advancing;
  s.z.resize(j);
  for (std::uint32_t k = 1; k < j; ++k) s.z[k - 1] = p.target(k);
  s.z[j - 1] = 0.0;
  const double jd = static_cast<double>(j);
  if (cls.bin_class == BinClass::many_covered)
    push_nonempty(s.sets, bins_with_weight_at_least(*p.seq, j, cls.threshold.log_value));
  else
    push_nonempty(s.sets, bins_with_weight_at_least(*p.seq, j, 2.0 * std::log(jd)));
  return s;
}

HighLevelState make_filling_state(const RuleParams& p, std::uint64_t g,
                                  std::uint64_t tau, std::uint32_t j, double z_j) {
  BinClassification cls = classify_bin(*p.seq, p.cc, j);
  if (!is_exposed(cls.bin_class))
    raise(errc::invariant_violation, "filling state needs an exposed bin");
  HighLevelState s;
  s.g = g;
  s.tau = tau;
  s.j = j;
  s.type = StateType::filling;
  s.z.resize(j);
  for (std::uint32_t k = 1; k < j; ++k) s.z[k - 1] = p.target(k);
  s.z[j - 1] = z_j;
  const double jd = static_cast<double>(j);
  const double log_j2 = 2.0 * std::log(jd);
  std::vector<std::uint32_t> main_set;
  for (std::uint32_t l = 1; l < j; ++l) {
    double lw = p.seq->log_weight(l);
    if (lw >= cls.threshold.log_value && lw < log_j2) main_set.push_back(l);
  }
  push_nonempty(s.sets, std::move(main_set));
  for (std::uint32_t l : bins_with_weight_at_least(*p.seq, j, p.chi() * std::log(jd)))
    s.sets.push_back({l});
  return s;
}

HighLevelState make_refilling_state(const RuleParams& p, std::uint64_t g,
                                    std::uint64_t tau, std::uint32_t j,
                                    const std::vector<double>& heavy_z) {
  BinClassification cls = classify_bin(*p.seq, p.cc, j);
  if (!is_exposed(cls.bin_class))
    raise(errc::invariant_violation, "refilling state needs an exposed bin");
  if (heavy_z.size() != j)
    raise(errc::incompatible_lengths, "refilling z must have length j");
  HighLevelState s;
  s.g = g;
  s.tau = tau;
  s.j = j;
  s.type = StateType::refilling;
  s.z.assign(j, 0.0);
  const double jd = static_cast<double>(j);
  const double log_j2 = 2.0 * std::log(jd);
  for (std::uint32_t k = 1; k <= j; ++k)
    if (p.seq->log_weight(k) >= log_j2) s.z[k - 1] = heavy_z[k - 1];
  for (std::uint32_t l : bins_with_weight_at_least(*p.seq, j, p.chi() * std::log(jd)))
    s.sets.push_back({l});
  return s;
}

HighLevelState make_stabilising_state(const RuleParams& p, std::uint64_t g,
                                      std::uint64_t tau, std::uint32_t j,
                                      double z_j) {
  BinClassification cls = classify_bin(*p.seq, p.cc, j);
  if (!is_exposed(cls.bin_class))
    raise(errc::invariant_violation, "stabilising state needs an exposed bin");
  HighLevelState s;
  s.g = g;
  s.tau = tau;
  s.j = j;
  s.type = StateType::stabilising;
  s.z.resize(j);
  for (std::uint32_t k = 1; k < j; ++k) s.z[k - 1] = p.target(k);
  s.z[j - 1] = z_j;
  const double jd = static_cast<double>(j);
  const double log_j2 = 2.0 * std::log(jd);
  double lj = std::log(jd);
  std::uint32_t cut = static_cast<std::uint32_t>(std::floor(lj * lj));
  std::vector<std::uint32_t> low_near, low_far;
  for (std::uint32_t k = 1; k < j; ++k) {
    if (p.seq->log_weight(k) >= log_j2) continue;
    if (k <= cut)
      low_near.push_back(k);
    else
      low_far.push_back(k);
  }
  push_nonempty(s.sets, std::move(low_near));
  push_nonempty(s.sets, std::move(low_far));
  for (std::uint32_t l : bins_with_weight_at_least(*p.seq, j, p.chi() * std::log(jd)))
    s.sets.push_back({l});
  return s;
}

void check_state_shape(const RuleParams& p, const HighLevelState& s) {
  if (s.z.size() != s.j)
    raise(errc::invariant_violation, "z length must equal j");
  std::vector<bool> seen(s.j + 1, false);
  for (const auto& set : s.sets) {
    for (std::uint32_t k : set) {
      if (k < 1 || k > s.j)
        raise(errc::invariant_violation, "noise set member outside [j]");
      if (seen[k]) raise(errc::invariant_violation, "noise sets must be disjoint");
      seen[k] = true;
    }
  }
  const double jd = static_cast<double>(s.j);
  switch (s.type) {
    case StateType::failure:
      for (double z : s.z)
        if (z != 0.0) raise(errc::invariant_violation, "failure state needs z = 0");
      if (!s.sets.empty())
        raise(errc::invariant_violation, "failure state needs empty set family");
      break;
    case StateType::initialising: {
      if (s.g != 0)
        raise(errc::invariant_violation, "initialising state needs g = 0");
      if (!s.sets.empty())
        raise(errc::invariant_violation, "initialising state needs empty set family");
      for (std::uint32_t k = 1; k <= s.j; ++k)
        if (s.z[k - 1] != 3.0 * p.lambda * p.seq->weight(k) / 4.0)
          raise(errc::invariant_violation, "initialising z must be 3 lambda W / 4");
      break;
    }
    case StateType::advancing:
      if (s.z[s.j - 1] != 0.0)
        raise(errc::invariant_violation, "advancing state needs z_j = 0");
      [[fallthrough]];
    case StateType::filling:
    case StateType::stabilising:
      for (std::uint32_t k = 1; k < s.j; ++k)
        if (s.z[k - 1] != p.target(k))
          raise(errc::invariant_violation, "interior z must sit at the bin target");
      break;
    case StateType::refilling:
      for (std::uint32_t k = 1; k <= s.j; ++k)
        if (p.seq->log_weight(k) < 2.0 * std::log(jd) && s.z[k - 1] != 0.0)
          raise(errc::invariant_violation, "refilling zeroes low-weight bins");
      break;
  }
}

std::vector<double> state_means(const RuleParams& p, const HighLevelState& s,
                                std::uint64_t t) {
  if (t < s.tau) raise(errc::domain_violation, "t must be >= tau");
  std::vector<double> damping(s.j, 0.0);
  return run_fill_last(*p.seq, p.lambda, damping, s.z, t - s.tau);
}

double missing_mass(const RuleParams& p, const HighLevelState& s,
                    const std::vector<std::uint32_t>& set, std::uint64_t t) {
  std::vector<double> means = state_means(p, s, t);
  double m = 0.0;
  for (std::uint32_t k : set) {
    if (k < 1 || k > s.j) raise(errc::validation_error, "set member outside [j]");
    m += std::max(0.0, p.target(k) - means[k - 1]);
  }
  return m;
}

Transition hls_with_means(const RuleParams& p, const HighLevelState& s,
                          const std::vector<double>& means,
                          const std::vector<std::uint64_t>& b, std::uint64_t t) {
  if (t <= s.tau)
    raise(errc::domain_violation, "transition rule needs t > tau");
  if (s.type == StateType::initialising && t != s.tau + 1)
    raise(errc::domain_violation, "initialising states transition at tau + 1");
  if (means.size() != s.j || b.size() != s.j)
    raise(errc::incompatible_lengths, "means and occupancy must have length j");

  const SendSequence& seq = *p.seq;
  const double jd = static_cast<double>(s.j);
  const double log_j2 = 2.0 * std::log(jd);
  const double log_jchi = p.chi() * std::log(jd);

  // R1
  if (s.type == StateType::failure)
    return {make_failure_state(s.g + 1, t, s.j), RuleTag::failure_hold};
  for (std::uint32_t k = 1; k < s.j; ++k) {
    double lw = seq.log_weight(k);
    if (lw < log_j2) continue;
    double half = p.lambda * seq.weight(k) / 2.0;
    if (lw >= log_jchi && means[k - 1] < half)
      return {make_failure_state(s.g + 1, t, s.j), RuleTag::heavy_bin_starved};
    if (means[k - 1] >= half &&
        static_cast<double>(b[k - 1]) < p.lambda * seq.weight(k) / 4.0)
      return {make_failure_state(s.g + 1, t, s.j), RuleTag::heavy_bin_starved};
  }

  auto heavy_refill = [&](std::vector<double> z_src, bool cap_at_target) {
    // z on the weight >= j^2 bins of [j], zero elsewhere
    std::vector<double> hz(s.j, 0.0);
    for (std::uint32_t k = 1; k <= s.j; ++k) {
      double v = z_src[k - 1];
      if (cap_at_target) v = std::min(v, p.target(k));
      hz[k - 1] = v;
    }
    if (p.debug_skip_refill_zeroing) {
      // mutation hook: keep low-weight entries instead of zeroing them
      HighLevelState bad = make_refilling_state(p, s.g + 1, t, s.j, hz);
      for (std::uint32_t k = 1; k <= s.j; ++k)
        if (seq.log_weight(k) < log_j2) bad.z[k - 1] = hz[k - 1];
      return bad;
    }
    return make_refilling_state(p, s.g + 1, t, s.j, hz);
  };

  // R2
  for (const auto& set : s.sets) {
    if (noise_of(seq, set, b) >=
        p.lambda * static_cast<double>(set.size()) / 40.0)
      continue;
    if (s.type == StateType::refilling || s.type == StateType::advancing)
      return {make_failure_state(s.g + 1, t, s.j), RuleTag::noise_drop_failure};
    return {heavy_refill(means, true), RuleTag::noise_drop_refill};
  }

  // R3
  if (s.type == StateType::initialising) {
    BinClassification cls = classify_bin(seq, p.cc, s.j);
    if (is_covered(cls.bin_class)) {
      HighLevelState ns = make_advancing_state(p, s.g + 1, t, s.j);
      if (t3_holds(p, ns, b)) return {std::move(ns), RuleTag::init_to_advancing};
      return {make_failure_state(s.g + 1, t, s.j), RuleTag::init_failure};
    }
    HighLevelState ns = make_filling_state(p, s.g + 1, t, s.j, 0.0);
    if (t3_holds(p, ns, b)) return {std::move(ns), RuleTag::init_to_filling};
    return {make_failure_state(s.g + 1, t, s.j), RuleTag::init_failure};
  }

  // R4
  if (s.type == StateType::advancing || s.type == StateType::filling) {
    bool dwelled =
        static_cast<double>(t - s.tau) >= std::pow(jd, p.dwell_exp_advance);
    if (dwelled && means[s.j - 1] >= p.target(s.j)) {
      BinClassification cls = classify_bin(seq, p.cc, s.j + 1);
      HighLevelState ns =
          is_covered(cls.bin_class)
              ? make_advancing_state(p, s.g + 1, t, s.j + 1)
              : make_filling_state(p, s.g + 1, t, s.j + 1, 0.0);
      if (t3_holds(p, ns, b)) {
        RuleTag tag = is_covered(cls.bin_class) ? RuleTag::fill_complete_advancing
                                                : RuleTag::fill_complete_filling;
        return {std::move(ns), tag};
      }
      return {make_failure_state(s.g + 1, t, s.j), RuleTag::fill_complete_failure};
    }
    return {s, RuleTag::hold};
  }

  // R5
  if (s.type == StateType::refilling) {
    bool dwelled =
        static_cast<double>(t - s.tau) >= std::pow(jd, p.dwell_exp_refill);
    bool interior_full = true;
    for (std::uint32_t k = 1; k < s.j && interior_full; ++k)
      if (means[k - 1] < p.target(k)) interior_full = false;
    if (dwelled && interior_full) {
      HighLevelState ns =
          make_stabilising_state(p, s.g + 1, t, s.j, means[s.j - 1]);
      if (t3_holds(p, ns, b))
        return {std::move(ns), RuleTag::refill_to_stabilising};
      return {heavy_refill(means, false), RuleTag::refill_back};
    }
    return {s, RuleTag::hold};
  }

  // R6
  bool dwelled =
      static_cast<double>(t - s.tau) >= std::pow(jd, p.dwell_exp_stabilise);
  if (dwelled) {
    HighLevelState ns = make_filling_state(p, s.g + 1, t, s.j, means[s.j - 1]);
    if (t3_holds(p, ns, b)) return {std::move(ns), RuleTag::stabilise_to_filling};
    return {heavy_refill(means, false), RuleTag::stabilise_back};
  }
  return {s, RuleTag::hold};
}

Transition hls(const RuleParams& p, const HighLevelState& s,
               const std::vector<std::uint64_t>& b, std::uint64_t t) {
  return hls_with_means(p, s, state_means(p, s, t), b, t);
}

bool is_back_transition(const HighLevelState& prev, const HighLevelState& next,
                        RuleTag via) {
  if (next.type != StateType::refilling) return false;
  if (prev.type == StateType::refilling) return via == RuleTag::refill_back;
  if (prev.type == StateType::stabilising)
    return via == RuleTag::noise_drop_refill || via == RuleTag::stabilise_back;
  return false;
}

std::vector<AxiomViolation> check_axioms(const RuleParams& p,
                                         const std::vector<AxiomSample>& samples,
                                         Rng& rng, unsigned raises) {
  std::vector<AxiomViolation> out;
  auto flag = [&](std::size_t i, const char* axiom, const std::string& detail) {
    out.push_back({i, axiom, detail});
  };
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const AxiomSample& sm = samples[i];
    const HighLevelState& s = sm.state;
    std::vector<double> means = state_means(p, s, sm.t);
    Transition tr = hls_with_means(p, s, means, sm.occupancy, sm.t);
    const HighLevelState& ns = tr.next;
    bool changed = ns != s;

    if (changed && (ns.g != s.g + 1 || ns.tau != sm.t))
      flag(i, "T1", "changed state must get g+1 and tau = t");
    if (s.type == StateType::failure &&
        ns != make_failure_state(s.g + 1, sm.t, s.j))
      flag(i, "T2", "failure must map to the failure successor");
    for (const auto& set : ns.sets) {
      if (noise_of(*p.seq, set, sm.occupancy) <
          p.lambda * static_cast<double>(set.size()) / 40.0)
        flag(i, "T3", "noise floor fails on a successor set");
    }
    if (ns.j < s.j) flag(i, "T4", "j decreased");
    for (std::uint32_t l = s.j + 1; l <= ns.j; ++l)
      if (ns.z[l - 1] != 0.0) flag(i, "T4", "new bins must start at z = 0");
    if (s.type == StateType::initialising && ns.j != s.j)
      flag(i, "T4", "leaving initialising must keep j");
    if (ns.type == StateType::initialising) flag(i, "T5", "successor is initialising");

    if (changed) {
      for (std::uint32_t l = 1; l <= s.j; ++l) {
        double tol = 1e-9 * (1.0 + std::abs(means[l - 1]));
        if (ns.z[l - 1] > means[l - 1] + tol)
          flag(i, "V1", "z' exceeds the state mean at bin " + std::to_string(l));
      }
    }

    auto raised = [&](bool frozen_zeroed) {
      std::vector<std::uint64_t> b2 = sm.occupancy;
      for (std::size_t k = 0; k < b2.size(); ++k) {
        bool frozen = frozen_zeroed && k < ns.z.size() && ns.z[k] == 0.0;
        if (frozen) continue;
        b2[k] += rng.uniform_index(4);  // 0..3
      }
      return b2;
    };
    if (!changed) {
      for (unsigned r = 0; r < raises; ++r) {
        Transition tr2 = hls_with_means(p, s, means, raised(false), sm.t);
        if (tr2.next != s) {
          flag(i, "V2", "raising occupancy moved a fixed state");
          break;
        }
      }
    } else {
      for (unsigned r = 0; r < raises; ++r) {
        Transition tr2 = hls_with_means(p, s, means, raised(true), sm.t);
        if (tr2.next != ns) {
          flag(i, "V3", "raising non-zeroed occupancy changed the successor");
          break;
        }
      }
      // structured raise: +3 on every coordinate the successor keeps
      std::vector<std::uint64_t> b3 = sm.occupancy;
      for (std::size_t k = 0; k < b3.size(); ++k)
        if (k >= ns.z.size() || ns.z[k] != 0.0) b3[k] += 3;
      Transition tr3 = hls_with_means(p, s, means, b3, sm.t);
      if (tr3.next != ns)
        flag(i, "V3", "structured raise changed the successor");
    }

    if (!p.debug_skip_refill_zeroing) {
      try {
        check_state_shape(p, ns);
      } catch (const error& e) {
        flag(i, "shape", e.what());
      }
    }
  }
  return out;
}

std::vector<AxiomSample> sample_axiom_domain(const RuleParams& p,
                                             std::size_t count,
                                             std::uint32_t j_min,
                                             std::uint32_t j_max, Rng& rng) {
  std::vector<AxiomSample> out;
  out.reserve(count);
  while (out.size() < count) {
    AxiomSample sm;
    std::uint32_t j =
        j_min + static_cast<std::uint32_t>(rng.uniform_index(j_max - j_min + 1));
    BinClassification cls = classify_bin(*p.seq, p.cc, j);
    std::uint64_t tau = rng.uniform_index(20);
    int pick = static_cast<int>(rng.uniform_index(6));
    HighLevelState s;
    if (pick == 0) {
      s = make_failure_state(rng.uniform_index(5), tau, j);
    } else if (pick == 1) {
      s = make_initialising_state(p, tau, j);
    } else if (is_covered(cls.bin_class)) {
      s = make_advancing_state(p, 1 + rng.uniform_index(5), tau, j);
    } else if (pick == 2 || pick == 3) {
      double zj = rng.uniform() * 2.0 * p.target(j);
      s = make_filling_state(p, 1 + rng.uniform_index(5), tau, j, zj);
    } else if (pick == 4) {
      std::vector<double> hz(j);
      for (std::uint32_t k = 1; k <= j; ++k)
        hz[k - 1] = rng.uniform() * p.target(k);
      s = make_refilling_state(p, 1 + rng.uniform_index(5), tau, j, hz);
    } else {
      double zj = rng.uniform() * 2.0 * p.target(j);
      s = make_stabilising_state(p, 1 + rng.uniform_index(5), tau, j, zj);
    }
    sm.t = s.tau + (s.type == StateType::initialising ? 1 : 1 + rng.uniform_index(300));
    std::vector<double> means = state_means(p, s, sm.t);
    sm.occupancy.resize(j);
    bool near_mean = rng.bernoulli(0.5);
    for (std::uint32_t k = 0; k < j; ++k) {
      sm.occupancy[k] = near_mean ? rng.poisson(means[k])
                                  : rng.uniform_index(6);
    }
    sm.state = std::move(s);
    out.push_back(std::move(sm));
  }
  return out;
}

}  // namespace backoff
