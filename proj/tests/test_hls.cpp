#include <cmath>

#include "backoff/hls.hpp"
#include "backoff/volume.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace backoff;

namespace {

// weights (2, 30, 2, 2, ...): bin 2 is the only high-weight bin at j = 4
SendSequence lumpy() {
  return SendSequence::explicit_list(
      {1.0, 0.5, 1.0 / 30.0, 0.5, 0.5, 0.5, 0.5, 0.5});
}

RuleParams lumpy_params() {
  static SendSequence seq = lumpy();
  return RuleParams::synthetic(seq, 0.3);
}

}  // namespace

TEST_SUITE_BEGIN("hls");

TEST_CASE("state constructors enforce their shapes") {
  RuleParams p = lumpy_params();

  HighLevelState f = make_failure_state(3, 7, 4);
  CHECK(f.z == std::vector<double>(4, 0.0));
  CHECK(f.sets.empty());

  HighLevelState init = make_initialising_state(p, 10, 4);
  CHECK(init.g == 0);
  for (std::uint32_t k = 1; k <= 4; ++k)
    CHECK(init.z[k - 1] ==
          doctest::Approx(3.0 * 0.3 * p.seq->weight(k) / 4.0));

  // bin 4 of the lumpy sequence is exposed at these constants
  CHECK(is_exposed(classify_bin(*p.seq, p.cc, 4).bin_class));
  CHECK_THROWS_AS(make_advancing_state(p, 1, 10, 4), error);

  HighLevelState fill = make_filling_state(p, 1, 10, 4, 0.25);
  CHECK(fill.z[3] == 0.25);
  CHECK(fill.z[0] == doctest::Approx(p.target(1)));
  // main noise set excludes the high-weight bin 2
  REQUIRE(!fill.sets.empty());
  CHECK(fill.sets[0] == std::vector<std::uint32_t>{1, 3});
  check_state_shape(p, fill);

  HighLevelState refill = make_refilling_state(p, 2, 11, 4, {5.0, 5.0, 5.0, 5.0});
  CHECK(refill.z[0] == 0.0);   // W_1 = 2 < 16
  CHECK(refill.z[1] == 5.0);   // W_2 = 30 >= 16 keeps its value
  CHECK(refill.z[2] == 0.0);
  CHECK(refill.z[3] == 0.0);
  check_state_shape(p, refill);

  HighLevelState stab = make_stabilising_state(p, 2, 11, 4, 1.5);
  check_state_shape(p, stab);
  CHECK(stab.z[3] == 1.5);
}

TEST_CASE("state means and missing mass") {
  RuleParams p = lumpy_params();
  HighLevelState fill = make_filling_state(p, 1, 10, 4, 0.0);
  std::vector<double> at_tau = state_means(p, fill, 10);
  for (std::uint32_t k = 1; k <= 4; ++k) CHECK(at_tau[k - 1] == fill.z[k - 1]);

  // advancing-like start: bins below j full, bin j empty
  double expect = p.target(4);
  std::vector<std::uint32_t> all{1, 2, 3, 4};
  CHECK(missing_mass(p, fill, all, 10) == doctest::Approx(expect));

  // missing mass never grows along a fixed state
  double prev = missing_mass(p, fill, all, 10);
  for (std::uint64_t t = 11; t <= 60; ++t) {
    double cur = missing_mass(p, fill, all, t);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("failure states chain forever") {
  RuleParams p = lumpy_params();
  HighLevelState f = make_failure_state(2, 5, 4);
  Transition tr = hls(p, f, {0, 0, 0, 0}, 9);
  CHECK(tr.tag == RuleTag::failure_hold);
  CHECK(tr.next.type == StateType::failure);
  CHECK(tr.next.g == 3);
  CHECK(tr.next.tau == 9);
}

TEST_CASE("domain restrictions") {
  RuleParams p = lumpy_params();
  HighLevelState init = make_initialising_state(p, 10, 4);
  CHECK_THROWS_AS(hls(p, init, {0, 0, 0, 0}, 10), error);  // t must exceed tau
  CHECK_THROWS_AS(hls(p, init, {0, 0, 0, 0}, 12), error);  // init transitions at tau+1
}

TEST_CASE("healthy advancing-phase states hold until the dwell") {
  RuleParams p = lumpy_params();
  HighLevelState fill = make_filling_state(p, 1, 10, 4, 0.0);
  // plenty of noise on every set, dwell j^2 = 16 not yet reached
  std::vector<std::uint64_t> b{3, 3, 3, 3};
  Transition tr = hls(p, fill, b, 12);
  CHECK(tr.tag == RuleTag::hold);
  CHECK(tr.next == fill);
}

TEST_CASE("a noise drop in a filling state moves to refilling with zeroed low bins") {
  RuleParams p = lumpy_params();
  HighLevelState fill = make_filling_state(p, 1, 10, 4, 0.0);
  // bins 1 and 3 silent, high-weight bin 2 healthy enough to dodge R1(iii)
  std::vector<std::uint64_t> b{0, 5, 0, 7};
  Transition tr = hls(p, fill, b, 11);
  CHECK(tr.tag == RuleTag::noise_drop_refill);
  REQUIRE(tr.next.type == StateType::refilling);
  CHECK(tr.next.g == 2);
  CHECK(tr.next.tau == 11);
  CHECK(tr.next.z[0] == 0.0);
  CHECK(tr.next.z[2] == 0.0);
  CHECK(tr.next.z[3] == 0.0);
  std::vector<double> means = state_means(p, fill, 11);
  CHECK(tr.next.z[1] ==
        doctest::Approx(std::min(means[1], p.target(2))));
}

TEST_CASE("a noise drop in an advancing state is fatal") {
  // flat weight-2 sequence: bin 12 is many-covered at these constants, so
  // an advancing state exists and its noise set spans [1, 11]
  std::vector<double> probs(14, 0.5);
  probs[0] = 1.0;
  SendSequence seq = SendSequence::explicit_list(probs);
  RuleParams p = RuleParams::synthetic(seq, 0.3);
  REQUIRE(is_covered(classify_bin(seq, p.cc, 12).bin_class));
  HighLevelState adv = make_advancing_state(p, 1, 10, 12);
  REQUIRE(!adv.sets.empty());
  std::vector<std::uint64_t> quiet(12, 0);
  Transition tr = hls(p, adv, quiet, 11);
  CHECK(tr.tag == RuleTag::noise_drop_failure);
  CHECK(tr.next.type == StateType::failure);
}

TEST_CASE("heavy-bin starvation trips R1") {
  RuleParams p = lumpy_params();
  HighLevelState fill = make_filling_state(p, 1, 10, 4, 0.0);
  // state mean of bin 2 sits near its target, but the sample shows 1 ball
  // < lambda W_2 / 4 = 2.25
  std::vector<std::uint64_t> b{3, 1, 3, 3};
  Transition tr = hls(p, fill, b, 11);
  CHECK(tr.tag == RuleTag::heavy_bin_starved);
  CHECK(tr.next.type == StateType::failure);
}

TEST_CASE("back transitions are exactly the refilling returns") {
  RuleParams p = lumpy_params();
  HighLevelState refill = make_refilling_state(p, 2, 10, 4, {0, 5, 0, 0});
  HighLevelState stab = make_stabilising_state(p, 3, 20, 4, 0.5);
  HighLevelState refill2 = make_refilling_state(p, 4, 30, 4, {0, 4, 0, 0});

  CHECK_FALSE(is_back_transition(refill, stab, RuleTag::refill_to_stabilising));
  CHECK(is_back_transition(refill, refill2, RuleTag::refill_back));
  CHECK(is_back_transition(stab, refill2, RuleTag::stabilise_back));
  CHECK(is_back_transition(stab, refill2, RuleTag::noise_drop_refill));
  CHECK_FALSE(is_back_transition(refill, refill, RuleTag::hold));
}

TEST_CASE("a failed stabilising exit falls back to refilling") {
  // Fourteen weight-100 bins and five weight-1 bins at j = 20. The filling
  // candidate's main noise set {6..19} is strictly larger than the
  // stabilising far split {9..19}, so occupancy can satisfy the stabilising
  // sets while failing the filling candidate's noise floor.
  std::vector<double> probs{1.0};
  for (int k = 1; k <= 5; ++k) probs.push_back(1.0);
  for (int k = 6; k <= 19; ++k) probs.push_back(0.01);
  probs.push_back(0.5);  // bin 20
  probs.push_back(0.5);
  SendSequence seq = SendSequence::explicit_list(probs);

  RuleParams p;
  p.seq = &seq;
  p.lambda = 0.3;
  p.cc = ClassifierConstants::synthetic(0.3);
  p.cc.c_nb = 1e-4;  // keeps bin 20 exposed despite the heavy cluster
  p.dwell_exp_advance = 2.0;
  p.dwell_exp_refill = 1.0;
  p.dwell_exp_stabilise = 1.0;

  REQUIRE(is_exposed(classify_bin(seq, p.cc, 20).bin_class));
  HighLevelState stab = make_stabilising_state(p, 3, 100, 20, 0.2);
  REQUIRE(stab.sets.size() == 2);  // near and far low-weight splits

  std::vector<std::uint64_t> b(20, 0);
  for (int k = 1; k <= 5; ++k) b[k - 1] = 1;   // keeps the near split noisy
  for (int k = 9; k <= 17; ++k) b[k - 1] = 1;  // far split at 0.09 > 0.0825
  Transition tr = hls(p, stab, b, 121);        // past the j^1 dwell
  CHECK(tr.tag == RuleTag::stabilise_back);
  REQUIRE(tr.next.type == StateType::refilling);
  CHECK(is_back_transition(stab, tr.next, tr.tag));
}

TEST_CASE("a back transition adds at most lambda j^3 of missing mass") {
  // drive deterministic loop segments and compare the missing mass of the
  // new refilling state against the segment entry
  std::vector<double> probs{1.0};
  for (int k = 1; k <= 5; ++k) probs.push_back(1.0);
  for (int k = 6; k <= 19; ++k) probs.push_back(0.01);
  probs.push_back(0.5);
  probs.push_back(0.5);
  SendSequence seq = SendSequence::explicit_list(probs);
  RuleParams p;
  p.seq = &seq;
  p.lambda = 0.3;
  p.cc = ClassifierConstants::synthetic(0.3);
  p.cc.c_nb = 1e-4;
  p.dwell_exp_advance = 2.0;
  p.dwell_exp_refill = 1.0;
  p.dwell_exp_stabilise = 1.0;
  const std::uint32_t j = 20;
  std::vector<std::uint32_t> interior;
  for (std::uint32_t k = 1; k < j; ++k) interior.push_back(k);

  // stabilising entry at tau = 100, back transition at t = 121
  HighLevelState stab = make_stabilising_state(p, 3, 100, j, 0.2);
  double entry_mass = missing_mass(p, stab, interior, 100);
  std::vector<std::uint64_t> b(j, 0);
  for (int k = 1; k <= 5; ++k) b[k - 1] = 1;
  for (int k = 9; k <= 17; ++k) b[k - 1] = 1;
  Transition back = hls(p, stab, b, 121);
  REQUIRE(back.tag == RuleTag::stabilise_back);
  double after_mass = missing_mass(p, back.next, interior, 121);
  double jd = static_cast<double>(j);
  CHECK(after_mass <= entry_mass + p.lambda * jd * jd * jd + 1e-9);

  // refilling entry that bounces straight back via R5's fallback
  HighLevelState refill = back.next;
  std::vector<std::uint64_t> b2 = b;
  double entry2 = missing_mass(p, refill, interior, refill.tau);
  // run until the dwell passes and the interior means have refilled
  Transition next{refill, RuleTag::hold};
  std::uint64_t t = refill.tau;
  for (; t < refill.tau + 4000; ++t) {
    next = hls(p, refill, b2, t + 1);
    if (next.tag != RuleTag::hold) break;
  }
  if (next.tag == RuleTag::refill_back) {
    double after2 = missing_mass(p, next.next, interior, t + 1);
    CHECK(after2 <= entry2 + p.lambda * jd * jd * jd + 1e-9);
  }
}

TEST_CASE("axiom checker accepts the rule and catches a broken variant") {
  RuleParams p = lumpy_params();
  Rng rng(5);
  std::vector<AxiomSample> samples = sample_axiom_domain(p, 2000, 2, 4, rng);
  std::vector<AxiomViolation> v = check_axioms(p, samples, rng);
  for (const AxiomViolation& av : v)
    MESSAGE("axiom ", av.axiom, " sample ", av.sample, ": ", av.detail);
  CHECK(v.empty());

  RuleParams bad = p;
  bad.debug_skip_refill_zeroing = true;
  Rng rng2(5);
  std::vector<AxiomSample> samples2 = sample_axiom_domain(bad, 2000, 2, 4, rng2);
  std::vector<AxiomViolation> v2 = check_axioms(bad, samples2, rng2);
  CHECK(!v2.empty());
}

TEST_CASE("volume thinning follows the new expectations") {
  RuleParams p = lumpy_params();
  // ratio 0 empties a bin; ratio 1 keeps it intact
  HighLevelState fill = make_filling_state(p, 1, 0, 4, 0.0);
  VolumeProcess vp(p, fill, 77);
  vp.set_counts({4, 9, 2, 1});
  // drive one step with noise-free occupancy so R2 will fire: the jammed
  // core may scramble counts, so just check the resulting state shape
  Transition tr = vp.step();
  if (tr.next.type == StateType::refilling) {
    const auto& c = vp.counts();
    CHECK(c[0] == 0);
    CHECK(c[2] == 0);
    CHECK(c[3] == 0);
    CHECK(vp.state().z[0] == 0.0);
  }
}

TEST_CASE("volume process between transitions is the jammed law") {
  // a filling state that cannot transition (huge dwell, no noise sets):
  // counts at time t are Po(F(t)); check the mean against the recurrence
  SendSequence seq = SendSequence::explicit_list({1.0, 0.5, 0.5, 0.25});
  RuleParams p = RuleParams::synthetic(seq, 0.5);
  p.dwell_exp_advance = 50.0;  // hold forever at this scale
  HighLevelState s;
  s.g = 1;
  s.tau = 0;
  s.j = 3;
  s.z = {0.0, 0.0, 0.0};
  s.sets = {};
  s.type = StateType::filling;

  const int reps = 4000;
  const std::uint64_t horizon = 60;
  std::vector<double> mean(3, 0.0);
  for (int rep = 0; rep < reps; ++rep) {
    VolumeProcess vp(p, s, 1000 + rep);
    for (std::uint64_t i = 0; i < horizon; ++i) {
      Transition tr = vp.step();
      REQUIRE(tr.tag == RuleTag::hold);
    }
    for (int b = 0; b < 3; ++b)
      mean[b] += static_cast<double>(vp.counts()[b]);
  }
  std::vector<double> expect =
      run_fill_last(seq, 0.5, {0, 0, 0}, s.z, horizon);
  for (int b = 0; b < 3; ++b) {
    mean[b] /= reps;
    double se = std::sqrt(expect[b] / reps);
    CHECK(std::abs(mean[b] - expect[b]) <= 4.0 * se);
  }
}

TEST_CASE("veb composite holds the coupling invariants on a short run") {
  SendSequence seq = SendSequence::binary_exponential();
  VebOptions o;
  o.j0 = 3;
  o.horizon = 800;
  o.seed = 11;
  o.synthetic = true;
  o.shat_floor = 4.0;
  VebResult r = veb_run(seq, 0.007, o);
  CHECK(r.i1_violations == 0);
  CHECK(r.i2_violations == 0);
  CHECK(r.steps == 800);
  std::uint64_t prev_g = 0;
  for (const TransitionRecord& tr : r.transitions) {
    CHECK(tr.g == prev_g + 1);
    prev_g = tr.g;
  }
}

TEST_CASE("veb rejects out-of-range birth rates") {
  SendSequence seq = SendSequence::binary_exponential();
  VebOptions o;
  CHECK_THROWS_AS(veb_run(seq, 0.05, o), error);
}

TEST_SUITE_END();
