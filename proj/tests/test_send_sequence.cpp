#include <cmath>

#include "backoff/send_sequence.hpp"
#include "doctest.h"

using namespace backoff;

TEST_SUITE_BEGIN("send_sequence");

TEST_CASE("binary exponential matches 2^-k") {
  SendSequence s = SendSequence::binary_exponential();
  CHECK(s.prob(3) == doctest::Approx(1.0 / 8.0));
  CHECK(s.prob(0) == 1.0);
  CHECK(s.log_weight(10) == doctest::Approx(10.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("p_0 is 1 for every family") {
  std::vector<SendSequence> all;
  all.push_back(SendSequence::constant(0.3));
  all.push_back(SendSequence::binary_exponential());
  all.push_back(SendSequence::geometric(10));
  all.push_back(SendSequence::polynomial(2));
  all.push_back(SendSequence::explicit_list({1.0, 0.5, 0.25}));
  all.push_back(SendSequence::interleaved_aloha_exp(10, {0, 20}));
  all.push_back(SendSequence::weakly_exposed_example(
      2, 2, 0.5, ClassifierConstants::synthetic(0.5)));
  for (const SendSequence& s : all) {
    CHECK(s.prob(0) == 1.0);
    CHECK(s.log_weight(0) == 0.0);
  }
}

TEST_CASE("polynomial uses k^-c from bin 1") {
  SendSequence s = SendSequence::polynomial(2);
  CHECK(s.prob(3) == doctest::Approx(1.0 / 9.0));
  CHECK(s.prob(1) == doctest::Approx(1.0));
}

TEST_CASE("geometric log weights stay finite far past double range") {
  SendSequence s = SendSequence::geometric(10);
  CHECK(s.prob(4) == doctest::Approx(1e-4));
  CHECK(s.log_weight(400) == doctest::Approx(400.0 * std::log(10.0)));
  CHECK(std::isinf(s.weight(400)));
}

TEST_CASE("constant family") {
  SendSequence s = SendSequence::constant(0.5);
  CHECK(s.prob(7) == doctest::Approx(0.5));
}

TEST_CASE("interleaved family follows the schedule parity") {
  SendSequence s = SendSequence::interleaved_aloha_exp(10, {0, 20});
  CHECK(s.prob(5) == doctest::Approx(1e-5));  // even interval [0,19]
  CHECK(s.prob(25) == doctest::Approx(0.5));  // odd interval [20,inf)

  SendSequence t = SendSequence::interleaved_aloha_exp(10, {0, 4, 16, 64});
  SendSequence geo = SendSequence::geometric(10);
  for (std::uint64_t k = 0; k <= 10000; ++k) {
    bool even;
    if (k < 4) even = true;
    else if (k < 16) even = false;
    else if (k < 64) even = true;
    else even = false;
    if (even)
      CHECK(t.log_weight(k) == geo.log_weight(k));
    else
      CHECK(t.prob(k) == doctest::Approx(0.5));
  }
}

TEST_CASE("weakly exposed example bands at synthetic constants") {
  // C = 2: schedule 0, 1, 4, 256, ...; with unit constants and lambda = 0.5
  // the reachable bands sit just below 4 and 256.
  SendSequence s = SendSequence::weakly_exposed_example(
      2, 2, 0.5, ClassifierConstants::synthetic(0.5));
  CHECK(s.prob(4) == doctest::Approx(std::pow(2.0, -4)));
  CHECK(s.log_weight(3) == doctest::Approx(3.0 * std::log(4.0)));  // 4^-chi, chi=3
  CHECK(s.prob(10) == doctest::Approx(0.5));
  CHECK(s.log_weight(256) == doctest::Approx(256.0 * std::log(2.0)));
  CHECK(s.log_weight(255) == doctest::Approx(3.0 * std::log(256.0)));
  CHECK(s.prob(100) == doctest::Approx(0.5));
}

TEST_CASE("weakly exposed example rejects overlapping reachable bands") {
  // genuine constants make R(k) ~ 1e6, far above the early schedule points
  CHECK_THROWS_AS(SendSequence::weakly_exposed_example(10, 2, 0.1), error);
}

TEST_CASE("explicit family validates and errors past its end") {
  CHECK_THROWS_AS(SendSequence::explicit_list({}), error);
  CHECK_THROWS_AS(SendSequence::explicit_list({0.5, 0.5}), error);
  CHECK_THROWS_AS(SendSequence::explicit_list({1.0, 1.5}), error);
  SendSequence s = SendSequence::explicit_list({1.0, 0.5, 0.25});
  CHECK(s.prob(2) == doctest::Approx(0.25));
  CHECK_THROWS_AS(s.prob(3), error);
}

TEST_CASE("family parameter validation") {
  CHECK_THROWS_AS(SendSequence::constant(0.0), error);
  CHECK_THROWS_AS(SendSequence::geometric(1.5), error);
  CHECK_THROWS_AS(SendSequence::polynomial(0.0), error);
  CHECK_THROWS_AS(SendSequence::interleaved_aloha_exp(10, {1, 2}), error);
  CHECK_THROWS_AS(SendSequence::interleaved_aloha_exp(10, {0, 4, 4}), error);
}

TEST_CASE("validate_cap") {
  SendSequence be = SendSequence::binary_exponential();
  CapReport r = be.validate_cap(0.5, 50);
  CHECK(r.all_pass);
  CHECK_FALSE(r.first_fail.has_value());

  CapReport one = SendSequence::constant(1.0).validate_cap(0.5, 10);
  CHECK(one.all_pass);

  // 10 > 2/1.9, so the very first bin breaks the cap
  CapReport geo = SendSequence::geometric(10).validate_cap(1.9, 3);
  CHECK_FALSE(geo.all_pass);
  CHECK(geo.first_fail == 1);
}

TEST_CASE("prob and log_weight are inverse within representable range") {
  std::vector<SendSequence> all;
  all.push_back(SendSequence::constant(0.37));
  all.push_back(SendSequence::binary_exponential());
  all.push_back(SendSequence::geometric(7));
  all.push_back(SendSequence::polynomial(1.7));
  all.push_back(SendSequence::interleaved_aloha_exp(3, {0, 5, 50}));
  for (const SendSequence& s : all) {
    for (std::uint64_t k = 0; k <= 200; ++k) {
      double lw = s.log_weight(k);
      if (lw > 700.0) continue;
      CHECK(s.prob(k) * std::exp(lw) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(lw >= 0.0);
    }
  }
}

TEST_CASE("log weights are monotone for the monotone families") {
  std::vector<SendSequence> mono;
  mono.push_back(SendSequence::binary_exponential());
  mono.push_back(SendSequence::geometric(4));
  mono.push_back(SendSequence::polynomial(2.5));
  for (const SendSequence& s : mono)
    for (std::uint64_t k = 0; k < 500; ++k)
      CHECK(s.log_weight(k + 1) >= s.log_weight(k));
}

TEST_SUITE_END();
