#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "feller/exact_ctmc.hpp"

using namespace feller;
using namespace feller::ctmc;

namespace {

// The transition table written out directly.
double table(const CtmcState& i, const CtmcState& j, double t) {
  using K = CtmcState::Kind;
  if (i.kind() == K::Zero) return j.kind() == K::Zero ? 1.0 : 0.0;
  if (j.kind() != K::Zero && j.n() != i.n()) return 0.0;
  const double s = t / static_cast<double>(i.n());
  const double e = std::exp(-s);
  if (i.kind() == K::Low) {
    if (j.kind() == K::Low) return e;
    if (j.kind() == K::High) return s * e;
    return 1.0 - e - s * e;
  }
  if (j.kind() == K::High) return e;
  if (j.kind() == K::Zero) return 1.0 - e;
  return 0.0;
}

std::vector<CtmcState> states(long n) {
  return {CtmcState::low(n), CtmcState::high(n), CtmcState::zero()};
}

}  // namespace

TEST_CASE("states and their embedding") {
  CHECK(CtmcState::low(4).embedding() == 0.25);
  CHECK(CtmcState::high(4).embedding() == 4.0);
  CHECK(CtmcState::zero().embedding() == 0.0);
  for (long n : {2L, 3L, 7L, 50L, 1000L}) {
    CHECK(CtmcState::from_point(1.0 / static_cast<double>(n)) == CtmcState::low(n));
    CHECK(CtmcState::from_point(static_cast<double>(n)) == CtmcState::high(n));
  }
  CHECK(CtmcState::from_point(0.0) == CtmcState::zero());
  CHECK_THROWS_AS(CtmcState::low(1), std::invalid_argument);
  CHECK_THROWS_AS(CtmcState::high(0), std::invalid_argument);
  CHECK_THROWS(CtmcState::from_point(1.0));
  CHECK_THROWS(CtmcState::from_point(0.3));
  CHECK_THROWS(CtmcState::from_point(2.5));
  CHECK(CtmcState::low(3).to_string().find('3') != std::string::npos);
}

TEST_CASE("transition probabilities match the table") {
  for (long n : {2L, 3L, 10L, 50L}) {
    for (double t : {0.0, 1e-9, 0.5, 1.0, 3.0, 17.0, 200.0}) {
      for (const auto& i : states(n)) {
        double row = 0.0;
        for (const auto& j : states(n)) {
          const double p = transition_prob(i, j, t);
          CHECK(p >= 0.0);
          CHECK(p == doctest::Approx(table(i, j, t)).epsilon(1e-12));
          row += p;
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
  }
  // States of different index never communicate.
  CHECK(transition_prob(CtmcState::low(2), CtmcState::high(3), 1.0) == 0.0);
  CHECK(transition_prob(CtmcState::low(2), CtmcState::low(2), 0.0) == 1.0);
  CHECK(transition_prob(CtmcState::low(2), CtmcState::zero(), 0.0) == 0.0);
  CHECK_THROWS_AS(transition_prob(CtmcState::low(2), CtmcState::low(2), -1.0), std::invalid_argument);
}

TEST_CASE("laws and the semigroup") {
  const auto f = x_min_1();
  for (long n : {2L, 5L, 10L, 50L}) {
    for (double t : {0.0, 0.3, 2.0, 40.0}) {
      for (const auto& i : states(n)) {
        const auto mu = law(i, t);
        double total = 0.0, pf = 0.0;
        for (std::size_t k = 0; k < mu.size(); ++k) total += mu.weights()[k];
        for (const auto& j : states(n)) pf += table(i, j, t) * f(j.embedding());
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(semigroup_apply(f, i, t) == doctest::Approx(pf).epsilon(1e-12));
      }
    }
    // The e-property witness at (1/n, n).
    const double w = semigroup_apply(f, CtmcState::low(n), static_cast<double>(n)) -
                     semigroup_apply(f, CtmcState::zero(), static_cast<double>(n));
    CHECK(std::abs(w - std::exp(-1.0) * (1.0 + 1.0 / static_cast<double>(n))) <= 1e-12);
  }
}

TEST_CASE("Chapman-Kolmogorov holds for the table") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> time(0.0, 60.0);
  for (int trial = 0; trial < 200; ++trial) {
    const long n = 2 + static_cast<long>(rng() % 40);
    const double s = time(rng), t = time(rng);
    CHECK(chapman_kolmogorov_residual(n, s, t) < 1e-12);
    // Independent recomputation from the entries.
    for (const auto& i : states(n)) {
      for (const auto& j : states(n)) {
        double sum = 0.0;
        for (const auto& k : states(n)) sum += transition_prob(i, k, s) * transition_prob(k, j, t);
        CHECK(std::abs(sum - transition_prob(i, j, s + t)) < 1e-12);
      }
    }
  }
}

TEST_CASE("sampled paths follow the table") {
  const long n = 3;
  const double t = 4.0;
  const int reps = 100000;
  int low = 0, high = 0;
  for (int k = 0; k < reps; ++k) {
    Stream s(123, 0, static_cast<std::uint32_t>(k));
    const auto state = sample_path(CtmcState::low(n), t, s);
    low += state.kind() == CtmcState::Kind::Low;
    high += state.kind() == CtmcState::Kind::High;
  }
  // 6 standard errors of a proportion with n = 1e5 is at most 0.0095.
  CHECK(std::abs(low / double(reps) - table(CtmcState::low(n), CtmcState::low(n), t)) < 0.0095);
  CHECK(std::abs(high / double(reps) - table(CtmcState::low(n), CtmcState::high(n), t)) < 0.0095);
}

TEST_CASE("jump lists agree with the path sampler") {
  for (std::uint32_t k = 0; k < 500; ++k) {
    Stream a(9, 1, k), b(9, 1, k);
    const auto start = k % 2 ? CtmcState::low(4) : CtmcState::high(4);
    const auto jumps = sample_jumps(start, 1e300, a);
    REQUIRE(!jumps.empty());
    CHECK(jumps.back().to == CtmcState::zero());
    for (std::size_t j = 1; j < jumps.size(); ++j) {
      CHECK(jumps[j].time > jumps[j - 1].time);
      CHECK(jumps[j].from == jumps[j - 1].to);
    }
    const double t = 3.0;
    CtmcState at = start;
    for (const auto& jp : jumps) {
      if (jp.time <= t) at = jp.to;
    }
    CHECK(sample_path(start, t, b) == at);
  }
  Stream s(1, 0, 0);
  CHECK(sample_jumps(CtmcState::zero(), 10.0, s).empty());
  CHECK(sample_jumps(CtmcState::low(2), 0.0, s).empty());
}
