#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "feller/ifs_jump.hpp"

using namespace feller;
using namespace feller::ifs;

namespace {

// J_n by plain enumeration of all N^n words, counting in base N.
double j_n_brute(const IfsModel& model, const AssumptionSet& a, double x, long n) {
  const std::size_t big_n = model.size();
  std::vector<std::size_t> word(static_cast<std::size_t>(n), 0);
  double best = 0.0;
  while (true) {
    double product = 1.0;
    for (long j = 0; j < n; ++j) {
      // w_{i_1} o ... o w_{i_j} applied to x: i_j first.
      double y = x;
      for (long l = j - 1; l >= 0; --l) y = model.apply(word[static_cast<std::size_t>(l)], y);
      product *= a.r(y);
    }
    best = std::max(best, product);
    std::size_t pos = 0;
    while (pos < word.size() && ++word[pos] == big_n) word[pos++] = 0;
    if (pos == word.size()) break;
  }
  return best;
}

IfsModel two_map_model(IfsModel::Map w1, IfsModel::Map w2, double alpha = 0.0) {
  return IfsModel("test", {std::move(w1), std::move(w2)},
                  [](double, std::span<double> p) { p[0] = p[1] = 0.5; }, Flow{alpha}, 1.0);
}

}  // namespace

TEST_CASE("probability vectors") {
  CHECK_NOTHROW(ProbVector({0.25, 0.75}));
  CHECK_THROWS_AS(ProbVector({0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({1.5, -0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ProbVector({}), std::invalid_argument);

  const auto flip = example_flip(1.0);
  const auto halving = example_halving(1.0).model;
  for (int i = 0; i <= 2000; ++i) {
    const double x = i * 0.005;
    CHECK_NOTHROW(flip.probabilities(x));
    CHECK_NOTHROW(halving.probabilities(x));
  }
  CHECK(flip.probabilities(0.0)[1] == 1.0);
  CHECK(flip.probabilities(4.0)[2] == doctest::Approx(0.125));
  CHECK(halving.probabilities(1.0)[0] == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("model construction is validated") {
  CHECK_THROWS_AS(IfsModel("x", {}, [](double, std::span<double>) {}, Flow{}, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(example_flip(0.0), std::invalid_argument);
  CHECK_THROWS_AS(example_flip(-1.0), std::invalid_argument);
}

TEST_CASE("halving assumption constants") {
  const auto a = example_halving(1.0).assume;
  CHECK(a.eta == 0.125);
  CHECK(1.0 - a.gamma == doctest::Approx(std::exp(0.125) / 4.0).epsilon(1e-15));
  CHECK(a.beta == doctest::Approx(0.288788095086602).epsilon(1e-13));
  CHECK(omega_exp(0.0) == 0.0);
  CHECK(omega_exp(1.0) == doctest::Approx(2.0 * (1.0 - std::exp(-1.0))));
}

TEST_CASE("jump chain records follow the construction") {
  const auto flip = example_flip(1.0);
  for (std::uint32_t k = 0; k < 200; ++k) {
    Stream s(3, 0, k);
    const auto traj = sample_jump_chain(flip, 0.5, 30.0, s);
    double prev_tau = 0.0, prev_phi = 0.5;
    for (const auto& r : traj.records) {
      CHECK(r.tau > prev_tau);
      CHECK(r.tau <= 30.0);
      CHECK(r.xi == prev_phi);  // identity flow
      REQUIRE(r.index >= 1);
      REQUIRE(r.index <= 3);
      CHECK(r.phi == flip.apply(r.index - 1, r.xi));
      CHECK((r.phi == 0.0 || r.phi == 0.5 || r.phi == 2.0));
      prev_tau = r.tau;
      prev_phi = r.phi;
    }
  }
  Stream s(3, 0, 0);
  CHECK(sample_jump_chain(flip, 0.5, 0.0, s).records.empty());
}

TEST_CASE("flow between jumps") {
  const auto model = two_map_model([](double x) { return x / 2.0; }, [](double x) { return x / 3.0; }, 0.2);
  Stream s(1, 2, 3);
  const auto traj = sample_jump_chain(model, 1.0, 20.0, s);
  REQUIRE(traj.records.size() > 2);
  double prev_tau = 0.0, prev_phi = 1.0;
  for (const auto& r : traj.records) {
    CHECK(r.xi == doctest::Approx(prev_phi * std::exp(0.2 * (r.tau - prev_tau))).epsilon(1e-14));
    prev_tau = r.tau;
    prev_phi = r.phi;
  }
  const double t = (traj.records[1].tau + traj.records[2].tau) / 2.0;
  CHECK(state_at(traj, model, t) ==
        doctest::Approx(traj.records[1].phi * std::exp(0.2 * (t - traj.records[1].tau))));
  CHECK(state_at(traj, model, traj.records[0].tau) == traj.records[0].phi);
  CHECK_THROWS_AS(state_at(traj, model, 21.0), std::out_of_range);
}

TEST_CASE("jump counts are Poisson(lambda T)") {
  const auto model = example_flip(2.5);
  double total = 0.0;
  const int reps = 20000;
  for (int k = 0; k < reps; ++k) {
    Stream s(17, 0, static_cast<std::uint32_t>(k));
    total += static_cast<double>(sample_jump_chain(model, 1.0, 4.0, s).records.size());
  }
  // Mean 10, standard error sqrt(10 / 2e4) = 0.022.
  CHECK(std::abs(total / reps - 10.0) < 0.15);
}

TEST_CASE("state sampling is consistent with the jump chain") {
  const auto model = example_halving(1.0).model;
  for (std::uint32_t k = 0; k < 300; ++k) {
    Stream a(5, 0, k), b(5, 0, k), c(5, 0, k);
    const std::vector<double> times{0.0, 0.7, 3.0, 12.0};
    std::vector<double> out(times.size()), head(1);
    sample_states(model, 2.0, times, a, out);
    const auto traj = sample_jump_chain(model, 2.0, 12.0, b);
    for (std::size_t j = 0; j < times.size(); ++j) CHECK(out[j] == state_at(traj, model, times[j]));
    // The state at 0.7 does not depend on the later times.
    const std::vector<double> first{0.7};
    sample_states(model, 2.0, first, c, head);
    CHECK(head[0] == out[1]);
  }
}

TEST_CASE("a map leaving X is reported") {
  const auto bad = two_map_model([](double x) { return x - 10.0; }, [](double x) { return x; });
  bool thrown = false;
  for (std::uint32_t k = 0; k < 20 && !thrown; ++k) {
    Stream s(1, 0, k);
    try {
      sample_jump_chain(bad, 1.0, 50.0, s);
    } catch (const std::runtime_error& e) {
      thrown = true;
      CHECK(std::string(e.what()).find("w_1") != std::string::npos);
    }
  }
  CHECK(thrown);
}

TEST_CASE("J_n agrees with enumeration") {
  const auto [halving, a] = example_halving(1.0);
  for (double x : {0.05, 0.125, 1.0, 3.0}) {
    CHECK(j_n(halving, a, x, 0) == 1.0);
    for (long n = 1; n <= 8; ++n) {
      const double closed = std::pow(1.0 - std::exp(-x) / 2.0, static_cast<double>(n));
      CHECK(std::abs(j_n(halving, a, x, n) - closed) <= 1e-12);
      CHECK(std::abs(j_n_brute(halving, a, x, n) - closed) <= 1e-12);
    }
  }

  // A model where the maximizing word is not constant and composition order
  // matters.
  const auto model = two_map_model([](double x) { return x / 2.0; }, [](double x) { return x + 1.0; });
  AssumptionSet b = a;
  b.r = [](double y) { return 0.3 + 0.6 * std::abs(std::sin(3.0 * y)); };
  for (double x : {0.1, 0.7, 2.0}) {
    for (long n = 1; n <= 10; ++n) {
      CHECK(j_n(model, b, x, n) == doctest::Approx(j_n_brute(model, b, x, n)).epsilon(1e-14));
    }
  }

  CHECK_THROWS_AS(j_n(halving, a, 1.0, 21), std::length_error);  // 2^21 > 1e6
  CHECK_NOTHROW(j_n(halving, a, 1.0, 19));
  AssumptionSet c = a;
  c.r = [](double) { return 1.5; };
  CHECK_THROWS_AS(j_n(halving, c, 1.0, 3), std::domain_error);
  CHECK_THROWS_AS(j_n(halving, a, 1.0, -1), std::invalid_argument);
}
