// Acceptance suite. Each TEST_CASE prints one line per criterion:
//   criterion <k>: PASS|FAIL  <measured values>  (<seconds>s, budget <b>s)
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "feller/diagnostics.hpp"
#include "feller/exact_ctmc.hpp"
#include "feller/ifs_jump.hpp"
#include "feller/montecarlo.hpp"

using namespace feller;

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void verdict(const std::string& id, bool ok, const std::string& detail, const Timer& timer,
             double budget) {
  const double s = timer.seconds();
  const bool pass = ok && s < budget;
  std::printf("criterion %s: %s  %s  (%.2fs, budget %.0fs)\n", id.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str(), s, budget);
  std::fflush(stdout);
  CHECK_MESSAGE(ok, detail);
  CHECK_MESSAGE(s < budget, "runtime " << s << "s over budget " << budget << "s");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

diag::McConfig monte_carlo(std::size_t samples, std::uint64_t seed) {
  diag::McConfig mc;
  mc.samples = samples;
  mc.seed = seed;
  mc.exact_when_available = false;
  return mc;
}

const diag::Row& only(const diag::DiagnosticReport& r, const std::string& label) {
  const auto rows = r.find(label);
  REQUIRE(rows.size() == 1);
  return *rows[0];
}

// P(Binomial(n, p) > k).
double binomial_upper_tail(int n, double p, int k) {
  double below = 0.0;
  for (int j = 0; j <= k; ++j) {
    below += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                      j * std::log(p) + (n - j) * std::log1p(-p));
  }
  return 1.0 - below;
}

}  // namespace

TEST_CASE("criterion_1 e-property failure of the chain, exact") {
  Timer timer;
  const auto f = x_min_1();
  double worst = 0.0;
  bool above = true;
  for (long n : {2L, 5L, 10L, 50L}) {
    const double t = static_cast<double>(n);
    const double w = ctmc::semigroup_apply(f, ctmc::CtmcState::low(n), t) -
                     ctmc::semigroup_apply(f, ctmc::CtmcState::zero(), t);
    const double closed = std::exp(-1.0) * (1.0 + 1.0 / t);
    worst = std::max(worst, std::abs(w - closed));
    above = above && w >= std::exp(-1.0);
  }
  verdict("1", worst <= 1e-12 && above, "max |w - e^-1(1+1/n)| = " + fmt("%.3g", worst), timer, 1.0);
}

TEST_CASE("criterion_2 eventual continuity of the chain, exact surrogate") {
  Timer timer;
  const auto p = mc::Process::ctmc();
  double worst = 0.0;
  for (long n : {2L, 5L, 10L}) {
    const double T = 10.0 * n, tmax = 100.0 * n;
    std::vector<double> grid;
    for (int i = 0; i <= 1000; ++i) grid.push_back(T + (tmax - T) * i / 1000.0);
    const std::vector<double> xs{1.0 / static_cast<double>(n)};
    const auto r = diag::ec_profile(p, x_min_1(), 0.0, xs, T, tmax, grid, diag::McConfig{});
    worst = std::max(worst, only(r, "psi").value);
  }
  const double bound = 11.0 * std::exp(-10.0);
  verdict("2", worst <= bound && worst < 5e-4,
          "max psi = " + fmt("%.6g", worst) + " vs 11e^-10 = " + fmt("%.6g", bound), timer, 1.0);
}

TEST_CASE("criterion_3 Chapman-Kolmogorov residual") {
  Timer timer;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<long> index(2, 200);
  std::uniform_real_distribution<double> time(0.0, 100.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const long n = index(rng);
    const double s = time(rng), t = time(rng);
    worst = std::max(worst, ctmc::chapman_kolmogorov_residual(n, s, t));
  }
  verdict("3", worst < 1e-12, "max residual = " + fmt("%.3g", worst), timer, 1.0);
}

TEST_CASE("criterion_4 Monte Carlo calibration") {
  Timer timer;
  const auto p = mc::Process::ctmc();
  const auto f = x_min_1();
  const double exact = ctmc::semigroup_apply(f, ctmc::CtmcState::low(4), 4.0);
  const int runs = 200;
  const double confidence = 0.999;
  int misses = 0;
  for (int seed = 1; seed <= runs; ++seed) {
    const auto e = mc::estimate_ptf(p, 0.25, 4.0, f, 10000, static_cast<std::uint64_t>(seed), confidence);
    misses += std::abs(e.mean - exact) > e.half_width;
  }
  // Misses are at most Binomial(200, 0.001) under nominal coverage; allow the
  // smallest k with P(X > k) <= 1 - confidence.
  int allowed = 0;
  while (binomial_upper_tail(runs, 1.0 - confidence, allowed) > 1.0 - confidence) ++allowed;
  verdict("4", misses <= allowed,
          std::to_string(runs - misses) + "/" + std::to_string(runs) + " covered, misses allowed " +
              std::to_string(allowed),
          timer, 60.0);
}

TEST_CASE("criterion_5 witness floor for the flip model") {
  Timer timer;
  const auto p = mc::Process::ifs(ifs::example_flip(1.0));
  const double lambda = 1.0;
  const double stated = 0.5 * lambda * std::exp(-lambda);
  std::vector<std::pair<double, double>> pairs;
  for (double n : {5.0, 10.0, 20.0}) pairs.emplace_back(1.0 / n, n);
  const auto mc = monte_carlo(100000, 41);
  const auto r = diag::eproperty_witness(p, x_min_1(), 0.0, pairs, mc);
  const auto w = r.find("witness");
  REQUIRE(w.size() == 3);
  bool above = true;
  std::string detail = "w =";
  for (const auto* row : w) {
    above = above && row->value >= 0.1839 - 3.0 * row->half_width;
    detail += " " + fmt("%.4f", row->value);
  }
  // Floor component: the mass the witness keeps at the far point n, which
  // is what must persist as n grows. Same streams as the witness rows.
  bool persistent = true;
  std::vector<mc::Estimate> floor;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [x, t] = pairs[k];
    floor.push_back(mc::estimate_hit(p, x, t, Ball(StatePoint(t), 0.5), mc.samples, mc.seed,
                                     1.0 - (1.0 - mc.confidence) / pairs.size(), 0,
                                     static_cast<std::uint32_t>(k + 1)));
    if (k > 0) {
      persistent = persistent && floor[k].mean >= floor[k - 1].mean - floor[k].half_width -
                                                      floor[k - 1].half_width;
    }
    persistent = persistent && floor[k].mean >= stated - floor[k].half_width;
  }
  detail += "; P(at n) =";
  for (const auto& e : floor) detail += " " + fmt("%.4f", e.mean);
  detail += " (hw " + fmt("%.4f", w[0]->half_width) + ", 1/2 e^-1 = " + fmt("%.4f", stated) + ")";
  verdict("5", above && persistent, detail, timer, 120.0);
}

TEST_CASE("criterion_6 asymptotic stability of the built-ins") {
  Timer timer;
  const auto mc = monte_carlo(10000, 6);
  const std::vector<double> t200{200.0};
  const struct {
    mc::Process process;
    std::vector<double> initials;
  } cases[] = {
      {mc::Process::ctmc(), {0.5, 3.0, 0.2}},
      {mc::Process::ifs(ifs::example_flip(1.0)), {0.1, 0.5, 1.0, 2.0}},
      {mc::Process::ifs(ifs::example_halving(1.0).model), {0.5, 1.0, 2.0}},
  };
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto r = diag::stability_report(c.process, c.initials, t200, EmpiricalMeasure::dirac(0.0), mc);
    double worst = 0.0;
    for (const auto* row : r.find("distance")) {
      ok = ok && row->error.empty() && row->value < 0.05;
      worst = std::max(worst, row->value);
    }
    ok = ok && r.find("distance").size() >= 3;
    detail += c.process.name() + " max d = " + fmt("%.3g", worst) + "; ";
  }
  verdict("6", ok, detail, timer, 120.0);
}

TEST_CASE("criterion_7a lower-bound scan for the halving model") {
  Timer timer;
  const auto p = mc::Process::ifs(ifs::example_halving(1.0).model);
  const std::vector<double> xs{0.1, 0.5, 1.0, 2.0, 5.0, 10.0}, ts{100.0, 150.0, 200.0};
  const auto r = diag::lower_bound_scan(p, 0.0, 0.1, xs, ts, monte_carlo(10000, 7));
  std::string detail = "m(x) =";
  for (const auto* row : r.find("m")) detail += " " + fmt("%.4f", row->value);
  const double lower = only(r, "scan_lower").value;
  detail += "; adjusted scan min = " + fmt("%.4f", lower) + " (need >= 0.9)";
  verdict("7 (scan)", lower >= 0.9, detail, timer, 120.0);
}

TEST_CASE("criterion_7b hitting floor beta for the halving model") {
  Timer timer;
  const auto [model, assume] = ifs::example_halving(1.0);
  const auto p = mc::Process::ifs(model);
  const std::vector<double> eps{0.1}, xs{0.25, 1.0, 4.0};
  const auto r = diag::check_c2(p, 0.0, eps, xs, 1024.0, monte_carlo(10000, 8));
  const auto& beta = only(r, "c2_beta");
  const bool ok = r.ok() && beta.value >= assume.beta - 3.0 * beta.half_width;
  verdict("7 (C2)", ok,
          "beta_hat = " + fmt("%.4f", beta.value) + " +- " + fmt("%.4f", beta.half_width) +
              ", beta = " + fmt("%.6f", assume.beta),
          timer, 120.0);
}

TEST_CASE("criterion_8 assumption identities") {
  Timer timer;
  auto [model, a] = ifs::example_halving(1.0);
  std::vector<double> grid;
  for (int i = 1; i <= 1000; ++i) grid.push_back(i * 0.01);
  const double b2 = diag::check_b2(model, a, grid);

  a.omega = ifs::omega_identity;
  const std::vector<double> eta{a.eta};
  const auto terms = diag::b5_series(model, a, 15, a.eta);
  const double series = terms.partial_sum + terms.tail;
  const double b5 = diag::check_b5(model, a, 15, eta);
  const double closed = 2.0 * a.eta * std::exp(a.eta);
  const bool b5_ok = std::abs(b5) <= 1e-12 && std::abs(series - closed) <= 1e-12 &&
                     std::abs(closed - std::exp(0.125) / 4.0) <= 1e-15;

  const double b3_identity = diag::check_b3(model, a, grid);
  const std::vector<double> near{0.01};
  const double b3_near = diag::check_b3(model, a, near);
  a.omega = ifs::omega_exp;
  const double b3_exp = diag::check_b3(model, a, grid);

  const bool ok = b2 <= 1e-12 && b5_ok && b3_exp <= 1e-12 && b3_near > 0.0 && b3_identity > 0.0;
  verdict("8", ok,
          "B2 " + fmt("%.3g", b2) + ", B5 residual " + fmt("%.3g", b5) + ", B3(exp) " +
              fmt("%.3g", b3_exp) + ", B3(id) at 0.01 " + fmt("%.3g", b3_near),
          timer, 5.0);
}

TEST_CASE("criterion_9 J_n closed form") {
  Timer timer;
  const auto [model, a] = ifs::example_halving(1.0);
  double worst = 0.0;
  for (double x : {0.01, 0.125, 1.0, 4.0}) {
    for (long n = 0; n <= 8; ++n) {
      const double closed = std::pow(1.0 - std::exp(-x) / 2.0, static_cast<double>(n));
      worst = std::max(worst, std::abs(ifs::j_n(model, a, x, n) - closed));
    }
  }
  verdict("9", worst <= 1e-12, "max |J_n - r^n| = " + fmt("%.3g", worst), timer, 5.0);
}

TEST_CASE("criterion_10 determinism of diagnose and simulate") {
  Timer timer;
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "feller_acceptance";
  fs::create_directories(dir);
  const std::vector<std::vector<std::string>> commands = {
      {"diagnose", "ec", "--model", "halving", "--samples", "4000"},
      {"diagnose", "eprop", "--model", "flip", "--samples", "4000", "--format", "json"},
      {"diagnose", "lowerbound", "--model", "halving", "--samples", "2000"},
      {"diagnose", "stability", "--model", "flip", "--samples", "4000"},
      {"diagnose", "assumptions", "--model", "halving", "--samples", "2000", "--n-trunc", "12"},
      {"diagnose", "stability", "--model", "ctmc", "--initials", "0.5,3", "--samples", "4000"},
      {"simulate", "--model", "flip", "--trajectories", "200", "--horizon", "50"},
      {"simulate", "--model", "ctmc", "--x", "0.25", "--trajectories", "200"},
  };
  auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  bool ok = true;
  int compared = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<std::string> outputs;
    for (const char* workers : {"1", "4", "1", "4"}) {
      const auto path = dir / ("run" + std::to_string(c) + "_" + std::to_string(outputs.size()));
      std::vector<std::string> args{"feller-diag"};
      args.insert(args.end(), commands[c].begin(), commands[c].end());
      args.insert(args.end(), {"--seed", "99", "--workers", workers, "--out", path.string()});
      std::ostringstream out, err;
      ok = ok && cli::run_cli(args, out, err) == 0;
      outputs.push_back(read(path));
    }
    for (const auto& o : outputs) ok = ok && !o.empty() && o == outputs[0];
    ++compared;
  }
  verdict("10", ok, std::to_string(compared) + " commands byte-identical with 1 and 4 workers", timer, 60.0);
}
