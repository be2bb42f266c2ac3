#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "feller/core.hpp"
#include "feller/ifs_jump.hpp"
#include "feller/montecarlo.hpp"

namespace feller::diag {

/// One reported statistic. `t` holds the time or window start, `param` an
/// extra coordinate (eps for hitting rows, the partner initial for pairwise
/// rows), NaN when unused.
struct Row {
  std::string label;
  double x = 0.0;
  double t = 0.0;
  double param = 0.0;
  double value = 0.0;
  double half_width = 0.0;
  std::string error;
};

struct DiagnosticReport {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<Row> rows;

  bool ok() const;
  /// Rows carrying `label`, in report order.
  std::vector<const Row*> find(const std::string& label) const;
  const std::string* meta(const std::string& key) const;
};

/// Sampling settings shared by the diagnostics. Half-widths of rows that
/// aggregate K estimates are computed at level (1 - confidence) / K.
struct McConfig {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
  double confidence = 0.999;
  unsigned workers = 0;
  /// Use the closed-form law when the process has one.
  bool exact_when_available = true;
};

/// psi(x; T) = max over grid t in [T, t_max] of |P_t f(x) - P_t f(z)|, the
/// finite-window surrogate of limsup_t |P_t f(x) - P_t f(z)|. Rows "diff"
/// per (x, t) and "psi" per x (t = T).
DiagnosticReport ec_profile(const mc::Process& process, const TestFunction& f, double z,
                            std::span<const double> xs, double window_start, double window_end,
                            std::span<const double> grid, const McConfig& mc);

/// w_k = P_{t_k} f(x_k) - P_{t_k} f(z) per pair (rows "witness"), and the
/// floor min_k w_k (row "floor").
DiagnosticReport eproperty_witness(const mc::Process& process, const TestFunction& f, double z,
                                   std::span<const std::pair<double, double>> pairs,
                                   const McConfig& mc);

/// m(x) = min over t of P_t(x, B(z, eps)) (rows "m") and min_x m(x) (row
/// "scan_min"); "scan_lower" is max(0, scan_min - half_width).
DiagnosticReport lower_bound_scan(const mc::Process& process, double z, double eps,
                                  std::span<const double> x_grid, std::span<const double> t_grid,
                                  const McConfig& mc);

/// BL distance from the law of Phi^x(t) to `reference` (rows "distance"),
/// and between the laws from different initials at the same t (rows
/// "pairwise", param = the second initial). Distances to a point mass get a
/// Hoeffding half-width; pairwise distances are point estimates.
DiagnosticReport stability_report(const mc::Process& process, std::span<const double> initials,
                                  std::span<const double> t_grid,
                                  const EmpiricalMeasure& reference, const McConfig& mc);

/// max over the grid of sum_i p_i(x) |w_i(x) - z| - r(x) |x - z|.
double check_b2(const ifs::IfsModel& model, const ifs::AssumptionSet& assume,
                std::span<const double> x_grid);

/// max over the grid of sum_i |p_i(x) - p_i(z)| - omega(|x - z|).
double check_b3(const ifs::IfsModel& model, const ifs::AssumptionSet& assume,
                std::span<const double> x_grid);

/// Breakdown of the series bound at one point.
struct B5Terms {
  double partial_sum = 0.0;  // sum_{n=M}^{n_trunc} omega(J_n(x) |x-z| q^n)
  double tail = 0.0;         // geometric majorant of the remainder
  double ratio = 0.0;        // decay ratio used by the majorant
};

/// Series of B5 at x, q = lambda / (lambda - alpha). Throws std::domain_error
/// when the terms do not decay geometrically (majorant inapplicable).
B5Terms b5_series(const ifs::IfsModel& model, const ifs::AssumptionSet& assume, long n_trunc,
                  double x);

/// max over the grid (inside the closed ball of radius eta about z) of the
/// bounded series minus (1 - gamma).
double check_b5(const ifs::IfsModel& model, const ifs::AssumptionSet& assume, long n_trunc,
                std::span<const double> x_grid);

/// Times {0, 1, 2, 4, ...} up to t_search.
std::vector<double> c2_time_grid(double t_search);

/// For each (eps, x): best hitting probability of B(z, eps) over the time
/// grid and the earliest time attaining it (rows "c2_hit", param = eps; rows
/// "c2_fail" when it is zero). Per eps the floor min_x max_t (row "c2_beta").
DiagnosticReport check_c2(const mc::Process& process, double z, std::span<const double> eps_list,
                          std::span<const double> x_grid, double t_search, const McConfig& mc);

}  // namespace feller::diag
