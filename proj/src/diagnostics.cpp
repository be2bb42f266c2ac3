#include "feller/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "feller/report.hpp"

namespace feller::diag {

bool DiagnosticReport::ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.error.empty(); });
}

std::vector<const Row*> DiagnosticReport::find(const std::string& label) const {
  std::vector<const Row*> out;
  for (const auto& r : rows) {
    if (r.label == label) out.push_back(&r);
  }
  return out;
}

const std::string* DiagnosticReport::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return &v;
  }
  return nullptr;
}

namespace {

constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

bool exact_mode(const mc::Process& process, const McConfig& mc) {
  return mc.exact_when_available && process.has_exact_law();
}

// Marginal laws of Phi^x(t) on an ascending time grid, either closed form or
// as columns of a sample matrix.
class Marginals {
 public:
  Marginals(const mc::Process& process, double x, std::vector<double> times, std::uint32_t cell,
            const McConfig& mc)
      : times_(std::move(times)), exact_(exact_mode(process, mc)) {
    if (exact_) {
      for (double t : times_) laws_.push_back(process.exact_law(x, t));
    } else {
      n_ = mc.samples;
      states_ = mc::sample_states(process, x, times_, n_, mc.seed, cell, mc.workers);
    }
  }

  std::size_t column(double t) const {
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    return static_cast<std::size_t>(it - times_.begin());
  }

  double expect(const TestFunction& f, double t) const {
    const std::size_t j = column(t);
    if (exact_) return pair(f, laws_[j]);
    double sum = 0.0;
    for (std::size_t k = 0; k < n_; ++k) sum += f(states_[k * times_.size() + j]);
    return sum / static_cast<double>(n_);
  }

  double hit(const Ball& ball, double t) const {
    const std::size_t j = column(t);
    if (exact_) return mass(laws_[j], ball);
    std::size_t count = 0;
    for (std::size_t k = 0; k < n_; ++k) count += ball.contains(states_[k * times_.size() + j]);
    return static_cast<double>(count) / static_cast<double>(n_);
  }

  EmpiricalMeasure law(double t) const {
    const std::size_t j = column(t);
    if (exact_) return laws_[j];
    std::vector<double> col(n_);
    for (std::size_t k = 0; k < n_; ++k) col[k] = states_[k * times_.size() + j];
    return EmpiricalMeasure::from_samples(col);
  }

 private:
  std::vector<double> times_;
  bool exact_;
  std::vector<EmpiricalMeasure> laws_;
  std::vector<double> states_;
  std::size_t n_ = 0;
};

// Marginals for one initial, or the message of the failure that prevented
// them; the failure is reported on that initial's rows only.
struct Attempt {
  std::optional<Marginals> laws;
  std::string error;
};

Attempt attempt(const mc::Process& process, double x, std::vector<double> times, std::uint32_t cell,
                const McConfig& mc) {
  Attempt a;
  try {
    a.laws.emplace(process, x, std::move(times), cell, mc);
  } catch (const std::exception& e) {
    a.error = e.what();
  }
  return a;
}

std::vector<double> sorted_unique(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Half-width of one of `count` simultaneous estimates of a functional with
// range `width`, so that all hold jointly at the configured confidence.
double joint_half_width(const mc::Process& process, const McConfig& mc, double width,
                        std::size_t count) {
  if (exact_mode(process, mc)) return 0.0;
  const double delta = (1.0 - mc.confidence) / static_cast<double>(std::max<std::size_t>(count, 1));
  return mc::hoeffding_half_width(width, mc.samples, 1.0 - delta);
}

std::vector<std::pair<std::string, std::string>> base_metadata(const std::string& diagnostic,
                                                               const mc::Process& process,
                                                               const McConfig& mc) {
  std::vector<std::pair<std::string, std::string>> meta = {
      {"diagnostic", diagnostic},
      {"model", process.name()},
      {"mode", exact_mode(process, mc) ? "exact" : "monte-carlo"},
  };
  if (process.model()) meta.emplace_back("lambda", format_double(process.rate()));
  if (!exact_mode(process, mc)) {
    meta.emplace_back("seed", std::to_string(mc.seed));
    meta.emplace_back("samples", std::to_string(mc.samples));
    meta.emplace_back("confidence", format_double(mc.confidence));
  }
  return meta;
}

std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += format_double(v[i]);
  }
  return s;
}

void require_nonempty(std::span<const double> v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": grid empty");
}

}  // namespace

DiagnosticReport ec_profile(const mc::Process& process, const TestFunction& f, double z,
                            std::span<const double> xs, double window_start, double window_end,
                            std::span<const double> grid, const McConfig& mc) {
  require_nonempty(grid, "ec_profile");
  require_nonempty(xs, "ec_profile");
  if (!(window_start <= window_end)) throw std::invalid_argument("ec_profile: T > t_max");
  for (double t : grid) {
    if (t < window_start || t > window_end) {
      throw std::invalid_argument("ec_profile: grid time outside [T, t_max]");
    }
  }
  const auto times = sorted_unique(grid);
  // Equal initial points share a stream cell, so psi(z; T) is exactly 0.
  std::vector<double> points{z};
  for (double x : xs) {
    if (std::find(points.begin(), points.end(), x) == points.end()) points.push_back(x);
  }
  const Marginals at_z_laws(process, z, times, 0, mc);
  std::vector<Attempt> laws;
  for (std::size_t c = 1; c < points.size(); ++c) {
    laws.push_back(attempt(process, points[c], times, static_cast<std::uint32_t>(c), mc));
  }
  const double hw = joint_half_width(process, mc, f.range_width(), points.size() * times.size());

  DiagnosticReport report;
  report.metadata = base_metadata("ec", process, mc);
  report.metadata.emplace_back("f", f.name());
  report.metadata.emplace_back("z", format_double(z));
  report.metadata.emplace_back("window", "[" + format_double(window_start) + ", " +
                                             format_double(window_end) + "]");
  report.metadata.emplace_back("grid", join(times));

  std::vector<double> at_z(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) at_z[j] = at_z_laws.expect(f, times[j]);
  std::vector<Row> psi_rows;
  for (double x : xs) {
    const auto c = static_cast<std::size_t>(std::find(points.begin(), points.end(), x) - points.begin());
    const double row_hw = c == 0 ? 0.0 : 2.0 * hw;
    if (c > 0 && !laws[c - 1].laws) {
      psi_rows.push_back({"psi", x, window_start, kNone, kNone, row_hw, laws[c - 1].error});
      continue;
    }
    double psi = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double diff = c == 0 ? 0.0 : std::abs(laws[c - 1].laws->expect(f, times[j]) - at_z[j]);
      psi = std::max(psi, diff);
      report.rows.push_back({"diff", x, times[j], kNone, diff, row_hw, ""});
    }
    psi_rows.push_back({"psi", x, window_start, kNone, psi, row_hw, ""});
  }
  report.rows.insert(report.rows.end(), psi_rows.begin(), psi_rows.end());
  return report;
}

DiagnosticReport eproperty_witness(const mc::Process& process, const TestFunction& f, double z,
                                   std::span<const std::pair<double, double>> pairs,
                                   const McConfig& mc) {
  if (pairs.empty()) throw std::invalid_argument("eproperty_witness: no pairs");
  std::vector<double> all_times;
  for (const auto& [x, t] : pairs) all_times.push_back(t);
  const Marginals at_z(process, z, sorted_unique(all_times), 0, mc);
  const double hw = joint_half_width(process, mc, f.range_width(), 2 * pairs.size());

  DiagnosticReport report;
  report.metadata = base_metadata("eprop", process, mc);
  report.metadata.emplace_back("f", f.name());
  report.metadata.emplace_back("z", format_double(z));

  double floor = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [x, t] = pairs[k];
    double w = 0.0;
    double row_hw = 0.0;
    if (x != z) {
      const auto at_x = attempt(process, x, {t}, static_cast<std::uint32_t>(k + 1), mc);
      if (!at_x.laws) {
        report.rows.push_back({"witness", x, t, kNone, kNone, 2.0 * hw, at_x.error});
        continue;
      }
      w = at_x.laws->expect(f, t) - at_z.expect(f, t);
      row_hw = 2.0 * hw;
    }
    floor = std::min(floor, w);
    report.rows.push_back({"witness", x, t, kNone, w, row_hw, ""});
  }
  report.rows.push_back({"floor", z, kNone, kNone, std::isinf(floor) ? kNone : floor, 2.0 * hw,
                         std::isinf(floor) ? "no witness computed" : ""});
  return report;
}

DiagnosticReport lower_bound_scan(const mc::Process& process, double z, double eps,
                                  std::span<const double> x_grid, std::span<const double> t_grid,
                                  const McConfig& mc) {
  require_nonempty(x_grid, "lower_bound_scan");
  require_nonempty(t_grid, "lower_bound_scan");
  const Ball ball(StatePoint(z), eps);
  const auto times = sorted_unique(t_grid);
  const double hw = joint_half_width(process, mc, 1.0, x_grid.size() * times.size());

  DiagnosticReport report;
  report.metadata = base_metadata("lowerbound", process, mc);
  report.metadata.emplace_back("z", format_double(z));
  report.metadata.emplace_back("eps", format_double(eps));
  report.metadata.emplace_back("window", join(times));

  double scan = std::numeric_limits<double>::infinity();
  double scan_x = x_grid[0];
  std::string scan_error;
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const auto a = attempt(process, x_grid[i], times, static_cast<std::uint32_t>(i), mc);
    if (!a.laws) {
      report.rows.push_back({"m", x_grid[i], kNone, eps, kNone, hw, a.error});
      scan_error = a.error;
      continue;
    }
    const Marginals& laws = *a.laws;
    double m = std::numeric_limits<double>::infinity();
    double at = times[0];
    for (double t : times) {
      const double p = laws.hit(ball, t);
      if (p < m) {
        m = p;
        at = t;
      }
    }
    report.rows.push_back({"m", x_grid[i], at, eps, m, hw, ""});
    if (m < scan) {
      scan = m;
      scan_x = x_grid[i];
    }
  }
  // A scan with a failed initial has no valid minimum.
  if (!scan_error.empty()) {
    report.rows.push_back({"scan_min", kNone, kNone, eps, kNone, hw, scan_error});
    report.rows.push_back({"scan_lower", kNone, kNone, eps, kNone, 0.0, scan_error});
    return report;
  }
  report.rows.push_back({"scan_min", scan_x, kNone, eps, scan, hw, ""});
  report.rows.push_back({"scan_lower", scan_x, kNone, eps, std::max(0.0, scan - hw), 0.0, ""});
  return report;
}

DiagnosticReport stability_report(const mc::Process& process, std::span<const double> initials,
                                  std::span<const double> t_grid,
                                  const EmpiricalMeasure& reference, const McConfig& mc) {
  require_nonempty(initials, "stability_report");
  require_nonempty(t_grid, "stability_report");
  const auto times = sorted_unique(t_grid);
  // Against a point mass at z the distance is the mean of min(2, |Phi - z|),
  // a functional with range 2.
  const bool point_reference = reference.size() == 1;
  const double hw =
      point_reference ? joint_half_width(process, mc, 2.0, initials.size() * times.size()) : 0.0;

  DiagnosticReport report;
  report.metadata = base_metadata("stability", process, mc);
  report.metadata.emplace_back("reference", point_reference
                                                ? "dirac(" + format_double(reference.support()[0]) + ")"
                                                : "empirical(" + std::to_string(reference.size()) + " atoms)");
  report.metadata.emplace_back("pairwise", "point estimates");

  std::vector<Attempt> laws;
  for (std::size_t i = 0; i < initials.size(); ++i) {
    laws.push_back(attempt(process, initials[i], times, static_cast<std::uint32_t>(i), mc));
  }
  for (double t : times) {
    std::vector<std::optional<EmpiricalMeasure>> at_t;
    for (std::size_t i = 0; i < initials.size(); ++i) {
      if (!laws[i].laws) {
        at_t.emplace_back();
        report.rows.push_back({"distance", initials[i], t, kNone, kNone, hw, laws[i].error});
        continue;
      }
      at_t.push_back(laws[i].laws->law(t));
      report.rows.push_back(
          {"distance", initials[i], t, kNone, bl_distance(*at_t.back(), reference), hw, ""});
    }
    for (std::size_t i = 0; i < initials.size(); ++i) {
      for (std::size_t j = i + 1; j < initials.size(); ++j) {
        if (!at_t[i] || !at_t[j]) {
          const auto& err = at_t[i] ? laws[j].error : laws[i].error;
          report.rows.push_back({"pairwise", initials[i], t, initials[j], kNone, 0.0, err});
          continue;
        }
        report.rows.push_back(
            {"pairwise", initials[i], t, initials[j], bl_distance(*at_t[i], *at_t[j]), 0.0, ""});
      }
    }
  }
  return report;
}

double check_b2(const ifs::IfsModel& model, const ifs::AssumptionSet& assume,
                std::span<const double> x_grid) {
  require_nonempty(x_grid, "check_b2");
  if (!assume.r) throw std::invalid_argument("check_b2: r not set");
  const double z = assume.anchor;
  double worst = -std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    const auto p = model.probabilities(x);
    double lhs = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) lhs += p[i] * std::abs(model.apply(i, x) - z);
    worst = std::max(worst, lhs - assume.r(x) * std::abs(x - z));
  }
  return worst;
}

double check_b3(const ifs::IfsModel& model, const ifs::AssumptionSet& assume,
                std::span<const double> x_grid) {
  require_nonempty(x_grid, "check_b3");
  if (!assume.omega) throw std::invalid_argument("check_b3: omega not set");
  const auto pz = model.probabilities(assume.anchor);
  double worst = -std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    const auto p = model.probabilities(x);
    double lhs = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) lhs += std::abs(p[i] - pz[i]);
    worst = std::max(worst, lhs - assume.omega(std::abs(x - assume.anchor)));
  }
  return worst;
}

B5Terms b5_series(const ifs::IfsModel& model, const ifs::AssumptionSet& assume, long n_trunc,
                  double x) {
  if (!assume.omega) throw std::invalid_argument("check_b5: omega not set");
  if (!(assume.lambda > assume.alpha)) throw std::invalid_argument("check_b5: lambda <= alpha");
  if (n_trunc < assume.m + 1) throw std::invalid_argument("check_b5: need n_trunc > M");
  const double dist = std::abs(x - assume.anchor);
  if (dist > assume.eta * (1.0 + 1e-15)) {
    throw std::invalid_argument("check_b5: grid point outside the ball of radius eta");
  }
  const double q = assume.lambda / (assume.lambda - assume.alpha);
  std::vector<double> terms;
  for (long n = assume.m; n <= n_trunc; ++n) {
    const double arg = ifs::j_n(model, assume, x, n) * dist * std::pow(q, static_cast<double>(n));
    terms.push_back(assume.omega(arg));
  }
  B5Terms out;
  for (double t : terms) out.partial_sum += t;
  if (terms.back() == 0.0) return out;
  // Largest successive ratio over the second half of the computed terms.
  double ratio = 0.0;
  for (std::size_t k = std::max<std::size_t>(1, terms.size() / 2); k < terms.size(); ++k) {
    if (terms[k - 1] <= 0.0) {
      throw std::domain_error("check_b5: zero term followed by a positive one");
    }
    ratio = std::max(ratio, terms[k] / terms[k - 1]);
  }
  if (!(ratio < 1.0)) {
    throw std::domain_error("check_b5: terms do not decay geometrically; tail majorant inapplicable");
  }
  out.ratio = ratio;
  out.tail = terms.back() * ratio / (1.0 - ratio);
  return out;
}

double check_b5(const ifs::IfsModel& model, const ifs::AssumptionSet& assume, long n_trunc,
                std::span<const double> x_grid) {
  require_nonempty(x_grid, "check_b5");
  double worst = -std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    const B5Terms s = b5_series(model, assume, n_trunc, x);
    worst = std::max(worst, s.partial_sum + s.tail - (1.0 - assume.gamma));
  }
  return worst;
}

std::vector<double> c2_time_grid(double t_search) {
  if (!(t_search > 0.0)) throw std::invalid_argument("check_c2: t_search must be positive");
  std::vector<double> grid{0.0};
  for (double t = 1.0; t <= t_search; t *= 2.0) grid.push_back(t);
  return grid;
}

DiagnosticReport check_c2(const mc::Process& process, double z, std::span<const double> eps_list,
                          std::span<const double> x_grid, double t_search, const McConfig& mc) {
  require_nonempty(eps_list, "check_c2");
  require_nonempty(x_grid, "check_c2");
  const auto times = c2_time_grid(t_search);
  const double hw =
      joint_half_width(process, mc, 1.0, eps_list.size() * x_grid.size() * times.size());

  DiagnosticReport report;
  report.metadata = base_metadata("c2", process, mc);
  report.metadata.emplace_back("z", format_double(z));
  report.metadata.emplace_back("t_search", format_double(t_search));
  report.metadata.emplace_back("grid", join(times));

  std::vector<Attempt> laws;
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    laws.push_back(attempt(process, x_grid[i], times, static_cast<std::uint32_t>(i), mc));
  }
  for (double eps : eps_list) {
    const Ball ball(StatePoint(z), eps);
    double beta = std::numeric_limits<double>::infinity();
    double beta_x = x_grid[0];
    std::string beta_error;
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      if (!laws[i].laws) {
        report.rows.push_back({"c2_fail", x_grid[i], kNone, eps, kNone, hw, laws[i].error});
        beta_error = laws[i].error;
        continue;
      }
      double best = 0.0;
      double at = times[0];
      for (double t : times) {
        const double p = laws[i].laws->hit(ball, t);
        if (p > best) {
          best = p;
          at = t;
        }
      }
      if (best > 0.0) {
        report.rows.push_back({"c2_hit", x_grid[i], at, eps, best, hw, ""});
      } else {
        report.rows.push_back({"c2_fail", x_grid[i], kNone, eps, 0.0, hw,
                               "no hit of B(z, eps) within t_search"});
      }
      if (best < beta) {
        beta = best;
        beta_x = x_grid[i];
      }
    }
    if (!beta_error.empty()) {
      report.rows.push_back({"c2_beta", kNone, kNone, eps, kNone, hw, beta_error});
    } else {
      report.rows.push_back({"c2_beta", beta_x, kNone, eps, beta, hw, ""});
    }
  }
  return report;
}

}  // namespace feller::diag
