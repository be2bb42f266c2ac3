#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <sstream>

#include "feller/core.hpp"
#include "feller/diagnostics.hpp"
#include "feller/exact_ctmc.hpp"
#include "feller/ifs_jump.hpp"
#include "feller/montecarlo.hpp"
#include "feller/report.hpp"

namespace py = pybind11;
using namespace feller;

namespace {

TestFunction builtin_function(const std::string& name) {
  if (name == "xmin1") return x_min_1();
  if (name == "one") return constant_one();
  throw py::value_error("unknown test function '" + name + "' (xmin1, one)");
}

mc::Process make_process(const std::string& model, double lambda) {
  if (model == "ctmc") return mc::Process::ctmc();
  if (model == "flip") return mc::Process::ifs(ifs::example_flip(lambda));
  if (model == "halving") return mc::Process::ifs(ifs::example_halving(lambda).model);
  throw py::value_error("unknown model '" + model + "' (ctmc, flip, halving)");
}

ifs::AssumptionSet halving_assumptions(double lambda, const std::string& omega) {
  auto a = ifs::example_halving(lambda).assume;
  if (omega == "identity") {
    a.omega = ifs::omega_identity;
  } else if (omega == "exp") {
    a.omega = ifs::omega_exp;
  } else {
    throw py::value_error("omega must be identity or exp");
  }
  return a;
}

py::object nullable(double v) { return std::isnan(v) ? py::none() : py::object(py::float_(v)); }

py::dict to_dict(const diag::DiagnosticReport& report) {
  py::dict meta;
  for (const auto& [k, v] : report.metadata) meta[py::str(k)] = v;
  py::list rows;
  for (const auto& r : report.rows) {
    py::dict row;
    row["label"] = r.label;
    row["x"] = nullable(r.x);
    row["t"] = nullable(r.t);
    row["param"] = nullable(r.param);
    row["value"] = nullable(r.value);
    row["half_width"] = nullable(r.half_width);
    row["error"] = r.error;
    rows.append(row);
  }
  py::dict out;
  out["metadata"] = meta;
  out["rows"] = rows;
  out["ok"] = report.ok();
  return out;
}

diag::McConfig mc_config(std::size_t samples, std::uint64_t seed, double confidence, unsigned workers,
                         bool exact) {
  diag::McConfig mc;
  mc.samples = samples;
  mc.seed = seed;
  mc.confidence = confidence;
  mc.workers = workers;
  mc.exact_when_available = exact;
  return mc;
}

}  // namespace

PYBIND11_MODULE(_feller, m) {
  m.doc() = "Ergodicity diagnostics for Markov-Feller semigroups";
  m.attr("__version__") = kVersion;

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const std::domain_error& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  // Closed-form chain; states are given by their embedding (1/n, n or 0).
  m.def("transition_prob", [](double x, double y, double t) {
    return ctmc::transition_prob(ctmc::CtmcState::from_point(x), ctmc::CtmcState::from_point(y), t);
  }, py::arg("x"), py::arg("y"), py::arg("t"));
  m.def("semigroup_apply", [](const std::string& f, double x, double t) {
    return ctmc::semigroup_apply(builtin_function(f), ctmc::CtmcState::from_point(x), t);
  }, py::arg("f"), py::arg("x"), py::arg("t"));
  m.def("ctmc_law", [](double x, double t) {
    const auto law = ctmc::law(ctmc::CtmcState::from_point(x), t);
    return py::make_tuple(law.support(), law.weights());
  }, py::arg("x"), py::arg("t"), "Law at time t as (support, weights).");
  m.def("chapman_kolmogorov_residual", &ctmc::chapman_kolmogorov_residual, py::arg("n"),
        py::arg("s"), py::arg("t"));

  m.def("bl_distance", [](std::vector<double> xs, std::vector<double> ws, std::vector<double> ys,
                          std::vector<double> vs) {
    return bl_distance(EmpiricalMeasure(std::move(xs), std::move(ws)),
                       EmpiricalMeasure(std::move(ys), std::move(vs)));
  }, py::arg("support_a"), py::arg("weights_a"), py::arg("support_b"), py::arg("weights_b"));

  m.def("hoeffding_half_width", &mc::hoeffding_half_width, py::arg("value_bound"), py::arg("n"),
        py::arg("confidence") = 0.999);

  m.def("sample_states", [](const std::string& model, double lambda, double x,
                            std::vector<double> times, std::size_t n, std::uint64_t seed,
                            std::uint32_t cell, unsigned workers) {
    const auto process = make_process(model, lambda);
    std::vector<double> flat;
    {
      py::gil_scoped_release release;
      flat = mc::sample_states(process, x, times, n, seed, cell, workers);
    }
    py::list rows;
    for (std::size_t k = 0; k < n; ++k) {
      rows.append(std::vector<double>(flat.begin() + k * times.size(),
                                      flat.begin() + (k + 1) * times.size()));
    }
    return rows;
  }, py::arg("model"), py::arg("lambda_") = 1.0, py::arg("x") = 0.5,
     py::arg("times") = std::vector<double>{1.0}, py::arg("n") = 100, py::arg("seed") = 1,
     py::arg("cell") = 0, py::arg("workers") = 0);

  m.def("estimate_ptf", [](const std::string& model, double lambda, double x, double t,
                           const std::string& f, std::size_t n, std::uint64_t seed,
                           double confidence, unsigned workers) {
    const auto process = make_process(model, lambda);
    const auto fn = builtin_function(f);
    mc::Estimate e;
    {
      py::gil_scoped_release release;
      e = mc::estimate_ptf(process, x, t, fn, n, seed, confidence, workers);
    }
    py::dict out;
    out["mean"] = e.mean;
    out["half_width"] = e.half_width;
    out["n_samples"] = e.n_samples;
    out["confidence"] = e.confidence;
    return out;
  }, py::arg("model"), py::arg("lambda_") = 1.0, py::arg("x") = 0.5, py::arg("t") = 1.0,
     py::arg("f") = "xmin1", py::arg("n") = 10000, py::arg("seed") = 1,
     py::arg("confidence") = 0.999, py::arg("workers") = 0);

  m.def("j_n", [](double lambda, double x, long n) {
    const auto h = ifs::example_halving(lambda);
    return ifs::j_n(h.model, h.assume, x, n);
  }, py::arg("lambda_"), py::arg("x"), py::arg("n"), "J_n(x) for the halving model.");

  m.def("check_b2", [](double lambda, std::vector<double> grid) {
    const auto h = ifs::example_halving(lambda);
    return diag::check_b2(h.model, h.assume, grid);
  }, py::arg("lambda_"), py::arg("grid"));
  m.def("check_b3", [](double lambda, std::vector<double> grid, const std::string& omega) {
    return diag::check_b3(ifs::example_halving(lambda).model, halving_assumptions(lambda, omega), grid);
  }, py::arg("lambda_"), py::arg("grid"), py::arg("omega") = "identity");
  m.def("check_b5", [](double lambda, long n_trunc, std::vector<double> grid, const std::string& omega) {
    return diag::check_b5(ifs::example_halving(lambda).model, halving_assumptions(lambda, omega),
                          n_trunc, grid);
  }, py::arg("lambda_"), py::arg("n_trunc"), py::arg("grid"), py::arg("omega") = "identity");

  m.def("ec_profile", [](const std::string& model, double lambda, const std::string& f, double z,
                         std::vector<double> xs, double t0, double t1, std::vector<double> grid,
                         std::size_t samples, std::uint64_t seed, double confidence, unsigned workers,
                         bool exact) {
    diag::DiagnosticReport r;
    {
      py::gil_scoped_release release;
      r = diag::ec_profile(make_process(model, lambda), builtin_function(f), z, xs, t0, t1, grid,
                           mc_config(samples, seed, confidence, workers, exact));
    }
    return to_dict(r);
  }, py::arg("model"), py::arg("lambda_") = 1.0, py::arg("f") = "xmin1", py::arg("z") = 0.0,
     py::arg("xs"), py::arg("window_start"), py::arg("window_end"), py::arg("grid"),
     py::arg("samples") = 10000, py::arg("seed") = 1, py::arg("confidence") = 0.999,
     py::arg("workers") = 0, py::arg("exact") = true);

  m.def("eproperty_witness", [](const std::string& model, double lambda, const std::string& f,
                                double z, std::vector<std::pair<double, double>> pairs,
                                std::size_t samples, std::uint64_t seed, double confidence,
                                unsigned workers, bool exact) {
    diag::DiagnosticReport r;
    {
      py::gil_scoped_release release;
      r = diag::eproperty_witness(make_process(model, lambda), builtin_function(f), z, pairs,
                                  mc_config(samples, seed, confidence, workers, exact));
    }
    return to_dict(r);
  }, py::arg("model"), py::arg("lambda_") = 1.0, py::arg("f") = "xmin1", py::arg("z") = 0.0,
     py::arg("pairs"), py::arg("samples") = 10000, py::arg("seed") = 1,
     py::arg("confidence") = 0.999, py::arg("workers") = 0, py::arg("exact") = true);

  m.def("lower_bound_scan", [](const std::string& model, double lambda, double z, double eps,
                               std::vector<double> x_grid, std::vector<double> t_grid,
                               std::size_t samples, std::uint64_t seed, double confidence,
                               unsigned workers, bool exact) {
    diag::DiagnosticReport r;
    {
      py::gil_scoped_release release;
      r = diag::lower_bound_scan(make_process(model, lambda), z, eps, x_grid, t_grid,
                                 mc_config(samples, seed, confidence, workers, exact));
    }
    return to_dict(r);
  }, py::arg("model"), py::arg("lambda_") = 1.0, py::arg("z") = 0.0, py::arg("eps"),
     py::arg("x_grid"), py::arg("t_grid"), py::arg("samples") = 10000, py::arg("seed") = 1,
     py::arg("confidence") = 0.999, py::arg("workers") = 0, py::arg("exact") = true);

  m.def("stability_report", [](const std::string& model, double lambda, std::vector<double> initials,
                               std::vector<double> t_grid, double z, std::size_t samples,
                               std::uint64_t seed, double confidence, unsigned workers, bool exact) {
    diag::DiagnosticReport r;
    {
      py::gil_scoped_release release;
      r = diag::stability_report(make_process(model, lambda), initials, t_grid,
                                 EmpiricalMeasure::dirac(z),
                                 mc_config(samples, seed, confidence, workers, exact));
    }
    return to_dict(r);
  }, py::arg("model"), py::arg("lambda_") = 1.0, py::arg("initials"), py::arg("t_grid"),
     py::arg("z") = 0.0, py::arg("samples") = 10000, py::arg("seed") = 1,
     py::arg("confidence") = 0.999, py::arg("workers") = 0, py::arg("exact") = true);

  m.def("check_c2", [](const std::string& model, double lambda, double z, std::vector<double> eps,
                       std::vector<double> x_grid, double t_search, std::size_t samples,
                       std::uint64_t seed, double confidence, unsigned workers, bool exact) {
    diag::DiagnosticReport r;
    {
      py::gil_scoped_release release;
      r = diag::check_c2(make_process(model, lambda), z, eps, x_grid, t_search,
                         mc_config(samples, seed, confidence, workers, exact));
    }
    return to_dict(r);
  }, py::arg("model"), py::arg("lambda_") = 1.0, py::arg("z") = 0.0, py::arg("eps"),
     py::arg("x_grid"), py::arg("t_search"), py::arg("samples") = 10000, py::arg("seed") = 1,
     py::arg("confidence") = 0.999, py::arg("workers") = 0, py::arg("exact") = true);

  m.def("report_csv", [](const py::dict& report) {
    diag::DiagnosticReport r;
    for (auto item : report["metadata"].cast<py::dict>()) {
      r.metadata.emplace_back(item.first.cast<std::string>(), item.second.cast<std::string>());
    }
    auto num = [](const py::handle& h) {
      return h.is_none() ? std::nan("") : h.cast<double>();
    };
    for (auto row : report["rows"].cast<py::list>()) {
      auto d = row.cast<py::dict>();
      r.rows.push_back({d["label"].cast<std::string>(), num(d["x"]), num(d["t"]), num(d["param"]),
                        num(d["value"]), num(d["half_width"]), d["error"].cast<std::string>()});
    }
    std::ostringstream os;
    write_csv(os, {}, r);
    return os.str();
  }, py::arg("report"), "CSV rendering of a report dict.");
}
