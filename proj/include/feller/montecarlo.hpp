#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "feller/core.hpp"
#include "feller/exact_ctmc.hpp"
#include "feller/ifs_jump.hpp"
#include "feller/rng.hpp"

namespace feller::mc {

/// Handle on a simulable process: the closed-form chain or an IFS model.
/// Cheap to copy; the model is shared and immutable.
class Process {
 public:
  static Process ctmc();
  static Process ifs(ifs::IfsModel model);
  static Process ifs(std::shared_ptr<const ifs::IfsModel> model);

  const std::string& name() const { return name_; }
  /// Jump rate for IFS models, 0 for the chain.
  double rate() const;
  const ifs::IfsModel* model() const { return model_.get(); }

  /// Throws std::invalid_argument if x is not an admissible initial point.
  void check_initial(double x) const;

  /// States at ascending `times` along one realization from x.
  void sample_states(double x, std::span<const double> times, Stream& stream,
                     std::span<double> out) const;
  double sample(double x, double t, Stream& stream) const;

  bool has_exact_law() const { return !model_; }
  /// Law of Phi^x(t); only for processes with has_exact_law().
  EmpiricalMeasure exact_law(double x, double t) const;

 private:
  Process(std::string name, std::shared_ptr<const ifs::IfsModel> model)
      : name_(std::move(name)), model_(std::move(model)) {}

  std::string name_;
  std::shared_ptr<const ifs::IfsModel> model_;  // null for the chain
};

/// Monte Carlo mean with a Hoeffding half-width at the given confidence.
struct Estimate {
  double mean = 0.0;
  std::size_t n_samples = 0;
  double half_width = 0.0;
  double confidence = 0.999;
  double value_bound = 1.0;  // width of the range of the sampled functional
};

/// value_bound * sqrt(ln(2 / delta) / (2 n)) with delta = 1 - confidence.
double hoeffding_half_width(double value_bound, std::size_t n, double confidence);

/// Mean of `values` summed in index order.
Estimate make_estimate(std::span<const double> values, double value_bound, double confidence);

/// Worker count from FELLER_WORKERS, else the hardware concurrency.
unsigned default_workers();

/// Draws trajectories k = 0..n-1 from streams (seed, cell, k) and returns the
/// states row-major: out[k * times.size() + j] = Phi^x(times[j]) on
/// trajectory k. `times` must be ascending. The result does not depend on
/// `workers` (0 = default_workers()). Sampler failures are rethrown as
/// std::runtime_error naming the lowest failing trajectory index.
std::vector<double> sample_states(const Process& process, double x, std::span<const double> times,
                                  std::size_t n, std::uint64_t seed, std::uint32_t cell,
                                  unsigned workers = 0);

/// Estimate of P_t f(x) = E f(Phi^x(t)).
Estimate estimate_ptf(const Process& process, double x, double t, const TestFunction& f,
                      std::size_t n, std::uint64_t seed, double confidence = 0.999,
                      unsigned workers = 0, std::uint32_t cell = 0);

/// Estimate of P_t(x, B) = P(Phi^x(t) in B).
Estimate estimate_hit(const Process& process, double x, double t, const Ball& ball, std::size_t n,
                      std::uint64_t seed, double confidence = 0.999, unsigned workers = 0,
                      std::uint32_t cell = 0);

using Functional = std::variant<TestFunction, Ball>;

/// Value of a functional at a state and the width of its range.
double evaluate(const Functional& g, double x);
double range_width(const Functional& g);

struct SamplingPlan {
  Process process;
  std::vector<double> initials;
  std::vector<double> times;
  std::vector<Functional> functionals;
  std::size_t n_samples = 1;
  std::uint64_t seed = 0;
  double confidence = 0.999;
  unsigned workers = 0;
};

struct BatchCell {
  std::size_t initial = 0;
  std::size_t time = 0;
  std::size_t functional = 0;
  Estimate estimate;
  std::string error;  // empty on success
};

/// One cell per (initial, time, functional) in that nesting order. Initial
/// index i is the stream cell, so all times and functionals of one initial
/// share trajectories. A failing initial marks its cells and leaves the
/// others untouched.
std::vector<BatchCell> run_batch(const SamplingPlan& plan);

}  // namespace feller::mc
