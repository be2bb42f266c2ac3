#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace feller {

/// A point of the state space X, a subset of the nonnegative reals with the
/// metric |x - y|.
class StatePoint {
 public:
  StatePoint() = default;
  explicit StatePoint(double value);

  double value() const { return value_; }

  friend bool operator==(StatePoint a, StatePoint b) { return a.value_ == b.value_; }
  friend auto operator<=>(StatePoint a, StatePoint b) { return a.value_ <=> b.value_; }

 private:
  double value_ = 0.0;
};

double distance(StatePoint a, StatePoint b);

/// Bounded Lipschitz function with declared |f|_inf and Lip(f). The metadata
/// is trusted by estimators (it sets the Hoeffding range) and checked only
/// statistically, see `spot_check`.
class TestFunction {
 public:
  using Evaluator = std::function<double(double)>;

  TestFunction(Evaluator evaluator, double sup_bound, double lip_const, bool nonnegative = false,
               std::string name = "f");

  double operator()(StatePoint x) const { return evaluator_(x.value()); }
  double operator()(double x) const { return evaluator_(x); }

  double sup_bound() const { return sup_bound_; }
  double lip_const() const { return lip_const_; }
  bool nonnegative() const { return nonnegative_; }
  const std::string& name() const { return name_; }

  /// Width of the interval the function takes values in: sup_bound for a
  /// nonnegative function, 2 * sup_bound otherwise.
  double range_width() const { return nonnegative_ ? sup_bound_ : 2.0 * sup_bound_; }

 private:
  Evaluator evaluator_;
  double sup_bound_;
  double lip_const_;
  bool nonnegative_;
  std::string name_;
};

/// f(x) = min(x, 1).
TestFunction x_min_1();
/// f(x) = 1.
TestFunction constant_one();

/// Largest violation of the declared bounds over sampled points and pairs:
/// max(|f(x)| - sup_bound, |f(x) - f(y)| - lip_const * |x - y|). Nonpositive
/// means the declaration held on the sample.
double spot_check(const TestFunction& f, std::span<const double> points);

/// Finitely supported probability measure on X.
class EmpiricalMeasure {
 public:
  /// Support must be strictly ascending, weights nonnegative summing to 1
  /// within 1e-12.
  EmpiricalMeasure(std::vector<double> support, std::vector<double> weights);

  static EmpiricalMeasure dirac(double x);
  /// Law of an i.i.d. sample: ties merged, each sample weighted 1/n.
  static EmpiricalMeasure from_samples(std::span<const double> samples);
  /// a * mu + (1 - a) * nu.
  static EmpiricalMeasure mixture(double a, const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

  const std::vector<double>& support() const { return support_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return support_.size(); }

 private:
  std::vector<double> support_;
  std::vector<double> weights_;
};

/// Open ball B(center, radius) in X.
class Ball {
 public:
  Ball(StatePoint center, double radius);

  StatePoint center() const { return center_; }
  double radius() const { return radius_; }
  bool contains(double x) const;

 private:
  StatePoint center_;
  double radius_;
};

/// <f, mu> = sum_k w_k f(s_k).
double pair(const TestFunction& f, const EmpiricalMeasure& mu);

/// mu(B).
double mass(const EmpiricalMeasure& mu, const Ball& ball);

/// Bounded-Lipschitz distance sup { |<f,mu> - <f,nu>| : |f|_inf <= 1, Lip(f) <= 1 }.
double bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Closed interval K = [lo, hi] of X.
struct Interval {
  double lo;
  double hi;
};

/// Urysohn-type bump for K with collar eps/4:
///   f(y) = d(y, (K^{eps/4})^c) / (d(y, (K^{eps/4})^c) + d(y, K)),
/// equal to 1 on K, 0 off the open eps/4-enlargement, Lip(f) <= 4/eps.
TestFunction bump_function(Interval k, double eps);
TestFunction bump_function(const Ball& k, double eps);

}  // namespace feller
