#pragma once

#include <array>
#include <string>
#include <vector>

#include "feller/core.hpp"
#include "feller/rng.hpp"

namespace feller::ctmc {

/// State of the chain on {0} u {1/n : n >= 2} u {n : n >= 2}. Tags are exact,
/// so transition lookups never compare floating approximations of 1/n.
class CtmcState {
 public:
  enum class Kind { Zero, Low, High };

  static CtmcState zero() { return CtmcState(Kind::Zero, 0); }
  static CtmcState low(long n);   // the point 1/n
  static CtmcState high(long n);  // the point n
  /// Inverse of `embedding`; throws if x is not a state of the chain.
  static CtmcState from_point(double x);

  Kind kind() const { return kind_; }
  long n() const { return n_; }
  double embedding() const;
  std::string to_string() const;

  friend bool operator==(const CtmcState&, const CtmcState&) = default;

 private:
  CtmcState(Kind kind, long n) : kind_(kind), n_(n) {}
  Kind kind_;
  long n_;  // 0 for Zero
};

/// p_{ij}(t), extended to t = 0 by the identity kernel.
double transition_prob(const CtmcState& i, const CtmcState& j, double t);

/// Law of the chain at time t started from i (up to three atoms).
EmpiricalMeasure law(const CtmcState& i, double t);

/// P_t f(i) = sum_j p_{ij}(t) f(j).
double semigroup_apply(const TestFunction& f, const CtmcState& i, double t);

/// Occupied state at time t. Always draws the two holding times of the path
/// Low(n) -> High(n) -> Zero (exponential, mean n) in that order, so the draw
/// sequence does not depend on t.
CtmcState sample_path(const CtmcState& i, double t, Stream& stream);

struct Jump {
  double time;
  CtmcState from;
  CtmcState to;
};

/// All jumps of one realized path up to `horizon`.
std::vector<Jump> sample_jumps(const CtmcState& i, double horizon, Stream& stream);

/// 3x3 kernel on (Low(n), High(n), Zero).
using Kernel3 = std::array<std::array<double, 3>, 3>;
Kernel3 kernel(long n, double t);

/// max |p(s+t) - p(s) p(t)| over the subchain {Low(n), High(n), Zero}.
double chapman_kolmogorov_residual(long n, double s, double t);

}  // namespace feller::ctmc
