#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "feller/core.hpp"
#include "feller/rng.hpp"

namespace feller::ifs {

/// (p_1, ..., p_N): nonnegative, summing to 1 within 1e-12.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> weights);

  const std::vector<double>& weights() const { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::size_t size() const { return weights_.size(); }

 private:
  std::vector<double> weights_;
};

/// Closed-form flow S(t)x = x e^{alpha t}; alpha = 0 is the identity.
struct Flow {
  double alpha = 0.0;

  double operator()(double t, double x) const {
    return alpha == 0.0 ? x : x * std::exp(alpha * t);
  }
};

/// Iterated function system with place-dependent probabilities, a flow
/// between jumps and exponential(rate) inter-jump times. Immutable once built
/// and safe to share between threads.
class IfsModel {
 public:
  using Map = std::function<double(double)>;
  /// Writes p(x) into `out` (size N).
  using ProbField = std::function<void(double x, std::span<double> out)>;

  IfsModel(std::string name, std::vector<Map> maps, ProbField prob_field, Flow flow, double rate);

  const std::string& name() const { return name_; }
  std::size_t size() const { return maps_.size(); }
  double rate() const { return rate_; }
  const Flow& flow() const { return flow_; }

  double apply(std::size_t i, double x) const { return maps_[i](x); }
  void fill_probabilities(double x, std::span<double> out) const { prob_field_(x, out); }
  /// p(x), validated.
  ProbVector probabilities(double x) const;

 private:
  std::string name_;
  std::vector<Map> maps_;
  ProbField prob_field_;
  Flow flow_;
  double rate_;
};

/// Constants of the sufficient conditions for eventual continuity and
/// stability: anchor z, place-dependent contraction r, modulus omega,
/// series start M, radius eta, margin gamma, flow growth alpha, jump rate
/// lambda, and the hitting floor beta.
struct AssumptionSet {
  double anchor = 0.0;
  std::function<double(double)> r;
  std::function<double(double)> omega;
  long m = 0;
  double eta = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double lambda = 1.0;
  double beta = 0.0;
};

/// omega(s) = s.
double omega_identity(double s);
/// omega(s) = 2 (1 - e^{-s}).
double omega_exp(double s);

/// w_1 = 0, w_2 = id, w_3 = 1/x (0 at x = 0), identity flow, three-branch p.
IfsModel example_flip(double lambda);

struct ModelWithAssumptions {
  IfsModel model;
  AssumptionSet assume;
};

/// w_1 = x/2, w_2 = id, p_1 = e^{-x}, identity flow. The assumption set uses
/// omega(s) = s, the modulus under which the stated gamma is attained.
ModelWithAssumptions example_halving(double lambda);

struct JumpRecord {
  double tau;     // jump time
  double xi;      // pre-jump point, the flowed state
  std::size_t index;  // chosen map, 1-based
  double phi;     // post-jump point
};

struct Trajectory {
  double x0 = 0.0;
  double horizon = 0.0;
  std::vector<JumpRecord> records;
};

/// Jump chain started at x: inter-jump times i.i.d. exponential(rate),
/// xi_k = S(dtau_k) phi_{k-1}, i_k ~ p(xi_k), phi_k = w_{i_k}(xi_k). Records
/// every jump with tau_k <= horizon.
Trajectory sample_jump_chain(const IfsModel& model, double x, double horizon, Stream& stream);

/// Phi^x(t) = S(t - tau_n) phi_n for tau_n <= t < tau_{n+1}.
double state_at(const Trajectory& traj, const IfsModel& model, double t);

/// States at each of the ascending `times` along one realization, writing
/// into `out`. Consumes the stream exactly as sample_jump_chain does up to
/// the last time, so the state at t does not depend on the other times.
void sample_states(const IfsModel& model, double x, std::span<const double> times, Stream& stream,
                   std::span<double> out);

/// J_n(x) = max over words i in I^n of prod_{j<n} r(w_{i[j]}(x)) with
/// w_{i[j]} = w_{i_1} o ... o w_{i_j}. Exhaustive with product cutoff; throws
/// std::length_error if N^n exceeds `budget`.
double j_n(const IfsModel& model, const AssumptionSet& assume, double x, long n,
           double budget = 1e6);

}  // namespace feller::ifs
