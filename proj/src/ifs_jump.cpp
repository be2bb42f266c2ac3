#include "feller/ifs_jump.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace feller::ifs {

ProbVector::ProbVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("ProbVector: empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw std::invalid_argument("ProbVector: negative or NaN weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("ProbVector: weights do not sum to 1");
}

IfsModel::IfsModel(std::string name, std::vector<Map> maps, ProbField prob_field, Flow flow,
                   double rate)
    : name_(std::move(name)),
      maps_(std::move(maps)),
      prob_field_(std::move(prob_field)),
      flow_(flow),
      rate_(rate) {
  if (maps_.empty()) throw std::invalid_argument("IfsModel: no maps");
  for (const auto& m : maps_) {
    if (!m) throw std::invalid_argument("IfsModel: empty map");
  }
  if (!prob_field_) throw std::invalid_argument("IfsModel: empty probability field");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("IfsModel: rate must be positive");
  if (!std::isfinite(flow.alpha)) throw std::invalid_argument("IfsModel: bad flow");
}

ProbVector IfsModel::probabilities(double x) const {
  std::vector<double> p(maps_.size());
  prob_field_(x, p);
  return ProbVector(std::move(p));
}

double omega_identity(double s) { return s; }
double omega_exp(double s) { return -2.0 * std::expm1(-s); }

IfsModel example_flip(double lambda) {
  std::vector<IfsModel::Map> maps = {
      [](double) { return 0.0; },
      [](double x) { return x; },
      [](double x) { return x != 0.0 ? 1.0 / x : 0.0; },
  };
  auto field = [](double x, std::span<double> out) {
    if (x < 2.0 / 3.0) {
      out[0] = x / 2.0;
      out[1] = 1.0 - x;
      out[2] = x / 2.0;
    } else if (x <= 1.5) {
      out[0] = out[1] = out[2] = 1.0 / 3.0;
    } else {
      out[0] = 1.0 / (2.0 * x);
      out[1] = 1.0 - 1.0 / x;
      out[2] = 1.0 / (2.0 * x);
    }
  };
  return IfsModel("flip", std::move(maps), field, Flow{}, lambda);
}

ModelWithAssumptions example_halving(double lambda) {
  std::vector<IfsModel::Map> maps = {
      [](double x) { return x / 2.0; },
      [](double x) { return x; },
  };
  auto field = [](double x, std::span<double> out) {
    out[0] = std::exp(-x);
    out[1] = -std::expm1(-x);
  };
  AssumptionSet a;
  a.anchor = 0.0;
  a.r = [](double x) { return 1.0 - std::exp(-x) / 2.0; };
  a.omega = omega_identity;
  a.m = 0;
  a.eta = 1.0 / 8.0;
  a.gamma = 1.0 - std::exp(1.0 / 8.0) / 4.0;
  a.alpha = 0.0;
  a.lambda = lambda;
  // prod_{i >= 1} (1 - 2^{-i}); the factors reach 1 in double precision
  // after 53 terms.
  double beta = 1.0;
  for (int i = 1; i <= 64; ++i) beta *= 1.0 - std::ldexp(1.0, -i);
  a.beta = beta;
  return {IfsModel("halving", std::move(maps), field, Flow{}, lambda), std::move(a)};
}

namespace {

std::size_t pick(std::span<const double> p, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_positive = i;
    cumulative += p[i];
    if (u < cumulative) return i;
  }
  return last_positive;
}

// Advances the chain one jump from `phi` after waiting `wait`.
struct Step {
  double xi;
  std::size_t index;  // 0-based
  double phi;
};

Step jump(const IfsModel& model, double phi, double wait, Stream& stream,
          std::vector<double>& scratch) {
  const double xi = model.flow()(wait, phi);
  model.fill_probabilities(xi, scratch);
  const std::size_t i = pick(scratch, stream.uniform());
  const double next = model.apply(i, xi);
  if (!std::isfinite(next) || next < 0.0) {
    throw std::runtime_error("ifs: map w_" + std::to_string(i + 1) + " of model '" + model.name() +
                             "' produced a state outside X from " + std::to_string(xi));
  }
  return {xi, i, next};
}

}  // namespace

Trajectory sample_jump_chain(const IfsModel& model, double x, double horizon, Stream& stream) {
  if (!(horizon >= 0.0)) throw std::invalid_argument("sample_jump_chain: negative horizon");
  StatePoint start(x);
  Trajectory traj{start.value(), horizon, {}};
  std::vector<double> scratch(model.size());
  double tau = 0.0;
  double phi = x;
  while (true) {
    const double wait = stream.exponential(model.rate());
    if (tau + wait > horizon) break;
    tau += wait;
    const Step s = jump(model, phi, wait, stream, scratch);
    traj.records.push_back({tau, s.xi, s.index + 1, s.phi});
    phi = s.phi;
  }
  return traj;
}

double state_at(const Trajectory& traj, const IfsModel& model, double t) {
  if (!(t >= 0.0 && t <= traj.horizon)) throw std::out_of_range("state_at: t outside [0, horizon]");
  const auto it = std::upper_bound(traj.records.begin(), traj.records.end(), t,
                                   [](double v, const JumpRecord& r) { return v < r.tau; });
  if (it == traj.records.begin()) return model.flow()(t, traj.x0);
  const JumpRecord& last = *std::prev(it);
  return model.flow()(t - last.tau, last.phi);
}

void sample_states(const IfsModel& model, double x, std::span<const double> times, Stream& stream,
                   std::span<double> out) {
  if (out.size() != times.size()) throw std::invalid_argument("sample_states: size mismatch");
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] >= 0.0) || (k > 0 && times[k] < times[k - 1])) {
      throw std::invalid_argument("sample_states: times must be nonnegative and ascending");
    }
  }
  std::vector<double> scratch(model.size());
  double tau = 0.0;
  double phi = x;
  std::size_t next = 0;
  while (next < times.size()) {
    const double wait = stream.exponential(model.rate());
    // Every requested time before the next jump sees the flowed state.
    while (next < times.size() && times[next] < tau + wait) {
      out[next] = model.flow()(times[next] - tau, phi);
      ++next;
    }
    if (next == times.size()) break;
    tau += wait;
    phi = jump(model, phi, wait, stream, scratch).phi;
  }
}

double j_n(const IfsModel& model, const AssumptionSet& assume, double x, long n, double budget) {
  if (n < 0) throw std::invalid_argument("j_n: n must be nonnegative");
  if (!assume.r) throw std::invalid_argument("j_n: contraction coefficient r not set");
  if (n == 0) return 1.0;
  const auto big_n = static_cast<double>(model.size());
  if (static_cast<double>(n) * std::log(big_n) > std::log(budget) + 1e-9) {
    throw std::length_error("j_n: N^n = " + std::to_string(model.size()) + "^" + std::to_string(n) +
                            " exceeds the enumeration budget");
  }
  const auto depth = static_cast<std::size_t>(n);
  std::vector<std::size_t> word;
  word.reserve(depth);
  double best = 0.0;
  // w_{i[j]}(x) = w_{i_1}(... w_{i_j}(x)): the newest letter acts first, so
  // each prefix point is recomputed from x.
  auto prefix_point = [&]() {
    double y = x;
    for (auto it = word.rbegin(); it != word.rend(); ++it) y = model.apply(*it, y);
    return y;
  };
  std::function<void(double)> visit = [&](double product) {
    const double factor = assume.r(prefix_point());
    if (!(factor > 0.0 && factor <= 1.0)) {
      throw std::domain_error("j_n: contraction coefficient r outside (0, 1]");
    }
    const double next = product * factor;
    if (next <= best) return;  // r <= 1, so the product can only shrink
    if (word.size() + 1 == depth) {
      best = next;
      return;
    }
    for (std::size_t i = 0; i < model.size(); ++i) {
      word.push_back(i);
      visit(next);
      word.pop_back();
    }
  };
  visit(1.0);
  return best;
}

}  // namespace feller::ifs
