#include "feller/exact_ctmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace feller::ctmc {

namespace {

void require_index(long n) {
  if (n < 2) throw std::invalid_argument("CtmcState: n >= 2 required");
}

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument("ctmc: time must be finite and nonnegative");
  }
}

}  // namespace

CtmcState CtmcState::low(long n) {
  require_index(n);
  return CtmcState(Kind::Low, n);
}

CtmcState CtmcState::high(long n) {
  require_index(n);
  return CtmcState(Kind::High, n);
}

CtmcState CtmcState::from_point(double x) {
  if (x == 0.0) return zero();
  if (x >= 2.0 && x == std::floor(x) && x < 1e15) return high(static_cast<long>(x));
  if (x > 0.0 && x <= 0.5) {
    const double n = std::round(1.0 / x);
    if (n >= 2.0 && n < 1e15 && 1.0 / n == x) return low(static_cast<long>(n));
  }
  throw std::invalid_argument("ctmc: not a state of the chain: " + std::to_string(x));
}

double CtmcState::embedding() const {
  switch (kind_) {
    case Kind::Zero:
      return 0.0;
    case Kind::Low:
      return 1.0 / static_cast<double>(n_);
    case Kind::High:
      return static_cast<double>(n_);
  }
  return 0.0;
}

std::string CtmcState::to_string() const {
  switch (kind_) {
    case Kind::Zero:
      return "Zero";
    case Kind::Low:
      return "Low(" + std::to_string(n_) + ")";
    case Kind::High:
      return "High(" + std::to_string(n_) + ")";
  }
  return {};
}

double transition_prob(const CtmcState& i, const CtmcState& j, double t) {
  require_time(t);
  using K = CtmcState::Kind;
  if (i.kind() == K::Zero) return j.kind() == K::Zero ? 1.0 : 0.0;
  const double u = t / static_cast<double>(i.n());
  const double stay = std::exp(-u);
  if (j.kind() == K::Zero) {
    if (i.kind() == K::High) return -std::expm1(-u);
    // 1 - e^{-u} - u e^{-u}, written to avoid cancellation for small u.
    return -std::expm1(-u) - u * stay;
  }
  if (j.n() != i.n()) return 0.0;
  if (i.kind() == j.kind()) return stay;
  if (i.kind() == K::Low && j.kind() == K::High) return u * stay;
  return 0.0;
}

EmpiricalMeasure law(const CtmcState& i, double t) {
  require_time(t);
  using K = CtmcState::Kind;
  switch (i.kind()) {
    case K::Zero:
      return EmpiricalMeasure::dirac(0.0);
    case K::High: {
      const auto n = static_cast<double>(i.n());
      return EmpiricalMeasure({0.0, n}, {transition_prob(i, CtmcState::zero(), t),
                                         transition_prob(i, i, t)});
    }
    case K::Low: {
      const auto hi = CtmcState::high(i.n());
      std::vector<double> w = {transition_prob(i, CtmcState::zero(), t), transition_prob(i, i, t),
                               transition_prob(i, hi, t)};
      // Absorb the last-ulp rounding into the zero atom so weights sum to 1.
      w[0] = std::max(0.0, 1.0 - (w[1] + w[2]));
      return EmpiricalMeasure({0.0, i.embedding(), hi.embedding()}, std::move(w));
    }
  }
  throw std::logic_error("ctmc::law: bad state");
}

double semigroup_apply(const TestFunction& f, const CtmcState& i, double t) {
  require_time(t);
  using K = CtmcState::Kind;
  if (i.kind() == K::Zero) return f(0.0);
  double acc = transition_prob(i, CtmcState::zero(), t) * f(0.0) +
               transition_prob(i, i, t) * f(i.embedding());
  if (i.kind() == K::Low) {
    const auto hi = CtmcState::high(i.n());
    acc += transition_prob(i, hi, t) * f(hi.embedding());
  }
  return acc;
}

namespace {

// Holding times of Low(n) and High(n); both exponential with mean n.
struct Holding {
  double low;
  double high;
};

Holding draw_holding(long n, Stream& stream) {
  const double rate = 1.0 / static_cast<double>(n);
  const double first = stream.exponential(rate);
  const double second = stream.exponential(rate);
  return {first, second};
}

}  // namespace

CtmcState sample_path(const CtmcState& i, double t, Stream& stream) {
  require_time(t);
  using K = CtmcState::Kind;
  if (i.kind() == K::Zero) return i;
  const Holding h = draw_holding(i.n(), stream);
  if (i.kind() == K::High) return t < h.low ? i : CtmcState::zero();
  if (t < h.low) return i;
  if (t < h.low + h.high) return CtmcState::high(i.n());
  return CtmcState::zero();
}

std::vector<Jump> sample_jumps(const CtmcState& i, double horizon, Stream& stream) {
  require_time(horizon);
  using K = CtmcState::Kind;
  std::vector<Jump> jumps;
  if (i.kind() == K::Zero) return jumps;
  const Holding h = draw_holding(i.n(), stream);
  if (i.kind() == K::High) {
    if (h.low <= horizon) jumps.push_back({h.low, i, CtmcState::zero()});
    return jumps;
  }
  const auto hi = CtmcState::high(i.n());
  if (h.low <= horizon) {
    jumps.push_back({h.low, i, hi});
    if (h.low + h.high <= horizon) jumps.push_back({h.low + h.high, hi, CtmcState::zero()});
  }
  return jumps;
}

Kernel3 kernel(long n, double t) {
  const std::array<CtmcState, 3> states = {CtmcState::low(n), CtmcState::high(n),
                                           CtmcState::zero()};
  Kernel3 p{};
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) p[a][b] = transition_prob(states[a], states[b], t);
  }
  return p;
}

double chapman_kolmogorov_residual(long n, double s, double t) {
  require_index(n);
  const Kernel3 ps = kernel(n, s);
  const Kernel3 pt = kernel(n, t);
  const Kernel3 pst = kernel(n, s + t);
  double worst = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      double prod = 0.0;
      for (std::size_t c = 0; c < 3; ++c) prod += ps[a][c] * pt[c][b];
      worst = std::max(worst, std::abs(pst[a][b] - prod));
    }
  }
  return worst;
}

}  // namespace feller::ctmc
