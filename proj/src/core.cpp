#include "feller/core.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <utility>

namespace feller {

StatePoint::StatePoint(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0) {
    throw std::invalid_argument("StatePoint: value must be finite and nonnegative");
  }
}

double distance(StatePoint a, StatePoint b) { return std::abs(a.value() - b.value()); }

TestFunction::TestFunction(Evaluator evaluator, double sup_bound, double lip_const,
                           bool nonnegative, std::string name)
    : evaluator_(std::move(evaluator)),
      sup_bound_(sup_bound),
      lip_const_(lip_const),
      nonnegative_(nonnegative),
      name_(std::move(name)) {
  if (!evaluator_) throw std::invalid_argument("TestFunction: empty evaluator");
  if (!(sup_bound > 0.0) || !std::isfinite(sup_bound)) {
    throw std::invalid_argument("TestFunction: sup_bound must be positive");
  }
  if (!(lip_const >= 0.0) || !std::isfinite(lip_const)) {
    throw std::invalid_argument("TestFunction: lip_const must be nonnegative");
  }
}

TestFunction x_min_1() {
  return TestFunction([](double x) { return std::min(x, 1.0); }, 1.0, 1.0, true, "xmin1");
}

TestFunction constant_one() {
  return TestFunction([](double) { return 1.0; }, 1.0, 0.0, true, "one");
}

double spot_check(const TestFunction& f, std::span<const double> points) {
  double worst = -f.sup_bound();
  std::vector<double> values(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    values[i] = f(points[i]);
    worst = std::max(worst, std::abs(values[i]) - f.sup_bound());
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double gap = std::abs(values[i] - values[i - 1]);
    worst = std::max(worst, gap - f.lip_const() * std::abs(points[i] - points[i - 1]));
  }
  return worst;
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> support, std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (support_.empty()) throw std::invalid_argument("EmpiricalMeasure: empty support");
  if (support_.size() != weights_.size()) {
    throw std::invalid_argument("EmpiricalMeasure: support and weights differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < support_.size(); ++i) {
    if (!std::isfinite(support_[i]) || support_[i] < 0.0) {
      throw std::invalid_argument("EmpiricalMeasure: support point outside X");
    }
    if (i > 0 && !(support_[i - 1] < support_[i])) {
      throw std::invalid_argument("EmpiricalMeasure: support not strictly ascending");
    }
    if (!(weights_[i] >= 0.0)) throw std::invalid_argument("EmpiricalMeasure: negative weight");
    total += weights_[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("EmpiricalMeasure: weights do not sum to 1");
  }
}

EmpiricalMeasure EmpiricalMeasure::dirac(double x) { return EmpiricalMeasure({x}, {1.0}); }

EmpiricalMeasure EmpiricalMeasure::from_samples(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("EmpiricalMeasure: no samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> support;
  std::vector<std::size_t> counts;
  for (double s : sorted) {
    if (!support.empty() && support.back() == s) {
      ++counts.back();
    } else {
      support.push_back(s);
      counts.push_back(1);
    }
  }
  const auto n = static_cast<double>(sorted.size());
  std::vector<double> weights(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) weights[i] = static_cast<double>(counts[i]) / n;
  return EmpiricalMeasure(std::move(support), std::move(weights));
}

EmpiricalMeasure EmpiricalMeasure::mixture(double a, const EmpiricalMeasure& mu,
                                           const EmpiricalMeasure& nu) {
  if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("mixture: weight outside [0,1]");
  std::vector<double> support;
  std::vector<double> weights;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < mu.size() || j < nu.size()) {
    const bool take_mu = j == nu.size() || (i < mu.size() && mu.support_[i] <= nu.support_[j]);
    const bool take_nu = i == mu.size() || (j < nu.size() && nu.support_[j] <= mu.support_[i]);
    double w = 0.0;
    double s = 0.0;
    if (take_mu) {
      s = mu.support_[i];
      w += a * mu.weights_[i++];
    }
    if (take_nu) {
      s = nu.support_[j];
      w += (1.0 - a) * nu.weights_[j++];
    }
    support.push_back(s);
    weights.push_back(w);
  }
  return EmpiricalMeasure(std::move(support), std::move(weights));
}

Ball::Ball(StatePoint center, double radius) : center_(center), radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("Ball: radius must be positive");
}

bool Ball::contains(double x) const { return std::abs(x - center_.value()) < radius_; }

double pair(const TestFunction& f, const EmpiricalMeasure& mu) {
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) acc += mu.weights()[k] * f(mu.support()[k]);
  return acc;
}

double mass(const EmpiricalMeasure& mu, const Ball& ball) {
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (ball.contains(mu.support()[k])) acc += mu.weights()[k];
  }
  return acc;
}

namespace {

// Concave piecewise-linear function V on [-1, 1], stored through the kinks of
// its derivative. Kinks left of the argmax plateau carry the slope decrease
// met when crossing them, so the slope at -1 is the sum of all left drops;
// symmetrically on the right. The plateau between the last left kink and the
// first right kink has slope 0 and value `top`.
class ConcaveProfile {
 public:
  double top() const { return top_; }

  // V(v) += slope * v.
  void tilt(double slope) {
    if (slope > 0.0) {
      tilt_right(slope);
    } else if (slope < 0.0) {
      tilt_left(-slope);
    }
  }

  // V(v) <- max { V(u) : |u - v| <= gap, u in [-1, 1] }. The left branch
  // moves left, the right branch moves right, the plateau widens by 2 * gap.
  void spread(double gap) {
    left_offset_ -= gap;
    right_offset_ += gap;
    while (!left_.empty() && left_.front().pos + left_offset_ <= -1.0) left_.pop_front();
    while (!right_.empty() && right_.back().pos + right_offset_ >= 1.0) right_.pop_back();
    if (left_.empty()) left_offset_ = 0.0;
    if (right_.empty()) right_offset_ = 0.0;
  }

 private:
  struct Kink {
    double pos;   // stored position; actual = pos + offset of its side
    double drop;  // slope decrease across the kink, > 0
  };

  double plateau_left() const { return left_.empty() ? -1.0 : left_.back().pos + left_offset_; }
  double plateau_right() const { return right_.empty() ? 1.0 : right_.front().pos + right_offset_; }

  // A positive tilt moves the argmax right; right kinks whose drop is used up
  // change sides, the last one is split.
  void tilt_right(double slope) {
    double at = plateau_right();
    double value = top_ + slope * at;
    double remaining = slope;  // slope of the tilted function just right of `at`
    while (true) {
      if (right_.empty()) {
        value += remaining * (1.0 - at);
        push_left(1.0, remaining);
        break;
      }
      Kink& k = right_.front();
      const double pos = k.pos + right_offset_;
      value += remaining * (pos - at);
      at = pos;
      if (k.drop <= remaining) {
        remaining -= k.drop;
        push_left(pos, k.drop);
        right_.pop_front();
        if (remaining == 0.0) break;
      } else {
        k.drop -= remaining;
        push_left(pos, remaining);
        break;
      }
    }
    top_ = value;
  }

  void tilt_left(double slope) {
    double at = plateau_left();
    double value = top_ - slope * at;
    double remaining = slope;  // negated slope just left of `at`
    while (true) {
      if (left_.empty()) {
        value += remaining * (at + 1.0);
        push_right(-1.0, remaining);
        break;
      }
      Kink& k = left_.back();
      const double pos = k.pos + left_offset_;
      value += remaining * (at - pos);
      at = pos;
      if (k.drop <= remaining) {
        remaining -= k.drop;
        push_right(pos, k.drop);
        left_.pop_back();
        if (remaining == 0.0) break;
      } else {
        k.drop -= remaining;
        push_right(pos, remaining);
        break;
      }
    }
    top_ = value;
  }

  void push_left(double pos, double drop) { left_.push_back({pos - left_offset_, drop}); }
  void push_right(double pos, double drop) { right_.push_front({pos - right_offset_, drop}); }

  std::deque<Kink> left_;   // ascending
  std::deque<Kink> right_;  // ascending
  double left_offset_ = 0.0;
  double right_offset_ = 0.0;
  double top_ = 0.0;
};

}  // namespace

double bl_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  // Maximize sum_i f_i d_i over the merged support with |f_i| <= 1 and
  // |f_{i+1} - f_i| <= s_{i+1} - s_i, where d = mu - nu; adjacent Lipschitz
  // constraints suffice on a line. The feasible set is symmetric under
  // f -> -f, so the maximum is the supremum of the absolute value.
  ConcaveProfile profile;
  std::size_t i = 0;
  std::size_t j = 0;
  double previous = 0.0;
  bool first = true;
  while (i < mu.size() || j < nu.size()) {
    const bool take_mu = j == nu.size() || (i < mu.size() && mu.support()[i] <= nu.support()[j]);
    const bool take_nu = i == mu.size() || (j < nu.size() && nu.support()[j] <= mu.support()[i]);
    double d = 0.0;
    double s = 0.0;
    if (take_mu) {
      s = mu.support()[i];
      d += mu.weights()[i++];
    }
    if (take_nu) {
      s = nu.support()[j];
      d -= nu.weights()[j++];
    }
    if (!first) profile.spread(s - previous);
    profile.tilt(d);
    previous = s;
    first = false;
  }
  return std::max(0.0, profile.top());
}

TestFunction bump_function(Interval k, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("bump_function: eps must be positive");
  if (!(k.lo <= k.hi)) throw std::invalid_argument("bump_function: empty set K");
  const double collar = eps / 4.0;
  auto eval = [k, collar](double y) {
    // Distances on the line to K and to the complement of its open collar.
    const double to_k = y < k.lo ? k.lo - y : (y > k.hi ? y - k.hi : 0.0);
    const double to_outside = std::max(0.0, std::min(y - (k.lo - collar), (k.hi + collar) - y));
    const double denom = to_outside + to_k;
    return denom > 0.0 ? to_outside / denom : 0.0;
  };
  return TestFunction(eval, 1.0, 4.0 / eps, true, "bump");
}

TestFunction bump_function(const Ball& k, double eps) {
  const double c = k.center().value();
  return bump_function(Interval{std::max(0.0, c - k.radius()), c + k.radius()}, eps);
}

}  // namespace feller
