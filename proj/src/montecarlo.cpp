#include "feller/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>

namespace feller::mc {

Process Process::ctmc() { return Process("ctmc", nullptr); }

Process Process::ifs(ifs::IfsModel model) {
  auto shared = std::make_shared<const ifs::IfsModel>(std::move(model));
  return ifs(std::move(shared));
}

Process Process::ifs(std::shared_ptr<const ifs::IfsModel> model) {
  if (!model) throw std::invalid_argument("Process: null model");
  std::string name = model->name();
  return Process(std::move(name), std::move(model));
}

double Process::rate() const { return model_ ? model_->rate() : 0.0; }

void Process::check_initial(double x) const {
  if (model_) {
    StatePoint check(x);
  } else {
    (void)ctmc::CtmcState::from_point(x);
  }
}

void Process::sample_states(double x, std::span<const double> times, Stream& stream,
                            std::span<double> out) const {
  if (model_) {
    ifs::sample_states(*model_, x, times, stream, out);
    return;
  }
  // One realization of the chain: the holding times are drawn once and read
  // off at every requested time.
  const auto start = ctmc::CtmcState::from_point(x);
  if (start.kind() == ctmc::CtmcState::Kind::Zero) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const auto jumps = ctmc::sample_jumps(start, std::numeric_limits<double>::max(), stream);
  for (std::size_t j = 0; j < times.size(); ++j) {
    ctmc::CtmcState s = start;
    for (const auto& jump : jumps) {
      if (jump.time <= times[j]) s = jump.to;
    }
    out[j] = s.embedding();
  }
}

double Process::sample(double x, double t, Stream& stream) const {
  double out = 0.0;
  sample_states(x, std::span<const double>(&t, 1), stream, std::span<double>(&out, 1));
  return out;
}

EmpiricalMeasure Process::exact_law(double x, double t) const {
  if (model_) throw std::logic_error("Process: no exact law for model '" + name_ + "'");
  return ctmc::law(ctmc::CtmcState::from_point(x), t);
}

double hoeffding_half_width(double value_bound, std::size_t n, double confidence) {
  if (n == 0) throw std::invalid_argument("hoeffding_half_width: no samples");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("hoeffding_half_width: confidence must lie in (0, 1)");
  }
  const double delta = 1.0 - confidence;
  return value_bound * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

Estimate make_estimate(std::span<const double> values, double value_bound, double confidence) {
  if (values.empty()) throw std::invalid_argument("make_estimate: no samples");
  double sum = 0.0;
  for (double v : values) sum += v;
  Estimate e;
  e.n_samples = values.size();
  e.mean = sum / static_cast<double>(values.size());
  e.confidence = confidence;
  e.value_bound = value_bound;
  e.half_width = hoeffding_half_width(value_bound, values.size(), confidence);
  return e;
}

unsigned default_workers() {
  if (const char* env = std::getenv("FELLER_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> sample_states(const Process& process, double x, std::span<const double> times,
                                  std::size_t n, std::uint64_t seed, std::uint32_t cell,
                                  unsigned workers) {
  if (n == 0) throw std::invalid_argument("sample_states: n must be positive");
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("sample_states: too many trajectories for the stream key");
  }
  process.check_initial(x);
  for (std::size_t j = 0; j < times.size(); ++j) {
    if (!(times[j] >= 0.0) || !std::isfinite(times[j]) || (j > 0 && times[j] < times[j - 1])) {
      throw std::invalid_argument("sample_states: times must be finite, nonnegative, ascending");
    }
  }
  const std::size_t width = times.size();
  std::vector<double> out(n * width);
  if (workers == 0) workers = default_workers();
  const std::size_t chunks = std::min<std::size_t>(workers, n);

  // Trajectory k always writes the same slot from the same stream, so the
  // partition into chunks cannot change the result.
  std::vector<std::exception_ptr> errors(chunks);
  std::vector<std::size_t> failed_at(chunks, n);
  auto work = [&](std::size_t c) {
    const std::size_t lo = n * c / chunks;
    const std::size_t hi = n * (c + 1) / chunks;
    for (std::size_t k = lo; k < hi; ++k) {
      try {
        Stream stream(seed, cell, static_cast<std::uint32_t>(k));
        process.sample_states(x, times, stream, std::span<double>(out.data() + k * width, width));
      } catch (...) {
        errors[c] = std::current_exception();
        failed_at[c] = k;
        return;
      }
    }
  };
  if (chunks == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) pool.emplace_back(work, c);
  }
  for (std::size_t c = 0; c < chunks; ++c) {
    if (!errors[c]) continue;
    try {
      std::rethrow_exception(errors[c]);
    } catch (const std::exception& e) {
      throw std::runtime_error("trajectory " + std::to_string(failed_at[c]) + ": " + e.what());
    }
  }
  return out;
}

Estimate estimate_ptf(const Process& process, double x, double t, const TestFunction& f,
                      std::size_t n, std::uint64_t seed, double confidence, unsigned workers,
                      std::uint32_t cell) {
  auto states = sample_states(process, x, std::span<const double>(&t, 1), n, seed, cell, workers);
  for (double& s : states) s = f(s);
  return make_estimate(states, f.range_width(), confidence);
}

Estimate estimate_hit(const Process& process, double x, double t, const Ball& ball, std::size_t n,
                      std::uint64_t seed, double confidence, unsigned workers, std::uint32_t cell) {
  auto states = sample_states(process, x, std::span<const double>(&t, 1), n, seed, cell, workers);
  for (double& s : states) s = ball.contains(s) ? 1.0 : 0.0;
  return make_estimate(states, 1.0, confidence);
}

double evaluate(const Functional& g, double x) {
  if (const auto* f = std::get_if<TestFunction>(&g)) return (*f)(x);
  return std::get<Ball>(g).contains(x) ? 1.0 : 0.0;
}

double range_width(const Functional& g) {
  if (const auto* f = std::get_if<TestFunction>(&g)) return f->range_width();
  return 1.0;
}

std::vector<BatchCell> run_batch(const SamplingPlan& plan) {
  if (plan.n_samples == 0) throw std::invalid_argument("run_batch: n_samples must be positive");
  for (double t : plan.times) {
    if (!(t >= 0.0)) throw std::invalid_argument("run_batch: negative time");
  }
  // Sample once per initial on the ascending time grid, then map back.
  std::vector<std::size_t> order(plan.times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return plan.times[a] < plan.times[b]; });
  std::vector<double> sorted(order.size());
  std::vector<std::size_t> column(order.size());
  for (std::size_t j = 0; j < order.size(); ++j) {
    sorted[j] = plan.times[order[j]];
    column[order[j]] = j;
  }

  std::vector<BatchCell> cells;
  cells.reserve(plan.initials.size() * plan.times.size() * plan.functionals.size());
  std::vector<double> values(plan.n_samples);
  for (std::size_t i = 0; i < plan.initials.size(); ++i) {
    std::vector<double> states;
    std::string error;
    try {
      states = sample_states(plan.process, plan.initials[i], sorted, plan.n_samples, plan.seed,
                             static_cast<std::uint32_t>(i), plan.workers);
    } catch (const std::exception& e) {
      error = e.what();
    }
    for (std::size_t t = 0; t < plan.times.size(); ++t) {
      for (std::size_t g = 0; g < plan.functionals.size(); ++g) {
        BatchCell cell{i, t, g, {}, error};
        if (error.empty()) {
          const auto& fn = plan.functionals[g];
          for (std::size_t k = 0; k < plan.n_samples; ++k) {
            values[k] = evaluate(fn, states[k * sorted.size() + column[t]]);
          }
          cell.estimate = make_estimate(values, range_width(fn), plan.confidence);
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

}  // namespace feller::mc
