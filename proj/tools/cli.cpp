#include "cli.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "feller/core.hpp"
#include "feller/diagnostics.hpp"
#include "feller/exact_ctmc.hpp"
#include "feller/ifs_jump.hpp"
#include "feller/montecarlo.hpp"
#include "feller/report.hpp"

namespace feller::cli {
namespace {

constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct KeyDef {
  const char* name;
  const char* fallback;  // nullptr: absent unless given
  const char* help;
};

const std::vector<KeyDef> kCommon = {
    {"model", "ctmc", "ctmc | flip | halving"},
    {"lambda", "1", "jump rate of the IFS models"},
    {"seed", "1", "64-bit seed"},
    {"samples", "10000", "trajectories per initial point"},
    {"confidence", "0.999", "joint confidence of the reported half-widths"},
    {"out", nullptr, "output file (default stdout)"},
    {"format", "csv", "csv | json"},
    {"plot", nullptr, "SVG line plot path"},
    {"workers", nullptr, "worker threads (default FELLER_WORKERS or all cores)"},
};

// Settings that do not change the output bytes stay out of the manifest.
bool in_manifest(const std::string& key) { return key != "out" && key != "plot" && key != "workers"; }

std::vector<KeyDef> with_common(std::vector<KeyDef> extra) {
  std::vector<KeyDef> keys = kCommon;
  keys.insert(keys.end(), extra.begin(), extra.end());
  return keys;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw UsageError(key + ": not a finite number: '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string s = trim(text);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || *end != '\0' || errno == ERANGE) {
    throw UsageError(key + ": not an unsigned integer: '" + text + "'");
  }
  return v;
}

class Settings {
 public:
  Settings(std::string command, std::vector<KeyDef> keys) : command_(std::move(command)), keys_(std::move(keys)) {}

  bool known(const std::string& key) const {
    return std::any_of(keys_.begin(), keys_.end(), [&](const KeyDef& k) { return key == k.name; });
  }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void apply_fallbacks() {
    for (const auto& k : keys_) {
      if (k.fallback && !values_.count(k.name)) values_[k.name] = k.fallback;
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError(command_ + ": missing required setting '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return parse_double(key, str(key)); }
  double positive(const std::string& key) const {
    const double v = num(key);
    if (!(v > 0.0)) throw UsageError(key + " must be positive");
    return v;
  }
  std::uint64_t u64(const std::string& key) const { return parse_u64(key, str(key)); }
  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!trim(item).empty()) out.push_back(parse_double(key, item));
    }
    return out;
  }

  const std::string& command() const { return command_; }

  Manifest manifest() const {
    Manifest m{{"command", command_}};
    for (const auto& k : keys_) {
      if (in_manifest(k.name) && has(k.name)) m.emplace_back(k.name, str(k.name));
    }
    return m;
  }

 private:
  std::string command_;
  std::vector<KeyDef> keys_;
  std::map<std::string, std::string> values_;
};

// Flat `key = value` lines; `#` starts a comment.
void read_config(const std::string& path, Settings& settings) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::string line;
  int number = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw UsageError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!settings.known(key)) {
      throw UsageError(where + "unknown key '" + key + "' for " + settings.command());
    }
    if (seen.count(key)) throw UsageError(where + "duplicate key '" + key + "'");
    seen[key] = number;
    settings.set(key, trim(line.substr(eq + 1)));
  }
}

struct Context {
  Settings settings;
  std::ostream& out;
  std::ostream& err;
};

mc::Process make_process(const Settings& s) {
  const std::string& model = s.str("model");
  if (model == "ctmc") return mc::Process::ctmc();
  const double lambda = s.positive("lambda");
  if (model == "flip") return mc::Process::ifs(ifs::example_flip(lambda));
  if (model == "halving") return mc::Process::ifs(ifs::example_halving(lambda).model);
  throw UsageError("unknown model '" + model + "' (ctmc, flip, halving)");
}

diag::McConfig make_mc(const Settings& s) {
  diag::McConfig mc;
  mc.seed = s.u64("seed");
  const std::uint64_t samples = s.u64("samples");
  if (samples == 0) throw UsageError("samples must be positive");
  mc.samples = samples;
  mc.confidence = s.num("confidence");
  if (!(mc.confidence > 0.0 && mc.confidence < 1.0)) throw UsageError("confidence must lie in (0, 1)");
  if (s.has("workers")) {
    const std::uint64_t w = s.u64("workers");
    if (w == 0 || w > 4096) throw UsageError("workers must lie in [1, 4096]");
    mc.workers = static_cast<unsigned>(w);
  }
  return mc;
}

TestFunction make_function(const std::string& name) {
  if (name == "xmin1") return x_min_1();
  if (name == "one") return constant_one();
  throw UsageError("unknown test function '" + name + "' (xmin1, one)");
}

void check_format(const Settings& s) {
  const auto& f = s.str("format");
  if (f != "csv" && f != "json") throw UsageError("format must be csv or json");
}

// Writes to --out when given, else to the context stream.
void emit(const Context& ctx, const std::function<void(std::ostream&)>& write) {
  if (!ctx.settings.has("out")) {
    write(ctx.out);
    return;
  }
  const std::string& path = ctx.settings.str("out");
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  write(file);
  if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

// ---- plots ----

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_svg(std::ostream& os, const std::string& title, const std::string& xlabel,
               const std::string& ylabel, const std::vector<Series>& series) {
  const double w = 720, h = 440, left = 70, right = 200, top = 40, bottom = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (auto [x, y] : s.points) {
      x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = w - left - right, ph = h - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << xml_escape(title) << "</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 15 << "\" text-anchor=\"middle\">"
       << short_num(xv) << "</text>\n";
    os << "<text x=\"" << left - 5 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">"
       << short_num(yv) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\">"
     << xml_escape(xlabel) << "</text>\n";
  os << "<text x=\"15\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 15 " << top + ph / 2
     << ")\" text-anchor=\"middle\">" << xml_escape(ylabel) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = colors[k % 10];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[k].points.size(); ++i) {
      os << (i ? " " : "") << px(series[k].points[i].first) << ',' << py(series[k].points[i].second);
    }
    os << "\"/>\n";
    const double ly = top + 12 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 35 << "\" y=\"" << ly << "\">" << xml_escape(series[k].name)
       << "</text>\n";
  }
  os << "</svg>\n";
}

enum class Axis { T, X };

// Rows with `label` grouped into series by the remaining coordinates.
std::vector<Series> report_series(const diag::DiagnosticReport& report, const std::string& label,
                                  Axis axis) {
  std::vector<Series> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : report.rows) {
    if (r.label != label || !r.error.empty() || !std::isfinite(r.value)) continue;
    const double a = axis == Axis::T ? r.t : r.x;
    if (!std::isfinite(a)) continue;
    std::string name = label;
    if (axis == Axis::T) name += " x=" + short_num(r.x);
    if (std::isfinite(r.param)) name += " p=" + short_num(r.param);
    auto [it, inserted] = index.emplace(name, out.size());
    if (inserted) out.push_back({name, {}});
    out[it->second].points.emplace_back(a, r.value);
  }
  for (auto& s : out) std::sort(s.points.begin(), s.points.end());
  return out;
}

void maybe_plot(const Context& ctx, const diag::DiagnosticReport& report, const std::string& label,
                Axis axis) {
  if (!ctx.settings.has("plot")) return;
  const std::string& path = ctx.settings.str("plot");
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  write_svg(file, ctx.settings.command(), axis == Axis::T ? "t" : "x", label,
            report_series(report, label, axis));
}

int finish(const Context& ctx, const diag::DiagnosticReport& report) {
  const Manifest manifest = ctx.settings.manifest();
  emit(ctx, [&](std::ostream& os) {
    if (ctx.settings.str("format") == "json") {
      write_json(os, manifest, report);
    } else {
      write_csv(os, manifest, report);
    }
  });
  if (report.ok()) return 0;
  for (const auto& r : report.rows) {
    if (!r.error.empty()) {
      ctx.err << "cell failed (" << r.label << ", x=" << format_double(r.x) << "): " << r.error << '\n';
    }
  }
  return 1;
}

// ---- commands ----

int cmd_exact_ctmc(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  const std::uint64_t n64 = s.u64("n");
  if (n64 > static_cast<std::uint64_t>(std::numeric_limits<long>::max())) throw UsageError("n too large");
  const long n = static_cast<long>(n64);
  const std::vector<ctmc::CtmcState> states = {ctmc::CtmcState::low(n), ctmc::CtmcState::high(n),
                                               ctmc::CtmcState::zero()};
  const auto times = s.list("t");
  if (times.empty()) throw UsageError("exact-ctmc: t: grid empty");
  std::optional<TestFunction> f;
  if (s.has("f")) f = make_function(s.str("f"));

  diag::DiagnosticReport report;
  report.metadata = {{"table", "p_ij(t) on (Low(n), High(n), Zero)"}};
  for (double t : times) {
    for (const auto& i : states) {
      for (const auto& j : states) {
        report.rows.push_back(
            {"p", i.embedding(), t, j.embedding(), ctmc::transition_prob(i, j, t), 0.0, ""});
      }
    }
  }
  if (f) {
    for (double t : times) {
      for (const auto& i : states) {
        report.rows.push_back(
            {"semigroup", i.embedding(), t, kNone, ctmc::semigroup_apply(*f, i, t), 0.0, ""});
      }
    }
  }
  maybe_plot(ctx, report, f ? "semigroup" : "p", Axis::T);
  return finish(ctx, report);
}

struct SimRecord {
  std::size_t k;
  double tau, xi;
  std::size_t index;
  double phi;
};

int cmd_simulate(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  const auto process = make_process(s);
  const std::uint64_t seed = s.u64("seed");
  const double x = s.num("x");
  const double horizon = s.num("horizon");
  if (horizon < 0.0) throw UsageError("horizon must be nonnegative");
  const std::uint64_t count = s.u64("trajectories");
  if (count == 0 || count > std::numeric_limits<std::uint32_t>::max()) {
    throw UsageError("trajectories must lie in [1, 2^32)");
  }
  process.check_initial(x);

  // CTMC jumps carry index 1 for Low -> High and 2 for High -> Zero.
  std::vector<std::vector<SimRecord>> trajectories(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    Stream stream(seed, 0, static_cast<std::uint32_t>(k));
    auto& recs = trajectories[k];
    if (const auto* model = process.model()) {
      const auto traj = ifs::sample_jump_chain(*model, x, horizon, stream);
      for (std::size_t j = 0; j < traj.records.size(); ++j) {
        const auto& r = traj.records[j];
        recs.push_back({j + 1, r.tau, r.xi, r.index, r.phi});
      }
    } else {
      const auto jumps = ctmc::sample_jumps(ctmc::CtmcState::from_point(x), horizon, stream);
      for (std::size_t j = 0; j < jumps.size(); ++j) {
        const auto& jp = jumps[j];
        const std::size_t index = jp.to.kind() == ctmc::CtmcState::Kind::High ? 1 : 2;
        recs.push_back({j + 1, jp.time, jp.from.embedding(), index, jp.to.embedding()});
      }
    }
  }

  const Manifest manifest = s.manifest();
  emit(ctx, [&](std::ostream& os) {
    if (s.str("format") == "json") {
      nlohmann::ordered_json doc;
      doc["schema"] = kSchema;
      doc["version"] = kVersion;
      doc["manifest"] = nlohmann::ordered_json::object();
      for (const auto& [k, v] : manifest) doc["manifest"][k] = v;
      doc["trajectories"] = nlohmann::ordered_json::array();
      for (std::size_t k = 0; k < trajectories.size(); ++k) {
        nlohmann::ordered_json t{{"traj_id", k}, {"records", nlohmann::ordered_json::array()}};
        for (const auto& r : trajectories[k]) {
          t["records"].push_back(
              {{"k", r.k}, {"tau_k", r.tau}, {"xi_k", r.xi}, {"index_k", r.index}, {"phi_k", r.phi}});
        }
        doc["trajectories"].push_back(std::move(t));
      }
      os << doc.dump(2) << '\n';
      return;
    }
    os << "# schema = " << kSchema << '\n' << "# version = " << kVersion << '\n';
    for (const auto& [k, v] : manifest) os << "# " << k << " = " << v << '\n';
    os << "traj_id,k,tau_k,xi_k,index_k,phi_k\n";
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
      for (const auto& r : trajectories[k]) {
        os << k << ',' << r.k << ',' << format_double(r.tau) << ',' << format_double(r.xi) << ','
           << r.index << ',' << format_double(r.phi) << '\n';
      }
    }
  });

  if (s.has("plot")) {
    std::vector<Series> series;
    for (std::size_t k = 0; k < std::min<std::size_t>(trajectories.size(), 10); ++k) {
      Series sr{"trajectory " + std::to_string(k), {{0.0, x}}};
      double state = x;
      for (const auto& r : trajectories[k]) {
        sr.points.emplace_back(r.tau, r.xi);
        sr.points.emplace_back(r.tau, r.phi);
        state = r.phi;
      }
      sr.points.emplace_back(horizon, process.model() ? process.model()->flow()(0.0, state) : state);
      series.push_back(std::move(sr));
    }
    std::ofstream file(s.str("plot"), std::ios::binary);
    if (!file) throw std::runtime_error("cannot write '" + s.str("plot") + "'");
    write_svg(file, "simulate", "t", "state", series);
  }
  return 0;
}

int cmd_estimate(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  const auto process = make_process(s);
  const auto mc = make_mc(s);
  const auto f = make_function(s.str("f"));
  const double z = s.num("z");
  const auto radii = s.list("radii");

  mc::SamplingPlan plan{process, s.list("initials"), s.list("times"), {f}, mc.samples,
                        mc.seed, mc.confidence, mc.workers};
  if (plan.initials.empty()) throw UsageError("estimate: initials: grid empty");
  if (plan.times.empty()) throw UsageError("estimate: times: grid empty");
  for (double r : radii) plan.functionals.emplace_back(Ball(StatePoint(z), r));
  const auto cells = mc::run_batch(plan);

  diag::DiagnosticReport report;
  report.metadata = {{"f", f.name()}, {"z", format_double(z)}};
  for (const auto& c : cells) {
    const bool is_f = c.functional == 0;
    const double param = is_f ? kNone : radii[c.functional - 1];
    const double x = plan.initials[c.initial], t = plan.times[c.time];
    if (!c.error.empty()) {
      report.rows.push_back({is_f ? "ptf" : "hit", x, t, param, kNone, kNone, c.error});
      continue;
    }
    report.rows.push_back({is_f ? "ptf" : "hit", x, t, param, c.estimate.mean, c.estimate.half_width, ""});
    if (process.has_exact_law()) {
      const auto law = process.exact_law(x, t);
      const double exact =
          is_f ? pair(f, law) : mass(law, std::get<Ball>(plan.functionals[c.functional]));
      report.rows.push_back({is_f ? "exact_ptf" : "exact_hit", x, t, param, exact, 0.0, ""});
    }
  }
  maybe_plot(ctx, report, "ptf", Axis::T);
  return finish(ctx, report);
}

int cmd_ec(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  const auto process = make_process(s);
  const auto mc = make_mc(s);
  const double t0 = s.num("window_start"), t1 = s.num("window_end");
  std::vector<double> grid;
  if (s.has("times")) {
    grid = s.list("times");
  } else {
    for (int i = 0; i <= 10; ++i) grid.push_back(t0 + (t1 - t0) * i / 10.0);
  }
  const auto report = diag::ec_profile(process, make_function(s.str("f")), s.num("z"), s.list("xs"),
                                       t0, t1, grid, mc);
  maybe_plot(ctx, report, "diff", Axis::T);
  return finish(ctx, report);
}

int cmd_eprop(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  const auto process = make_process(s);
  const auto mc = make_mc(s);
  std::vector<std::pair<double, double>> pairs;
  if (s.str("pairs") == "auto") {
    if (!process.model()) {
      for (long n = 2; n <= 50; ++n) pairs.emplace_back(1.0 / static_cast<double>(n), static_cast<double>(n));
    } else {
      for (long n : {5L, 10L, 20L}) pairs.emplace_back(1.0 / static_cast<double>(n), static_cast<double>(n));
    }
  } else {
    std::stringstream ss(s.str("pairs"));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (trim(item).empty()) continue;
      const auto colon = item.find(':');
      if (colon == std::string::npos) throw UsageError("pairs: expected x:t, got '" + item + "'");
      const double t = parse_double("pairs", item.substr(colon + 1));
      if (t < 0.0) throw UsageError("pairs: negative time");
      pairs.emplace_back(parse_double("pairs", item.substr(0, colon)), t);
    }
    if (pairs.empty()) throw UsageError("pairs: grid empty");
  }
  const auto report = diag::eproperty_witness(process, make_function(s.str("f")), s.num("z"), pairs, mc);
  maybe_plot(ctx, report, "witness", Axis::T);
  return finish(ctx, report);
}

int cmd_lowerbound(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  const auto process = make_process(s);
  const auto mc = make_mc(s);
  const auto report = diag::lower_bound_scan(process, s.num("z"), s.positive("eps"), s.list("initials"),
                                             s.list("times"), mc);
  maybe_plot(ctx, report, "m", Axis::X);
  return finish(ctx, report);
}

int cmd_stability(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  const auto process = make_process(s);
  const auto mc = make_mc(s);
  const auto report = diag::stability_report(process, s.list("initials"), s.list("times"),
                                             EmpiricalMeasure::dirac(s.num("z")), mc);
  maybe_plot(ctx, report, "distance", Axis::T);
  return finish(ctx, report);
}

int cmd_assumptions(const Context& ctx) {
  const auto& s = ctx.settings;
  check_format(s);
  if (s.str("model") != "halving") {
    throw UsageError("assumptions: model '" + s.str("model") +
                     "' has no assumption set; use --model halving");
  }
  const auto process = make_process(s);
  const auto mc = make_mc(s);
  auto [model, assume] = ifs::example_halving(s.positive("lambda"));
  const std::string& omega = s.str("omega");
  if (omega == "identity") {
    assume.omega = ifs::omega_identity;
  } else if (omega == "exp") {
    assume.omega = ifs::omega_exp;
  } else {
    throw UsageError("omega must be identity or exp");
  }
  const std::uint64_t points = s.u64("check_points");
  const std::uint64_t b5_points = s.u64("b5_points");
  const std::uint64_t n_trunc = s.u64("n_trunc");
  const double check_max = s.positive("check_max");
  if (points == 0 || b5_points == 0) throw UsageError("assumptions: grid empty");
  if (n_trunc > 64) throw UsageError("n_trunc must be at most 64");

  std::vector<double> grid;
  for (std::uint64_t i = 1; i <= points; ++i) {
    grid.push_back(check_max * static_cast<double>(i) / static_cast<double>(points));
  }
  const double z = assume.anchor;
  diag::DiagnosticReport report;
  report.rows.push_back({"b2", kNone, kNone, kNone, diag::check_b2(model, assume, grid), 0.0, ""});
  report.rows.push_back({"b3", kNone, kNone, kNone, diag::check_b3(model, assume, grid), 0.0, ""});
  for (std::uint64_t i = 1; i <= b5_points; ++i) {
    const double x = z + assume.eta * static_cast<double>(i) / static_cast<double>(b5_points);
    try {
      const auto terms = diag::b5_series(model, assume, static_cast<long>(n_trunc), x);
      report.rows.push_back({"b5", x, kNone, static_cast<double>(n_trunc),
                             terms.partial_sum + terms.tail - (1.0 - assume.gamma), 0.0, ""});
    } catch (const std::domain_error& e) {
      report.rows.push_back({"b5", x, kNone, static_cast<double>(n_trunc), kNone, 0.0, e.what()});
    }
  }
  auto c2 = diag::check_c2(process, z, s.list("eps"), s.list("initials"), s.positive("t_search"), mc);
  report.rows.insert(report.rows.end(), c2.rows.begin(), c2.rows.end());
  report.metadata = std::move(c2.metadata);
  report.metadata[0].second = "assumptions";
  report.metadata.emplace_back("omega", omega);
  report.metadata.emplace_back("check_grid", std::to_string(points) + " points in (0, " +
                                                 format_double(check_max) + "]");
  report.metadata.emplace_back("eta", format_double(assume.eta));
  report.metadata.emplace_back("one_minus_gamma", format_double(1.0 - assume.gamma));
  report.metadata.emplace_back("beta", format_double(assume.beta));
  maybe_plot(ctx, report, "b5", Axis::X);
  return finish(ctx, report);
}

struct Command {
  std::string path;  // "exact-ctmc", "diagnose ec", ...
  std::string help;
  std::vector<KeyDef> keys;
  std::function<int(const Context&)> run;
};

std::vector<Command> commands() {
  return {
      {"exact-ctmc", "closed-form transition table and semigroup values",
       {{"n", nullptr, "chain index, n >= 2"},
        {"t", "1", "comma-separated times"},
        {"f", nullptr, "test function for P_t f: xmin1 | one"},
        {"out", nullptr, "output file (default stdout)"},
        {"format", "csv", "csv | json"},
        {"plot", nullptr, "SVG line plot path"}},
       cmd_exact_ctmc},
      {"simulate", "dump jump chains",
       with_common({{"x", "0.5", "initial point"},
                    {"horizon", "10", "time horizon"},
                    {"trajectories", "10", "number of trajectories"}}),
       cmd_simulate},
      {"estimate", "Monte Carlo estimates of P_t f(x) and P_t(x, B(z, r))",
       with_common({{"initials", "0.5", "initial points"},
                    {"times", "1,2,4", "times"},
                    {"f", "xmin1", "xmin1 | one"},
                    {"z", "0", "ball center"},
                    {"radii", "", "ball radii"}}),
       cmd_estimate},
      {"diagnose ec", "eventual-continuity profile psi(x; T)",
       with_common({{"f", "xmin1", "xmin1 | one"},
                    {"z", "0", "anchor point"},
                    {"xs", "0.5,0.25,0.125", "points near z"},
                    {"window_start", "50", "window start T"},
                    {"window_end", "100", "window end t_max"},
                    {"times", nullptr, "grid in the window (default 11 equispaced)"}}),
       cmd_ec},
      {"diagnose eprop", "e-property witnesses",
       with_common({{"f", "xmin1", "xmin1 | one"},
                    {"z", "0", "anchor point"},
                    {"pairs", "auto", "x:t,x:t,... or auto"}}),
       cmd_eprop},
      {"diagnose lowerbound", "finite-window lower-bound scan",
       with_common({{"z", "0", "ball center"},
                    {"eps", "0.1", "ball radius"},
                    {"initials", "0.1,0.5,1,2,5,10", "x grid"},
                    {"times", "100,150,200", "t grid"}}),
       cmd_lowerbound},
      {"diagnose stability", "BL distance to the point mass at z",
       with_common({{"initials", "0.5,1,2", "initial points"},
                    {"times", "10,100,200", "t grid"},
                    {"z", "0", "reference point"}}),
       cmd_stability},
      {"diagnose assumptions", "B2, B3, B5 and C2 checks for the halving model",
       with_common({{"omega", "identity", "modulus: identity | exp"},
                    {"check_points", "1000", "B2/B3 grid size"},
                    {"check_max", "10", "B2/B3 grid upper end"},
                    {"b5_points", "8", "B5 grid size on (0, eta]"},
                    {"n_trunc", "15", "B5 truncation index"},
                    {"eps", "0.1", "C2 radii"},
                    {"initials", "0.25,1,4", "C2 x grid"},
                    {"t_search", "1024", "C2 search horizon"}}),
       cmd_assumptions},
  };
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ergodicity diagnostics for Markov-Feller semigroups", "feller-diag"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  auto* diagnose = app.add_subcommand("diagnose", "ergodicity diagnostics");
  diagnose->require_subcommand(1);

  const auto cmds = commands();
  std::vector<CLI::App*> leaves;
  std::vector<std::map<std::string, std::pair<CLI::Option*, std::string>>> storage(cmds.size());
  std::vector<std::string> config_paths(cmds.size());
  for (std::size_t c = 0; c < cmds.size(); ++c) {
    const auto& cmd = cmds[c];
    CLI::App* leaf = nullptr;
    if (cmd.path.rfind("diagnose ", 0) == 0) {
      leaf = diagnose->add_subcommand(cmd.path.substr(9), cmd.help);
    } else {
      leaf = app.add_subcommand(cmd.path, cmd.help);
    }
    for (const auto& k : cmd.keys) {
      auto& slot = storage[c][k.name];
      std::string help = k.help;
      if (k.fallback) help += std::string(" [") + k.fallback + "]";
      slot.first = leaf->add_option(flag_name(k.name), slot.second, help);
    }
    leaf->add_option("--config", config_paths[c], "flat key = value file; flags win");
    leaves.push_back(leaf);
  }

  std::vector<char*> argv;
  std::vector<std::string> copy = args;
  for (auto& a : copy) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  for (std::size_t c = 0; c < cmds.size(); ++c) {
    if (!leaves[c]->parsed()) continue;
    try {
      Settings settings(cmds[c].path, cmds[c].keys);
      if (!config_paths[c].empty()) read_config(config_paths[c], settings);
      for (const auto& [key, slot] : storage[c]) {
        if (slot.first->count() > 0) settings.set(key, slot.second);
      }
      settings.apply_fallbacks();
      return cmds[c].run(Context{std::move(settings), out, err});
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
  }
  err << "error: no command\n";
  return 2;
}

}  // namespace feller::cli
