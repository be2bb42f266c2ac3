#include "feller/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace feller {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

namespace {

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

nlohmann::ordered_json number(double v) {
  // JSON has no NaN; non-finite values travel as strings.
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return format_double(v);
  return v;
}

}  // namespace

void write_csv(std::ostream& os, const Manifest& manifest, const diag::DiagnosticReport& report) {
  os << "# schema = " << kSchema << '\n' << "# version = " << kVersion << '\n';
  for (const auto& [k, v] : manifest) os << "# " << k << " = " << v << '\n';
  for (const auto& [k, v] : report.metadata) os << "# " << k << " = " << v << '\n';
  os << "label,x,t,param,value,half_width,error\n";
  for (const auto& r : report.rows) {
    os << csv_field(r.label) << ',' << cell(r.x) << ',' << cell(r.t) << ',' << cell(r.param) << ','
       << cell(r.value) << ',' << cell(r.half_width) << ',' << csv_field(r.error) << '\n';
  }
}

void write_json(std::ostream& os, const Manifest& manifest, const diag::DiagnosticReport& report) {
  nlohmann::ordered_json doc;
  doc["schema"] = kSchema;
  doc["version"] = kVersion;
  doc["manifest"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : manifest) doc["manifest"][k] = v;
  doc["metadata"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.metadata) doc["metadata"][k] = v;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    doc["rows"].push_back({{"label", r.label},
                           {"x", number(r.x)},
                           {"t", number(r.t)},
                           {"param", number(r.param)},
                           {"value", number(r.value)},
                           {"half_width", number(r.half_width)},
                           {"error", r.error}});
  }
  os << doc.dump(2) << '\n';
}

}  // namespace feller
