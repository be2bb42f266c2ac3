#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "feller/diagnostics.hpp"

namespace feller {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kSchema = "feller-report/1";

using Manifest = std::vector<std::pair<std::string, std::string>>;

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(const std::string& s);

/// Report tables. CSV: `# key = value` header lines (schema, version, the
/// manifest, then the report metadata) followed by
///   label,x,t,param,value,half_width,error
/// with unused coordinates left empty.
void write_csv(std::ostream& os, const Manifest& manifest, const diag::DiagnosticReport& report);
void write_json(std::ostream& os, const Manifest& manifest, const diag::DiagnosticReport& report);

}  // namespace feller
