#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace geoloop {

/// One checked identity: a measured residual against its tolerance.
struct ReportEntry {
  std::string id;
  /// Human-readable statement of the identity being checked.
  std::string anchor;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  nlohmann::json meta = nlohmann::json::object();
};

struct ResidualReport {
  std::string suite;
  nlohmann::json config = nlohmann::json::object();
  std::vector<ReportEntry> entries;
  double elapsed_s = 0.0;

  /// Appends an entry; pass is residual <= tolerance (false for NaN).
  ReportEntry& add(std::string id, std::string anchor, double residual, double tolerance,
                   nlohmann::json meta = nlohmann::json::object());

  /// Records a check that could not be evaluated.
  ReportEntry& add_failure(std::string id, std::string anchor, double tolerance, std::string_view message);

  void append(const ResidualReport& other);
  void sort_entries();
  bool all_pass() const;
  const ReportEntry* find(std::string_view id) const;
};

/// Locale-independent, 17 significant digits; non-finite values print as inf, -inf, nan.
std::string format_number(double value);

nlohmann::json to_json(const ResidualReport& report);
ResidualReport report_from_json(const nlohmann::json& j);

/// CSV with header id,anchor,residual,tol,pass,meta.
std::string to_csv(const ResidualReport& report);

}  // namespace geoloop
