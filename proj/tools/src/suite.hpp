#pragma once

#include <geoloop/manifold.hpp>
#include <geoloop/report.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace geoloop::cli {

/// Rejected command-line input; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReportFormat { json, csv };

struct RunConfig {
  std::string manifold = "flat2";
  /// Base point; the catalog center when absent.
  std::optional<Vec> point;
  /// Loop radius; min(0.3, trust radius) when absent.
  std::optional<double> radius;
  double h = 1e-3;
  double fd_step = 1e-3;
  double ds = 1e-3;
  double dt = 1e-2;
  std::uint64_t seed = 42;
  double epsilon = 0.1;
  std::string out;
  ReportFormat format = ReportFormat::json;
};

/// A config with every default resolved against the catalog.
struct ResolvedConfig {
  RunConfig config;
  CatalogEntry entry;
  Point point;
  double radius;
};

/// Validates the config and resolves defaults. Throws UsageError.
ResolvedConfig resolve(const RunConfig& config);

nlohmann::json config_echo(const ResolvedConfig& rc);

/// Runs every verification suite for the configured manifold. Numerical failures
/// become failed entries; the result is sorted by entry id.
ResidualReport run_verify(const ResolvedConfig& rc);

}  // namespace geoloop::cli
