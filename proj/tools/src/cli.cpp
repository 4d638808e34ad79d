#include "cli.hpp"

#include "suite.hpp"

#include <geoloop/errors.hpp>
#include <geoloop/jacobi.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace geoloop::cli {

namespace {

/// Parses "1.5,-2,0" into a vector of one to three finite components.
Vec parse_vector(const std::string& text, const char* flag) {
  std::vector<double> values;
  const char* p = text.data();
  const char* end = p + text.size();
  while (true) {
    double v = 0.0;
    const auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || !std::isfinite(v)) throw UsageError(std::string("malformed vector for ") + flag + ": '" + text + "'");
    values.push_back(v);
    p = next;
    if (p == end) break;
    if (*p != ',') throw UsageError(std::string("malformed vector for ") + flag + ": '" + text + "'");
    ++p;
  }
  if (values.size() > static_cast<std::size_t>(kMaxDim))
    throw UsageError(std::string("too many components for ") + flag);
  Vec out(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) out(static_cast<Eigen::Index>(i)) = values[i];
  return out;
}

Vec require_dim(const std::string& text, const char* flag, int dim) {
  Vec v = parse_vector(text, flag);
  if (v.size() != dim)
    throw UsageError(std::string(flag) + " needs " + std::to_string(dim) + " components, got " + std::to_string(v.size()));
  return v;
}

void configure_logging(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("geoloop", std::move(sink));
  logger->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("GEOLOOP_LOG"); env != nullptr && *env != '\0') {
    const std::string name(env);
    level = spdlog::level::from_str(name);
    if (level == spdlog::level::off && name != "off") {
      level = spdlog::level::warn;
      logger->warn("unknown GEOLOOP_LOG level '{}', using warn", name);
    }
  }
  logger->set_level(level);
  spdlog::set_default_logger(std::move(logger));
}

void add_common(CLI::App& cmd, RunConfig& cfg, std::string& point) {
  cmd.add_option("--manifold", cfg.manifold, "Catalog manifold name")->capture_default_str();
  cmd.add_option("--point", point, "Base point, comma separated (default: catalog center)");
  cmd.add_option("--h", cfg.h, "RK4 step")->capture_default_str();
  cmd.add_option("--epsilon", cfg.epsilon, "Perturbation strength for poly-perturbed2")->capture_default_str();
  cmd.add_option("--out", cfg.out, "Output file (default: standard output)");
}

void write_line(std::ostream& os, const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << format_number(values[i]);
  os << '\n';
}

void append(std::vector<double>& row, const Vec& v) { row.insert(row.end(), v.data(), v.data() + v.size()); }

std::string csv_header(int n, std::initializer_list<const char*> groups, std::initializer_list<const char*> tail) {
  std::string h = "t";
  for (const char* g : groups)
    for (int i = 1; i <= n; ++i) h += std::string(",") + g + std::to_string(i);
  for (const char* t : tail) h += std::string(",") + t;
  return h;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const ResolvedConfig rc = resolve(cfg);
  spdlog::info("verify {} at {} radius {}", rc.config.manifold, config_echo(rc)["point"].dump(), rc.radius);
  const ResidualReport report = run_verify(rc);
  if (cfg.format == ReportFormat::json)
    out << to_json(report).dump(2) << '\n';
  else
    out << to_csv(report);
  for (const auto& e : report.entries)
    if (!e.pass) spdlog::warn("{} failed: residual {} > {}", e.id, format_number(e.residual), format_number(e.tolerance));
  return report.all_pass() ? kExitOk : kExitFailure;
}

int cmd_geodesic(const RunConfig& cfg, const std::string& velocity, double t_end, std::ostream& out) {
  const ResolvedConfig rc = resolve(cfg);
  const Connection& conn = rc.entry.connection;
  if (!(std::isfinite(t_end) && t_end > 0.0)) throw UsageError("--t-end must be positive");
  const Vec v = require_dim(velocity, "--velocity", conn.dim());
  const GeodesicTrace trace = trace_geodesic(conn, TangentVector{rc.point, v}, t_end, cfg.h);
  const GeodesicPath& path = trace.path;
  out << csv_header(conn.dim(), {"x", "v"}, {}) << '\n';
  std::vector<double> row;
  for (int k = 0; k < path.sample_count(); ++k) {
    row.assign(1, path.sample_time(k));
    append(row, path.sample_position(k));
    append(row, path.sample_velocity(k));
    write_line(out, row);
  }
  if (trace.exit_time) {
    out << "# domain-exit t=" << format_number(*trace.exit_time) << '\n';
    spdlog::warn("geodesic left the chart domain at t={}", format_number(*trace.exit_time));
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_jacobi(const RunConfig& cfg, const std::string& velocity, const std::string& x0, const std::string& v0,
               double t_end, std::ostream& out) {
  const ResolvedConfig rc = resolve(cfg);
  const Connection& conn = rc.entry.connection;
  if (!(std::isfinite(t_end) && t_end > 0.0)) throw UsageError("--t-end must be positive");
  const int n = conn.dim();
  const Vec v = require_dim(velocity, "--velocity", n);
  const Vec field0 = require_dim(x0, "--x0", n);
  const Vec deriv0 = require_dim(v0, "--v0", n);
  GeodesicPath path = [&] {
    try {
      return integrate_geodesic(conn, TangentVector{rc.point, v}, t_end, cfg.h);
    } catch (const DomainExitError& e) {
      out << "# domain-exit t=" << format_number(e.exit_time()) << '\n';
      throw;
    }
  }();
  const JacobiField field = jacobi_solve(conn, path, field0, deriv0);
  const std::vector<double> residuals = jacobi_residuals(conn, field);
  const auto& forms = rc.entry.closed_forms;
  out << csv_header(n, {"X", "DX"}, {"norm", "residual"}) << '\n';
  std::vector<double> row;
  for (int k = 0; k < field.sample_count(); ++k) {
    const Vec x = field.sample_position(k), f = field.sample_field(k);
    const double norm = forms ? std::sqrt(forms->inner(x, f, f)) : f.norm();
    row.assign(1, field.sample_time(k));
    append(row, f);
    append(row, field.sample_derivative(k));
    row.push_back(norm);
    row.push_back(residuals[static_cast<std::size_t>(k)]);
    write_line(out, row);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  configure_logging(err);

  CLI::App app{"Geodesic loops of affinely connected charts: verification and sampling"};
  app.name("geoloop");
  app.require_subcommand(1);
  // "--h" is the step flag, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  RunConfig cfg;
  std::string point, velocity, x0, v0, format = "json";
  double radius = 0.0;
  double t_end = 1.0;

  CLI::App* verify = app.add_subcommand("verify", "Run every verification suite and emit a residual report");
  add_common(*verify, cfg, point);
  auto* radius_opt = verify->add_option("--radius", radius, "Loop radius (default: min(0.3, trust radius))");
  verify->add_option("--fd-step", cfg.fd_step, "Finite-difference step for connection recovery")->capture_default_str();
  verify->add_option("--ds", cfg.ds, "Variation grid step in s")->capture_default_str();
  verify->add_option("--dt", cfg.dt, "Variation grid step in t")->capture_default_str();
  verify->add_option("--seed", cfg.seed, "Seed for sampled points")->capture_default_str();
  verify->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  CLI::App* geodesic = app.add_subcommand("geodesic", "Integrate a geodesic and emit t,x,v samples as CSV");
  add_common(*geodesic, cfg, point);
  geodesic->add_option("--velocity", velocity, "Initial velocity, comma separated")->required();
  geodesic->add_option("--t-end", t_end, "Final parameter")->capture_default_str();

  CLI::App* jacobi = app.add_subcommand("jacobi", "Solve the Jacobi equation along a geodesic and emit CSV");
  add_common(*jacobi, cfg, point);
  jacobi->add_option("--velocity", velocity, "Geodesic initial velocity")->required();
  jacobi->add_option("--x0", x0, "Initial field X(0)")->required();
  jacobi->add_option("--v0", v0, "Initial covariant derivative DX/dt(0)")->required();
  jacobi->add_option("--t-end", t_end, "Final parameter")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!point.empty()) cfg.point = parse_vector(point, "--point");
    if (radius_opt->count() > 0) cfg.radius = radius;
    cfg.format = format == "csv" ? ReportFormat::csv : ReportFormat::json;

    std::ofstream file;
    if (!cfg.out.empty()) {
      file.open(cfg.out, std::ios::binary);
      if (!file) {
        err << "error: cannot open " << cfg.out << " for writing\n";
        return kExitFailure;
      }
    }
    std::ostream& sink = cfg.out.empty() ? out : file;

    if (verify->parsed()) return cmd_verify(cfg, sink);
    if (geodesic->parsed()) return cmd_geodesic(cfg, velocity, t_end, sink);
    return cmd_jacobi(cfg, velocity, x0, v0, t_end, sink);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const PreconditionError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace geoloop::cli
