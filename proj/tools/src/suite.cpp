#include "suite.hpp"

#include <geoloop/errors.hpp>
#include <geoloop/jacobi.hpp>
#include <geoloop/loops.hpp>
#include <geoloop/sampling.hpp>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>

namespace geoloop::cli {

namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

std::vector<double> as_list(const Vec& v) { return {v.data(), v.data() + v.size()}; }

/// Runs one suite, turning any library error into failed entries so the report is complete.
void run_suite(ResidualReport& report, const std::vector<std::pair<std::string, double>>& ids, std::string_view anchor,
               const std::function<ResidualReport()>& body) {
  spdlog::debug("suite {}", ids.front().first);
  const auto start = std::chrono::steady_clock::now();
  try {
    report.append(body());
  } catch (const std::exception& e) {
    spdlog::warn("suite {} failed: {}", ids.front().first, e.what());
    for (const auto& [id, tol] : ids) report.add_failure(id, std::string(anchor), tol, e.what());
  }
  spdlog::debug("  {:.3f}s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
}

// Independent seeds per suite so adding or reordering suites leaves the others unchanged.
std::uint64_t suite_seed(std::uint64_t seed, std::uint64_t salt) { return seed * 0x9E3779B97F4A7C15ull + salt; }

}  // namespace

ResolvedConfig resolve(const RunConfig& config) {
  if (!positive(config.h)) throw UsageError("--h must be positive");
  if (!positive(config.fd_step)) throw UsageError("--fd-step must be positive");
  if (!positive(config.ds)) throw UsageError("--ds must be positive");
  if (!positive(config.dt)) throw UsageError("--dt must be positive");
  if (!positive(config.epsilon)) throw UsageError("--epsilon must be positive");
  if (config.h > 0.1) throw UsageError("--h must not exceed 0.1");
  if (config.dt > 0.25) throw UsageError("--dt must not exceed 0.25");

  std::optional<CatalogEntry> entry;
  try {
    entry = catalog(config.manifold, CatalogOptions{config.epsilon});
  } catch (const LookupError& e) {
    throw UsageError(e.what());
  }
  const Connection& conn = entry->connection;
  Point point = entry->center;
  if (config.point) {
    if (config.point->size() != conn.dim())
      throw UsageError("--point needs " + std::to_string(conn.dim()) + " coordinates for " + conn.name());
    if (!conn.contains(*config.point)) throw UsageError("--point lies outside the chart domain of " + conn.name());
    point = Point(*config.point);
  }
  const double radius = config.radius.value_or(std::min(0.3, conn.trust_radius()));
  if (!positive(radius)) throw UsageError("--radius must be positive");
  if (radius > conn.trust_radius())
    throw UsageError("--radius exceeds the trust radius " + format_number(conn.trust_radius()) + " of " + conn.name());
  return ResolvedConfig{config, std::move(*entry), std::move(point), radius};
}

nlohmann::json config_echo(const ResolvedConfig& rc) {
  const RunConfig& c = rc.config;
  return {{"manifold", c.manifold},     {"point", as_list(rc.point.coords)}, {"radius", rc.radius},
          {"h", c.h},                   {"fd_step", c.fd_step},              {"ds", c.ds},
          {"dt", c.dt},                 {"seed", c.seed},                    {"epsilon", c.epsilon},
          {"format", c.format == ReportFormat::json ? "json" : "csv"}};
}

ResidualReport run_verify(const ResolvedConfig& rc) {
  const auto start = std::chrono::steady_clock::now();
  const Connection& conn = rc.entry.connection;
  const RunConfig& cfg = rc.config;
  const Point& a = rc.point;
  const int n = conn.dim();
  const double r = rc.radius;

  GeoSettings settings;
  settings.step = cfg.h;
  const OdularStructure structure(conn, settings);
  const LoopContext ctx(structure, a, r);

  ResidualReport report;
  report.suite = "verify";
  report.config = config_echo(rc);

  // Random loop arguments stay in half the radius so products remain well inside the loop.
  const double inner = 0.5 * r;

  run_suite(report, {{"geodesic.residual", 1e-8}}, "x'' + Gamma(x', x') = 0 along integrated geodesics", [&] {
    BallSampler rng(suite_seed(cfg.seed, 1));
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const GeodesicPath path = integrate_geodesic(conn, TangentVector{a, rng.direction(n, r)}, 1.0, cfg.h);
      worst = std::max(worst, geodesic_residual(conn, path));
    }
    ResidualReport out;
    out.add("geodesic.residual", "x'' + Gamma(x', x') = 0 along integrated geodesics", worst, 1e-8,
            {{"samples", 5}});
    return out;
  });

  if (rc.entry.closed_forms) {
    run_suite(report, {{"geodesic.closed-form", 1e-8}}, "Exp_a(X) against the closed-form geodesic", [&] {
      BallSampler rng(suite_seed(cfg.seed, 2));
      double worst = 0.0;
      for (int i = 0; i < 10; ++i) {
        const Vec v = rng.direction(n, r);
        const Point e = exp_map(conn, TangentVector{a, v}, settings);
        worst = std::max(worst, (e.coords - rc.entry.closed_forms->exp(a.coords, v)).norm());
      }
      ResidualReport out;
      out.add("geodesic.closed-form", "Exp_a(X) against the closed-form geodesic", worst, 1e-8, {{"samples", 10}});
      return out;
    });
  }

  run_suite(report, {{"loop.neutral", 1e-9}}, "x . a = x, a . y = y, 1 z = z, x + a = x", [&] {
    BallSampler rng(suite_seed(cfg.seed, 3));
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      const Point x(rng.point(a.coords, inner));
      const Point y(rng.point(a.coords, inner));
      worst = std::max({worst, (loop_multiply(ctx, x, a).coords - x.coords).norm(),
                        (loop_multiply(ctx, a, y).coords - y.coords).norm(),
                        (loop_scale(ctx, 1.0, y).coords - y.coords).norm(),
                        (loop_scale(ctx, 0.0, y).coords - a.coords).norm(),
                        (loop_add(ctx, x, a).coords - x.coords).norm()});
    }
    ResidualReport out;
    out.add("loop.neutral", "x . a = x, a . y = y, 1 z = z, x + a = x", worst, 1e-9, {{"samples", 20}});
    return out;
  });

  run_suite(report, {{"loop.division", 1e-9}}, "x . (x \\ z) = z and (z / y) . y = z", [&] {
    BallSampler rng(suite_seed(cfg.seed, 4));
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Point x(rng.point(a.coords, inner));
      const Point z(rng.point(a.coords, inner));
      worst = std::max(worst, (loop_multiply(ctx, x, left_divide(ctx, x, z)).coords - z.coords).norm());
      worst = std::max(worst, (loop_multiply(ctx, right_divide(ctx, z, x), x).coords - z.coords).norm());
    }
    ResidualReport out;
    out.add("loop.division", "x . (x \\ z) = z and (z / y) . y = z", worst, 1e-9, {{"samples", 5}});
    return out;
  });

  run_suite(report, {{"loop.monoassociativity", 1e-7}}, "(t x) . (u x) = (t + u) x", [&] {
    BallSampler rng(suite_seed(cfg.seed, 5));
    constexpr std::array<std::pair<double, double>, 3> pairs{{{0.3, 0.4}, {-0.5, 0.7}, {0.25, 0.25}}};
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      const Point x(rng.point(a.coords, inner));
      for (const auto& [t, u] : pairs) worst = std::max(worst, monoassociativity_residual(ctx, t, u, x));
    }
    ResidualReport out;
    out.add("loop.monoassociativity", "(t x) . (u x) = (t + u) x", worst, 1e-7, {{"samples", 5}, {"pairs", 3}});
    return out;
  });

  run_suite(report, {{"loop.exponential", 1e-6}, {"loop.canonical", 1e-6}},
            "loop exponential and canonical operations", [&] {
              BallSampler rng(suite_seed(cfg.seed, 6));
              double worst_exp = 0.0;
              for (int i = 0; i < 10; ++i) {
                const Vec v = rng.direction(n, inner * rng.uniform(0.2, 1.0));
                worst_exp = std::max(worst_exp, (loop_exponential(ctx, v).end.coords -
                                                 exp_map(conn, TangentVector{a, v}, settings).coords)
                                                    .norm());
              }
              double worst_canon = 0.0;
              for (int i = 0; i < 2; ++i) {
                const Point x(rng.point(a.coords, inner));
                const Point y(rng.point(a.coords, inner));
                const double t = rng.uniform(-1.0, 1.0);
                worst_canon = std::max(
                    {worst_canon, (canonical_scalar(ctx, t, x).coords - loop_scale(ctx, t, x).coords).norm(),
                     (canonical_sum(ctx, x, y).coords - loop_add(ctx, x, y).coords).norm()});
              }
              ResidualReport out;
              out.add("loop.exponential", "f' = A(f) X, f(0) = a ends at Exp_a(X)", worst_exp, 1e-6,
                      {{"samples", 10}});
              out.add("loop.canonical", "canonical scalar and sum agree with omega and Lambda", worst_canon, 1e-6,
                      {{"samples", 2}});
              return out;
            });

  run_suite(report, {{"connection-rebuild.max-error", 5e-4}}, "connection recovered from the loop", [&] {
    BallSampler rng(suite_seed(cfg.seed, 7));
    std::vector<Point> points;
    for (const Vec& p : rng.points(a.coords, r, 10)) points.emplace_back(p);
    return verify_connection_reconstruction(structure, points, ConnectionCheckOptions{cfg.fd_step, 5e-4});
  });

  run_suite(report,
            {{"structure-rebuild.add", 1e-3}, {"structure-rebuild.multiply", 1e-3}, {"structure-rebuild.scale", 1e-3}},
            "structure rebuilt from the recovered connection", [&] {
              BallSampler rng(suite_seed(cfg.seed, 8));
              std::vector<StructureSample> samples;
              for (int i = 0; i < 10; ++i) {
                Point x(rng.point(a.coords, inner));
                Point y(rng.point(a.coords, inner));
                samples.push_back({std::move(x), std::move(y), rng.uniform(-1.0, 1.0)});
              }
              StructureCheckOptions opts;
              opts.fd_step = cfg.fd_step;
              return verify_structure_reconstruction(structure, a, samples, opts);
            });

  const GridSpec grid{cfg.ds, cfg.dt, 5.0 * cfg.ds};

  run_suite(report, {{"jacobi-variation.discrepancy", 1e-4}}, "variation field of a geodesic family is Jacobi", [&] {
    BallSampler rng(suite_seed(cfg.seed, 9));
    const Vec zeta = rng.direction(n, 1.0);
    const Vec xi = rng.direction(n, r);
    return verify_jacobi_variation(conn, a, zeta, xi, JacobiVariationOptions{grid, settings});
  });

  run_suite(report,
            {{"transported-variation.field-derivative", 1e-5},
             {"transported-variation.initial-velocity", 1e-7},
             {"transported-variation.row-geodesic", 1e-7}},
            "transported variation", [&] {
              BallSampler rng(suite_seed(cfg.seed, 10));
              const Vec zeta = rng.direction(n, 1.0);
              const Vec xi = rng.direction(n, r);
              TransportedVariationOptions opts;
              opts.grid = grid;
              opts.settings = settings;
              return verify_transported_variation(conn, a, zeta, xi, opts);
            });

  run_suite(report,
            {{"jacobi-generation.add", 1e-6},
             {"jacobi-generation.beta-derivative", 1e-5},
             {"jacobi-generation.beta-field", 1e-9},
             {"jacobi-generation.multiply", 1e-6},
             {"jacobi-generation.scale", 1e-6}},
            "variations generate the loop operations", [&] {
              BallSampler rng(suite_seed(cfg.seed, 11));
              const double len = 0.25 * r;
              GenerationDirections dirs{rng.direction(n, len), rng.direction(n, len), rng.direction(n, len)};
              GenerationOptions opts;
              opts.settings = settings;
              opts.radius = r;
              return verify_jacobi_generation(conn, a, dirs, opts);
            });

  run_suite(report, {{"natural-fields.affine", 1e-6}, {"natural-fields.tangent", 1e-6}},
            "Y and tY solve the Jacobi equation", [&] {
              BallSampler rng(suite_seed(cfg.seed, 12));
              const GeodesicPath path = integrate_geodesic(conn, TangentVector{a, rng.direction(n, r)}, 1.0, cfg.h);
              const auto [tangent, affine] = natural_fields(conn, path);
              ResidualReport out;
              out.add("natural-fields.affine", "X = tY solves D2X/dt2 + R(X,Y)Y = 0", jacobi_residual(conn, affine),
                      1e-6);
              out.add("natural-fields.tangent", "X = Y solves D2X/dt2 + R(X,Y)Y = 0",
                      jacobi_residual(conn, tangent), 1e-6);
              return out;
            });

  report.sort_entries();
  report.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace geoloop::cli
