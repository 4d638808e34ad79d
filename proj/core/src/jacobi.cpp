#include <geoloop/errors.hpp>
#include <geoloop/jacobi.hpp>
#include <geoloop/stencil.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace geoloop {

// ---------------------------------------------------------------------------
// JacobiField
// ---------------------------------------------------------------------------

Vec JacobiField::block(int k, int which) const {
  const auto v = samples_.value(k);
  return Eigen::Map<const Eigen::VectorXd>(v.data() + which * dim_, dim_);
}

Vec JacobiField::field(double t) const {
  std::array<double, 4 * kMaxDim> buf{};
  samples_.interpolate(t, std::span<double>(buf.data(), static_cast<std::size_t>(samples_.width())));
  return Eigen::Map<const Eigen::VectorXd>(buf.data() + 2 * dim_, dim_);
}

Vec JacobiField::covariant_derivative(double t) const {
  std::array<double, 4 * kMaxDim> buf{};
  samples_.interpolate(t, std::span<double>(buf.data(), static_cast<std::size_t>(samples_.width())));
  return Eigen::Map<const Eigen::VectorXd>(buf.data() + 3 * dim_, dim_);
}

namespace {

struct JacobiState {
  Vec x, v, field, deriv;

  friend JacobiState operator+(const JacobiState& a, const JacobiState& b) {
    return {a.x + b.x, a.v + b.v, a.field + b.field, a.deriv + b.deriv};
  }
  friend JacobiState operator*(double s, const JacobiState& a) { return {s * a.x, s * a.v, s * a.field, s * a.deriv}; }
};

JacobiState jacobi_rhs(const Connection& conn, double t, const JacobiState& s, double curvature_step) {
  const Christoffel g = conn.coefficients(s.x);
  if (!g.all_finite()) throw DomainExitError(t);
  const Mat m = g.along(s.v);
  const Riemann r = riemann_at(conn, s.x, curvature_step);
  return {s.v, -(m * s.v), s.deriv - m * s.field, -r.apply(s.field, s.v, s.v) - m * s.deriv};
}

void pack(std::vector<double>& out, std::initializer_list<const Vec*> parts) {
  out.clear();
  for (const Vec* p : parts) out.insert(out.end(), p->data(), p->data() + p->size());
}

}  // namespace

JacobiField jacobi_solve(const Connection& conn, const GeodesicPath& path, const Vec& x0, const Vec& v0,
                         double curvature_step) {
  const int n = conn.dim();
  if (path.dim() != n || x0.size() != n || v0.size() != n) throw PreconditionError("Jacobi data dimension mismatch");
  if (!x0.allFinite() || !v0.allFinite()) throw PreconditionError("Jacobi initial data must be finite");
  const int steps = path.sample_count() - 1;
  const double h = path.step();

  SampledTrajectory traj(h, 4 * n);
  JacobiState y{path.initial().base.coords, path.initial().components, x0, v0};
  JacobiState k1 = jacobi_rhs(conn, 0.0, y, curvature_step);
  std::vector<double> value, slope;
  auto record = [&] {
    pack(value, {&y.x, &y.v, &y.field, &y.deriv});
    pack(slope, {&k1.x, &k1.v, &k1.field, &k1.deriv});
    traj.push(value, slope);
  };
  record();
  for (int s = 0; s < steps; ++s) {
    const double t = s * h;
    const JacobiState k2 = jacobi_rhs(conn, t + 0.5 * h, y + (0.5 * h) * k1, curvature_step);
    const JacobiState k3 = jacobi_rhs(conn, t + 0.5 * h, y + (0.5 * h) * k2, curvature_step);
    const JacobiState k4 = jacobi_rhs(conn, t + h, y + h * k3, curvature_step);
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!conn.contains(y.x)) throw DomainExitError(t + h);
    k1 = jacobi_rhs(conn, t + h, y, curvature_step);
    record();
  }
  return JacobiField(n, std::move(traj));
}

std::pair<JacobiField, JacobiField> natural_fields(const Connection& conn, const GeodesicPath& path) {
  const int n = conn.dim();
  if (path.dim() != n) throw PreconditionError("path dimension does not match connection");
  SampledTrajectory first(path.step(), 4 * n), second(path.step(), 4 * n);
  const Vec zero = zero_vec(n);
  std::vector<double> value, slope;
  for (int k = 0; k < path.sample_count(); ++k) {
    const double t = path.sample_time(k);
    const Vec x = path.sample_position(k), v = path.sample_velocity(k);
    const Vec acc = -conn.coefficients(x).contract(v, v);
    // Y: DY/dt = 0.
    pack(value, {&x, &v, &v, &zero});
    pack(slope, {&v, &acc, &acc, &zero});
    first.push(value, slope);
    // tY: D(tY)/dt = Y.
    const Vec tv = t * v;
    const Vec dtv = v + t * acc;
    pack(value, {&x, &v, &tv, &v});
    pack(slope, {&v, &acc, &dtv, &acc});
    second.push(value, slope);
  }
  return {JacobiField(n, std::move(first)), JacobiField(n, std::move(second))};
}

std::vector<double> jacobi_residuals(const Connection& conn, const JacobiField& field, double curvature_step) {
  const int count = field.sample_count();
  const double h = field.step();
  auto xs = [&](int i) { return field.sample_field(i); };
  auto ws = [&](int i) { return field.sample_derivative(i); };
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const Vec x = field.sample_position(k), v = field.sample_velocity(k);
    const Vec f = xs(k), w = ws(k);
    const Mat m = conn.coefficients(x).along(v);
    const Riemann r = riemann_at(conn, x, curvature_step);
    const Vec first = derivative5(xs, count, k, h) + m * f - w;
    const Vec second = derivative5(ws, count, k, h) + m * w + r.apply(f, v, v);
    out[static_cast<std::size_t>(k)] =
        std::max(first.lpNorm<Eigen::Infinity>(), second.lpNorm<Eigen::Infinity>());
  }
  return out;
}

double jacobi_residual(const Connection& conn, const JacobiField& field, double curvature_step) {
  const auto r = jacobi_residuals(conn, field, curvature_step);
  return r.empty() ? 0.0 : *std::max_element(r.begin(), r.end());
}

// ---------------------------------------------------------------------------
// VariationGrid
// ---------------------------------------------------------------------------

std::string_view to_string(VariationKind kind) {
  switch (kind) {
    case VariationKind::transported:
      return "alpha-transported";
    case VariationKind::linear:
      return "beta-direct";
    case VariationKind::linear_via_sum:
      return "beta-via-sum";
  }
  return "unknown";
}

VariationGrid::VariationGrid(VariationKind kind, int dim, std::vector<double> s, std::vector<double> t,
                             bool with_velocities)
    : kind_(kind), dim_(dim), s_(std::move(s)), t_(std::move(t)) {
  if (s_.size() < 5 || t_.size() < 5) throw PreconditionError("variation grid needs at least five samples per axis");
  positions_.assign(s_.size() * t_.size(), zero_vec(dim));
  if (with_velocities) velocities_.assign(s_.size() * t_.size(), zero_vec(dim));
}

Vec VariationGrid::t_derivative(int i, int j) const {
  if (has_velocities()) return velocity(i, j);
  const auto r = row(i);
  return derivative5([&](int k) { return r[static_cast<std::size_t>(k)]; }, t_count(), j, dt());
}

Vec VariationGrid::row_at(int i, double t) const {
  const int n = t_count();
  if (!(t >= t_.front() - 1e-12 && t <= t_.back() + 1e-12)) throw RangeError("t outside the variation grid");
  int j = static_cast<int>(std::floor((t - t_.front()) / dt()));
  j = std::clamp(j, 0, n - 2);
  const double u = (t - this->t(j)) / dt();
  if (u == 0.0) return position(i, j);
  if (has_velocities()) {
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * position(i, j) + (u3 - 2 * u2 + u) * dt() * velocity(i, j) +
           (-2 * u3 + 3 * u2) * position(i, j + 1) + (u3 - u2) * dt() * velocity(i, j + 1);
  }
  // Cubic Lagrange through four nodes around t.
  const int first = std::clamp(j - 1, 0, n - 4);
  Vec out = zero_vec(dim_);
  for (int m = 0; m < 4; ++m) {
    double w = 1.0;
    for (int q = 0; q < 4; ++q)
      if (q != m) w *= (t - this->t(first + q)) / (this->t(first + m) - this->t(first + q));
    out += w * position(i, first + m);
  }
  return out;
}

namespace {

std::pair<std::vector<double>, std::vector<double>> grid_axes(const GridSpec& spec) {
  if (!(spec.ds > 0.0) || !(spec.dt > 0.0) || !(spec.s_max > 0.0)) throw PreconditionError("grid steps must be positive");
  const long m = std::lround(spec.s_max / spec.ds);
  const long nt = std::lround(1.0 / spec.dt);
  if (m < 2 || nt < 4) throw PreconditionError("grid needs at least five samples per axis");
  std::vector<double> s, t;
  for (long i = -m; i <= m; ++i) s.push_back(static_cast<double>(i) * spec.ds);
  for (long j = 0; j <= nt; ++j) t.push_back(static_cast<double>(j) / static_cast<double>(nt));
  return {std::move(s), std::move(t)};
}

void check_directions(const Connection& conn, const Point& a, std::initializer_list<const Vec*> dirs) {
  if (a.dim() != conn.dim()) throw PreconditionError("base point dimension does not match connection");
  for (const Vec* d : dirs)
    if (d->size() != conn.dim() || !d->allFinite()) throw PreconditionError("direction must be finite, full dimension");
}

}  // namespace

VariationGrid variation_alpha(const Connection& conn, const Point& a, const Vec& zeta, const Vec& xi,
                              const GridSpec& spec, const GeoSettings& settings) {
  check_directions(conn, a, {&zeta, &xi});
  auto [s, t] = grid_axes(spec);
  VariationGrid grid(VariationKind::transported, conn.dim(), s, t, true);
  for (int i = 0; i < grid.s_count(); ++i) {
    Vec x = a.coords;
    Vec w = xi;
    if (grid.s(i) != 0.0) {
      const GeodesicEnd end = geodesic_end(conn, TangentVector{a, grid.s(i) * zeta}, 1.0, settings.step, true);
      x = end.position;
      w = end.frame * xi;
    }
    const GeodesicPath row = integrate_geodesic(conn, TangentVector{Point(x), w}, 1.0, settings.step);
    for (int j = 0; j < grid.t_count(); ++j) {
      grid.set_position(i, j, row.position(grid.t(j)));
      grid.set_velocity(i, j, row.velocity(grid.t(j)));
    }
  }
  return grid;
}

VariationGrid variation_beta(const Connection& conn, const Point& a, const Vec& xi, const Vec& eta,
                             const GridSpec& spec, BetaRoute route, const GeoSettings& settings) {
  check_directions(conn, a, {&xi, &eta});
  auto [s, t] = grid_axes(spec);
  if (route == BetaRoute::direct) {
    VariationGrid grid(VariationKind::linear, conn.dim(), s, t, true);
    for (int i = 0; i < grid.s_count(); ++i) {
      const GeodesicPath row = integrate_geodesic(conn, TangentVector{a, xi + grid.s(i) * eta}, 1.0, settings.step);
      for (int j = 0; j < grid.t_count(); ++j) {
        grid.set_position(i, j, row.position(grid.t(j)));
        grid.set_velocity(i, j, row.velocity(grid.t(j)));
      }
    }
    return grid;
  }
  VariationGrid grid(VariationKind::linear_via_sum, conn.dim(), s, t, false);
  const OdularStructure structure(conn, settings);
  for (int j = 0; j < grid.t_count(); ++j) {
    const Point xt = exp_map(conn, TangentVector{a, grid.t(j) * xi}, settings);
    for (int i = 0; i < grid.s_count(); ++i) {
      const Point y = exp_map(conn, TangentVector{a, grid.s(i) * grid.t(j) * eta}, settings);
      grid.set_position(i, j, structure.add(xt, a, y).coords);
    }
  }
  return grid;
}

Vec infinitesimal_variation(const VariationGrid& grid, double t) {
  const int c = grid.center_row();
  if (grid.s(c) != 0.0) throw PreconditionError("variation grid has no s = 0 row");
  const double span = grid.s(c + 1) - grid.s(c - 1);
  return (grid.row_at(c + 1, t) - grid.row_at(c - 1, t)) / span;
}

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

namespace {

nlohmann::json to_json_vec(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

/// d alpha / ds at node (i, j) by central difference over rows i - 1, i + 1.
Vec s_difference(const VariationGrid& g, int i, int j) {
  return (g.position(i + 1, j) - g.position(i - 1, j)) / (g.s(i + 1) - g.s(i - 1));
}

/// d/dt d alpha / ds at node (i, j), differencing the t-derivatives across rows.
Vec mixed_difference(const VariationGrid& g, int i, int j) {
  return (g.t_derivative(i + 1, j) - g.t_derivative(i - 1, j)) / (g.s(i + 1) - g.s(i - 1));
}

}  // namespace

ResidualReport verify_jacobi_variation(const Connection& conn, const Point& a, const Vec& zeta, const Vec& xi,
                                       const JacobiVariationOptions& options) {
  const VariationGrid grid = variation_alpha(conn, a, zeta, xi, options.grid, options.settings);
  const int c = grid.center_row();

  const Vec x0 = s_difference(grid, c, 0);
  const Vec base_velocity = grid.t_derivative(c, 0);
  const Vec v0 = mixed_difference(grid, c, 0) + eval_gamma(conn, a).contract(base_velocity, x0);

  const GeodesicPath path = integrate_geodesic(conn, TangentVector{a, xi}, 1.0, options.settings.step);
  const JacobiField field = jacobi_solve(conn, path, x0, v0, options.curvature_step);

  double worst = 0.0;
  for (int j = 0; j < grid.t_count(); ++j)
    worst = std::max(worst, (field.field(grid.t(j)) - s_difference(grid, c, j)).norm());

  ResidualReport report;
  report.suite = "jacobi-variation";
  report.add("jacobi-variation.discrepancy", "d alpha/ds solves D2X/dt2 + R(X,Y)Y = 0", worst, options.tolerance,
             {{"ds", grid.ds()},
              {"dt", grid.dt()},
              {"h", options.settings.step},
              {"x0", to_json_vec(x0)},
              {"dxdt0", to_json_vec(v0)}});
  return report;
}

ResidualReport verify_transported_variation(const Connection& conn, const Point& a, const Vec& zeta, const Vec& xi,
                                            const TransportedVariationOptions& options) {
  check_directions(conn, a, {&zeta, &xi});
  if (zeta.norm() == 0.0) throw PreconditionError("variation field along t = 0 vanishes: zeta must be nonzero");
  const VariationGrid grid = variation_alpha(conn, a, zeta, xi, options.grid, options.settings);

  double min_field = std::numeric_limits<double>::infinity();
  double worst_derivative = 0.0;
  for (int i = 1; i + 1 < grid.s_count(); ++i) {
    const Vec field = s_difference(grid, i, 0);
    min_field = std::min(min_field, field.norm());
    const Vec cov = mixed_difference(grid, i, 0) +
                    eval_gamma(conn, Point(grid.position(i, 0))).contract(grid.t_derivative(i, 0), field);
    worst_derivative = std::max(worst_derivative, cov.norm());
  }

  double worst_geodesic = 0.0;
  double worst_initial = 0.0;
  for (int i = 0; i < grid.s_count(); ++i) {
    const auto row = grid.row(i);
    worst_geodesic = std::max(worst_geodesic, sampled_geodesic_residual(conn, row, grid.dt()));
    const Vec measured = derivative5([&](int k) { return row[static_cast<std::size_t>(k)]; }, grid.t_count(), 0,
                                     grid.dt());
    Vec transported = xi;
    if (grid.s(i) != 0.0)
      transported =
          integrate_geodesic(conn, TangentVector{a, grid.s(i) * zeta}, 1.0, options.settings.step).frame(1.0) * xi;
    worst_initial = std::max(worst_initial, (measured - transported).norm());
  }

  ResidualReport report;
  report.suite = "transported-variation";
  const nlohmann::json meta = {{"ds", grid.ds()}, {"dt", grid.dt()}, {"min_field_norm", min_field}};
  report.add("transported-variation.field-derivative", "X(s,0) != 0 and DX(s,0)/dt = 0 along x(s)", worst_derivative,
             options.derivative_tolerance, meta);
  report.add("transported-variation.initial-velocity", "row s starts with velocity tau^a_x(s) xi", worst_initial,
             options.geodesic_tolerance, meta);
  report.add("transported-variation.row-geodesic", "every row alpha(s, .) is a geodesic", worst_geodesic,
             options.geodesic_tolerance, meta);
  return report;
}

ResidualReport verify_jacobi_generation(const Connection& conn, const Point& a, const GenerationDirections& directions,
                                        const GenerationOptions& options) {
  check_directions(conn, a, {&directions.zeta, &directions.xi, &directions.eta});
  const LoopContext ctx(conn, a, options.radius, options.settings);
  const VariationGrid alpha = variation_alpha(conn, a, directions.zeta, directions.xi, options.grid, options.settings);

  double d_mul = 0.0;
  for (int j = 0; j < alpha.t_count(); ++j) {
    const Point y = exp_map(conn, TangentVector{a, alpha.t(j) * directions.xi}, options.settings);
    for (int i = 0; i < alpha.s_count(); ++i) {
      const Point x(alpha.position(i, 0));
      d_mul = std::max(d_mul, (loop_multiply(ctx, x, y).coords - alpha.position(i, j)).norm());
    }
  }

  double d_scale = 0.0;
  const int last = alpha.t_count() - 1;
  for (int i = 0; i < alpha.s_count(); ++i) {
    const LoopContext row_ctx(ctx.structure(), Point(alpha.position(i, 0)), options.radius);
    const Point end(alpha.position(i, last));
    for (int j = 0; j < alpha.t_count(); ++j)
      d_scale = std::max(d_scale, (loop_scale(row_ctx, alpha.t(j), end).coords - alpha.position(i, j)).norm());
  }

  const VariationGrid direct = variation_beta(conn, a, directions.xi, directions.eta, options.grid, BetaRoute::direct,
                                              options.settings);
  const VariationGrid summed = variation_beta(conn, a, directions.xi, directions.eta, options.grid,
                                              BetaRoute::via_sum, options.settings);
  double d_add = 0.0;
  for (int i = 0; i < direct.s_count(); ++i)
    for (int j = 0; j < direct.t_count(); ++j)
      d_add = std::max(d_add, (direct.position(i, j) - summed.position(i, j)).norm());

  double beta_field = 0.0;
  double beta_derivative = 0.0;
  const Christoffel gamma_a = eval_gamma(conn, a);
  for (int i = 1; i + 1 < summed.s_count(); ++i) {
    const Vec field0 = s_difference(summed, i, 0);
    beta_field = std::max(beta_field, field0.norm());
    const auto field_at = [&](int j) { return s_difference(summed, i, j); };
    const Vec cov = derivative5(field_at, summed.t_count(), 0, summed.dt()) +
                    gamma_a.contract(summed.t_derivative(i, 0), field0);
    beta_derivative = std::max(beta_derivative, (cov - directions.eta).norm());
  }

  ResidualReport report;
  report.suite = "jacobi-generation";
  const nlohmann::json meta = {{"s_count", alpha.s_count()},
                               {"t_count", alpha.t_count()},
                               {"ds", alpha.ds()},
                               {"dt", alpha.dt()},
                               {"radius", options.radius}};
  report.add("jacobi-generation.add", "Exp_a(t xi + s t eta) = Lambda(x(t), a, y(s,t))", d_add, options.tolerance,
             meta);
  report.add("jacobi-generation.beta-derivative", "linear variation: DX(s,0)/dt = eta", beta_derivative,
             options.derivative_tolerance, meta);
  report.add("jacobi-generation.beta-field", "linear variation: X(s,0) = 0", beta_field, options.field_tolerance, meta);
  report.add("jacobi-generation.multiply", "alpha(s,t) = L(x(s), a, y(t))", d_mul, options.tolerance, meta);
  report.add("jacobi-generation.scale", "rows are affinely parametrized: alpha(s,t) = t_x(s) alpha(s,1)", d_scale,
             options.tolerance, meta);
  return report;
}

}  // namespace geoloop
