#include <geoloop/errors.hpp>
#include <geoloop/loops.hpp>

#include "newton.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

namespace geoloop {

namespace {

using CoordKey = std::array<double, kMaxDim>;

CoordKey key_of(const Vec& v) {
  CoordKey k{};
  for (Eigen::Index i = 0; i < v.size(); ++i) k[static_cast<std::size_t>(i)] = v(i);
  return k;
}

/// Loop operations with fixed neutral a, memoizing Exp_a^{-1} and the transport frames
/// tau^a_x by exact chart coordinates. Finite-difference stencils revisit the same
/// probe points many times; the memo keeps them consistent and cheap.
class LoopKernel {
 public:
  LoopKernel(const OdularStructure& structure, const Point& a) : s_(structure), a_(a) {}

  const Vec& log(const Vec& p, const std::optional<Vec>& guess = std::nullopt) {
    auto key = key_of(p);
    auto it = logs_.find(key);
    if (it != logs_.end()) return it->second;
    Vec v = p == a_.coords
                ? zero_vec(static_cast<int>(p.size()))
                : log_map(s_.connection(), a_, Point(p), s_.settings(), guess).components;
    return logs_.emplace(key, std::move(v)).first->second;
  }

  const Mat& frame(const Vec& x, const std::optional<Vec>& guess = std::nullopt) {
    auto key = key_of(x);
    auto it = frames_.find(key);
    if (it != frames_.end()) return it->second;
    const Vec& lx = log(x, guess);
    Mat p = geodesic_end(s_.connection(), TangentVector{a_, lx}, 1.0, s_.settings().step, true).frame;
    return frames_.emplace(key, std::move(p)).first->second;
  }

  Vec multiply(const Vec& x, const Vec& y) {
    const Mat& p = frame(x);
    const Vec w = p * log(y);
    return exp_map(s_.connection(), TangentVector{Point(x), w}, s_.settings()).coords;
  }

  const Point& neutral() const { return a_; }

 private:
  const OdularStructure& s_;
  Point a_;
  std::map<CoordKey, Vec> logs_;
  std::map<CoordKey, Mat> frames_;
};

void check_dim(const Connection& conn, const Point& p) {
  if (p.dim() != conn.dim()) throw PreconditionError("point dimension does not match connection");
}

Vec unit(int n, int j) {
  Vec e = zero_vec(n);
  e(j) = 1.0;
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// OdularStructure / LoopContext
// ---------------------------------------------------------------------------

OdularStructure::OdularStructure(Connection conn, GeoSettings settings)
    : conn_(std::move(conn)), settings_(settings) {}

Point OdularStructure::multiply(const Point& x, const Point& a, const Point& y) const {
  check_dim(conn_, x);
  check_dim(conn_, a);
  check_dim(conn_, y);
  LoopKernel k(*this, a);
  return Point(k.multiply(x.coords, y.coords));
}

Point OdularStructure::scale(double t, const Point& a, const Point& z) const {
  check_dim(conn_, a);
  check_dim(conn_, z);
  const Vec lz = log_map(conn_, a, z, settings_).components;
  return exp_map(conn_, TangentVector{a, t * lz}, settings_);
}

Point OdularStructure::add(const Point& x, const Point& a, const Point& y) const {
  check_dim(conn_, x);
  check_dim(conn_, a);
  check_dim(conn_, y);
  const Vec lx = log_map(conn_, a, x, settings_).components;
  const Vec ly = log_map(conn_, a, y, settings_).components;
  return exp_map(conn_, TangentVector{a, lx + ly}, settings_);
}

LoopContext::LoopContext(OdularStructure structure, Point neutral, double radius)
    : structure_(std::move(structure)), neutral_(std::move(neutral)), radius_(radius) {
  check_dim(structure_.connection(), neutral_);
  if (!(radius_ > 0.0)) throw PreconditionError("loop radius must be positive");
  if (radius_ > structure_.connection().trust_radius() * (1.0 + 1e-12))
    throw PreconditionError("loop radius exceeds the trust radius of " + structure_.connection().name());
  if (!structure_.connection().contains(neutral_.coords)) throw PreconditionError("neutral outside the chart domain");
}

LoopContext::LoopContext(const Connection& conn, Point neutral, double radius, const GeoSettings& settings)
    : LoopContext(OdularStructure(conn, settings), std::move(neutral), radius) {}

void LoopContext::require_within(const Point& p, const char* role) const {
  check_dim(connection(), p);
  if (!((p.coords - neutral_.coords).norm() <= radius_ * (1.0 + 1e-9)))
    throw PreconditionError(std::string(role) + " lies outside the loop radius");
}

Point loop_multiply(const LoopContext& ctx, const Point& x, const Point& y) {
  ctx.require_within(x, "left factor");
  ctx.require_within(y, "right factor");
  return ctx.structure().multiply(x, ctx.neutral(), y);
}

Point loop_scale(const LoopContext& ctx, double t, const Point& z) {
  ctx.require_within(z, "scaled point");
  return ctx.structure().scale(t, ctx.neutral(), z);
}

Point loop_add(const LoopContext& ctx, const Point& x, const Point& y) {
  ctx.require_within(x, "left summand");
  ctx.require_within(y, "right summand");
  return ctx.structure().add(x, ctx.neutral(), y);
}

Point left_divide(const LoopContext& ctx, const Point& x, const Point& z) {
  ctx.require_within(x, "divisor");
  ctx.require_within(z, "dividend");
  LoopKernel k(ctx.structure(), ctx.neutral());
  auto residual = [&](const Vec& y) -> Vec { return k.multiply(x.coords, y) - z.coords; };
  const Vec guess = z.coords - x.coords + ctx.neutral().coords;
  return Point(detail::newton_solve(residual, guess, ctx.settings(), "left division did not converge"));
}

Point right_divide(const LoopContext& ctx, const Point& z, const Point& y) {
  ctx.require_within(y, "divisor");
  ctx.require_within(z, "dividend");
  LoopKernel k(ctx.structure(), ctx.neutral());
  auto residual = [&](const Vec& x) -> Vec { return k.multiply(x, y.coords) - z.coords; };
  const Vec guess = z.coords - y.coords + ctx.neutral().coords;
  return Point(detail::newton_solve(residual, guess, ctx.settings(), "right division did not converge"));
}

// ---------------------------------------------------------------------------
// Fundamental fields and the loop exponential
// ---------------------------------------------------------------------------

namespace {

Mat left_field(LoopKernel& k, const Vec& x, double step) {
  const int n = static_cast<int>(x.size());
  const Vec& a = k.neutral().coords;
  Mat m(n, n);
  for (int j = 0; j < n; ++j)
    m.col(j) = (k.multiply(x, a + step * unit(n, j)) - k.multiply(x, a - step * unit(n, j))) / (2.0 * step);
  return m;
}

}  // namespace

Mat left_fundamental_field(const LoopContext& ctx, const Point& x, double step) {
  ctx.require_within(x, "field point");
  if (!(step > 0.0)) throw PreconditionError("finite-difference step must be positive");
  LoopKernel k(ctx.structure(), ctx.neutral());
  return left_field(k, x.coords, step);
}

Mat right_fundamental_field(const LoopContext& ctx, const Point& y, double step) {
  ctx.require_within(y, "field point");
  if (!(step > 0.0)) throw PreconditionError("finite-difference step must be positive");
  LoopKernel k(ctx.structure(), ctx.neutral());
  const int n = y.dim();
  const Vec& a = ctx.neutral().coords;
  Mat m(n, n);
  for (int j = 0; j < n; ++j)
    m.col(j) = (k.multiply(a + step * unit(n, j), y.coords) - k.multiply(a - step * unit(n, j), y.coords)) /
               (2.0 * step);
  return m;
}

LoopExponential loop_exponential(const LoopContext& ctx, const Vec& x, int steps) {
  const int n = ctx.connection().dim();
  if (x.size() != n || !x.allFinite()) throw PreconditionError("loop exponential needs finite components of full dimension");
  if (steps < 1) throw PreconditionError("loop exponential needs at least one step");
  const Vec& a = ctx.neutral().coords;
  LoopExponential out{ctx.neutral(), {a}};
  if (x.isZero(0.0)) {
    out.path.assign(static_cast<std::size_t>(steps) + 1, a);
    return out;
  }

  LoopKernel k(ctx.structure(), ctx.neutral());
  Vec last_point = a;
  Vec last_log = zero_vec(n);
  auto rhs = [&](double t, const Vec& f) -> Vec {
    if (!f.allFinite() || (f - a).norm() > ctx.radius() * (1.0 + 1e-9)) throw DomainExitError(t);
    // Warm-start the shooting from the previous stage, shifted by the chart displacement
    // (the differential of Exp_a^{-1} is close to the identity near a).
    const Vec& lf = k.log(f, Vec(last_log + (f - last_point)));
    last_point = f;
    last_log = lf;
    return left_field(k, f, kFundamentalFieldStep) * x;
  };

  const double h = 1.0 / steps;
  Vec f = a;
  for (int s = 0; s < steps; ++s) {
    const double t = s * h;
    const Vec k1 = rhs(t, f);
    const Vec k2 = rhs(t + 0.5 * h, f + 0.5 * h * k1);
    const Vec k3 = rhs(t + 0.5 * h, f + 0.5 * h * k2);
    const Vec k4 = rhs(t + h, f + h * k3);
    f += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!f.allFinite() || (f - a).norm() > ctx.radius() * (1.0 + 1e-9)) throw DomainExitError(t + h);
    out.path.push_back(f);
  }
  out.end = Point(f);
  return out;
}

Vec loop_logarithm(const LoopContext& ctx, const Point& x, int steps) {
  ctx.require_within(x, "loop logarithm argument");
  const Vec& a = ctx.neutral().coords;
  if (x.coords == a) return zero_vec(x.dim());
  auto residual = [&](const Vec& v) -> Vec { return loop_exponential(ctx, v, steps).end.coords - x.coords; };
  return detail::newton_solve(residual, Vec(x.coords - a), ctx.settings(), "loop logarithm did not converge");
}

Point canonical_scalar(const LoopContext& ctx, double t, const Point& x, int steps) {
  return loop_exponential(ctx, t * loop_logarithm(ctx, x, steps), steps).end;
}

Point canonical_sum(const LoopContext& ctx, const Point& x, const Point& y, int steps) {
  return loop_exponential(ctx, loop_logarithm(ctx, x, steps) + loop_logarithm(ctx, y, steps), steps).end;
}

double monoassociativity_residual(const LoopContext& ctx, double t, double u, const Point& x) {
  const Point tx = loop_scale(ctx, t, x);
  const Point ux = loop_scale(ctx, u, x);
  const Point sum = loop_scale(ctx, t + u, x);
  return (loop_multiply(ctx, tx, ux).coords - sum.coords).norm();
}

// ---------------------------------------------------------------------------
// Connection reconstruction
// ---------------------------------------------------------------------------

Christoffel reconstruct_connection(const OdularStructure& structure, const Point& a, double fd_step) {
  check_dim(structure.connection(), a);
  if (!structure.connection().contains(a.coords)) throw PreconditionError("reconstruction point outside the chart");
  const int n = a.dim();
  LoopKernel k(structure, a);
  const PointPairMap f = [&k](const Vec& x, const Vec& y) { return k.multiply(x, y); };
  Christoffel g(n);
  for (int j = 0; j < n; ++j)
    for (int kk = 0; kk < n; ++kk) {
      const Vec d = fd_second_mixed(f, a.coords, a.coords, j, kk, fd_step);
      for (int i = 0; i < n; ++i) g(i, j, kk) = -d(i);
    }
  return g;
}

namespace {

using NodeKey = std::array<long, kMaxDim>;

class ReconstructionLattice {
 public:
  ReconstructionLattice(OdularStructure structure, Vec anchor, double spacing, double fd_step)
      : structure_(std::move(structure)), anchor_(std::move(anchor)), spacing_(spacing), fd_step_(fd_step) {}

  Christoffel at(const Vec& x) const {
    const int n = static_cast<int>(x.size());
    NodeKey base{};
    std::array<double, kMaxDim> frac{};
    for (int m = 0; m < n; ++m) {
      const double u = (x(m) - anchor_(m)) / spacing_;
      const double fl = std::floor(u);
      base[static_cast<std::size_t>(m)] = static_cast<long>(fl);
      frac[static_cast<std::size_t>(m)] = u - fl;
    }
    Christoffel out(n);
    for (int corner = 0; corner < (1 << n); ++corner) {
      NodeKey idx = base;
      double w = 1.0;
      for (int m = 0; m < n; ++m) {
        const bool up = (corner >> m) & 1;
        idx[static_cast<std::size_t>(m)] += up ? 1 : 0;
        w *= up ? frac[static_cast<std::size_t>(m)] : 1.0 - frac[static_cast<std::size_t>(m)];
      }
      if (w == 0.0) continue;
      const Christoffel g = node(idx, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) out(i, j, k) += w * g(i, j, k);
    }
    return out;
  }

 private:
  Christoffel node(const NodeKey& idx, int n) const {
    {
      std::lock_guard lock(mu_);
      auto it = nodes_.find(idx);
      if (it != nodes_.end()) return it->second;
    }
    Vec p = anchor_;
    for (int m = 0; m < n; ++m) p(m) += spacing_ * static_cast<double>(idx[static_cast<std::size_t>(m)]);
    const Christoffel g = reconstruct_connection(structure_, Point(p), fd_step_);
    std::lock_guard lock(mu_);
    return nodes_.emplace(idx, g).first->second;
  }

  OdularStructure structure_;
  Vec anchor_;
  double spacing_;
  double fd_step_;
  mutable std::mutex mu_;
  mutable std::map<NodeKey, Christoffel> nodes_;
};

}  // namespace

Connection interpolated_reconstruction(const OdularStructure& structure, const Point& anchor, double spacing,
                                       double fd_step) {
  check_dim(structure.connection(), anchor);
  if (!(spacing > 0.0)) throw PreconditionError("lattice spacing must be positive");
  auto lattice = std::make_shared<const ReconstructionLattice>(structure, anchor.coords, spacing, fd_step);
  const Connection& base = structure.connection();
  return Connection(
      base.name() + "/rebuilt", base.dim(), [lattice](const Vec& x) { return lattice->at(x); }, base.trust_radius(),
      [base](const Vec& x) { return base.contains(x); });
}

ResidualReport verify_connection_reconstruction(const OdularStructure& structure, const std::vector<Point>& points,
                                                const ConnectionCheckOptions& options) {
  ResidualReport report;
  report.suite = "connection-rebuild";
  double worst = 0.0;
  nlohmann::json worst_point;
  for (const auto& p : points) {
    const double err =
        reconstruct_connection(structure, p, options.fd_step).max_abs_diff(eval_gamma(structure.connection(), p));
    if (err >= worst) {
      worst = err;
      worst_point = std::vector<double>(p.coords.data(), p.coords.data() + p.coords.size());
    }
  }
  report.add("connection-rebuild.max-error", "-d2 L(x,a,y)/dx dy at x=y=a equals Gamma(a)", worst, options.tolerance,
             {{"points", points.size()}, {"fd_step", options.fd_step}, {"worst_point", worst_point}});
  return report;
}

ResidualReport verify_structure_reconstruction(const OdularStructure& structure, const Point& a,
                                               const std::vector<StructureSample>& samples,
                                               const StructureCheckOptions& options) {
  const OdularStructure rebuilt(interpolated_reconstruction(structure, a, options.grid_spacing, options.fd_step),
                                structure.settings());
  double d_mul = 0.0, d_scale = 0.0, d_add = 0.0;
  for (const auto& s : samples) {
    d_mul = std::max(d_mul, (structure.multiply(s.x, a, s.y).coords - rebuilt.multiply(s.x, a, s.y).coords).norm());
    d_scale = std::max(d_scale, (structure.scale(s.t, a, s.x).coords - rebuilt.scale(s.t, a, s.x).coords).norm());
    d_add = std::max(d_add, (structure.add(s.x, a, s.y).coords - rebuilt.add(s.x, a, s.y).coords).norm());
  }
  ResidualReport report;
  report.suite = "structure-rebuild";
  const nlohmann::json meta = {
      {"samples", samples.size()}, {"grid_spacing", options.grid_spacing}, {"fd_step", options.fd_step}};
  report.add("structure-rebuild.add", "Lambda of the rebuilt connection equals Lambda", d_add, options.tolerance, meta);
  report.add("structure-rebuild.multiply", "L of the rebuilt connection equals L", d_mul, options.tolerance, meta);
  report.add("structure-rebuild.scale", "omega_t of the rebuilt connection equals omega_t", d_scale,
             options.tolerance, meta);
  return report;
}

}  // namespace geoloop
