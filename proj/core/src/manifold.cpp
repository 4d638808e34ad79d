#include <geoloop/errors.hpp>
#include <geoloop/manifold.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace geoloop {

bool Christoffel::all_finite() const {
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k)
        if (!std::isfinite((*this)(i, j, k))) return false;
  return true;
}

double Christoffel::max_abs() const {
  double m = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) m = std::max(m, std::abs((*this)(i, j, k)));
  return m;
}

double Christoffel::max_abs_diff(const Christoffel& other) const {
  if (other.dim_ != dim_) throw PreconditionError("Christoffel dimension mismatch");
  double m = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) m = std::max(m, std::abs((*this)(i, j, k) - other(i, j, k)));
  return m;
}

double Riemann::max_abs() const {
  double m = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k)
        for (int l = 0; l < dim_; ++l) m = std::max(m, std::abs((*this)(i, j, k, l)));
  return m;
}

Connection::Connection(std::string name, int dim, CoefficientField gamma, double trust_radius, DomainTest domain,
                       DerivativeField derivatives)
    : name_(std::move(name)),
      dim_(dim),
      gamma_(std::move(gamma)),
      trust_radius_(trust_radius),
      domain_(std::move(domain)),
      derivatives_(std::move(derivatives)) {
  if (dim_ < 1 || dim_ > kMaxDim) throw PreconditionError("connection dimension must be in 1.." + std::to_string(kMaxDim));
  if (!gamma_) throw PreconditionError("connection needs a coefficient field");
  if (!(trust_radius_ > 0.0)) throw PreconditionError("trust radius must be positive");
}

bool Connection::contains(const Vec& x) const {
  if (x.size() != dim_ || !x.allFinite()) return false;
  return !domain_ || domain_(x);
}

Christoffel eval_gamma(const Connection& conn, const Point& p) {
  if (p.dim() != conn.dim()) throw PreconditionError("point dimension does not match connection");
  if (!p.coords.allFinite()) throw EvaluationDomainError("non-finite point coordinates");
  Christoffel g = conn.coefficients(p.coords);
  if (g.dim() != conn.dim() || !g.all_finite())
    throw EvaluationDomainError("connection coefficients of " + conn.name() + " are not finite here");
  return g;
}

namespace {

std::array<Christoffel, kMaxDim> gamma_derivatives(const Connection& conn, const Vec& x, double step) {
  if (conn.has_analytic_derivatives()) return conn.analytic_derivatives(x);
  if (!(step > 0.0) || !std::isfinite(step)) throw NumericsError("finite-difference step must be positive");
  const int n = conn.dim();
  std::array<Christoffel, kMaxDim> d{};
  for (int m = 0; m < n; ++m) {
    Vec xp = x, xm = x;
    xp(m) += step;
    xm(m) -= step;
    const double span = xp(m) - xm(m);
    if (!(span > 0.0)) throw NumericsError("finite-difference step underflows at this point");
    const Christoffel gp = conn.coefficients(xp);
    const Christoffel gm = conn.coefficients(xm);
    if (!gp.all_finite() || !gm.all_finite()) throw NumericsError("non-finite coefficients in curvature stencil");
    Christoffel dm(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) dm(i, j, k) = (gp(i, j, k) - gm(i, j, k)) / span;
    d[m] = dm;
  }
  return d;
}

}  // namespace

Riemann riemann_at(const Connection& conn, const Vec& x, double fd_step) {
  const int n = conn.dim();
  const Christoffel g = conn.coefficients(x);
  const auto dg = gamma_derivatives(conn, x, fd_step);
  Riemann r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double v = dg[k](i, l, j) - dg[l](i, k, j);
          for (int m = 0; m < n; ++m) v += g(i, k, m) * g(m, l, j) - g(i, l, m) * g(m, k, j);
          r(i, j, k, l) = v;
        }
  return r;
}

Riemann riemann(const Connection& conn, const Point& p, double fd_step) {
  eval_gamma(conn, p);
  return riemann_at(conn, p.coords, fd_step);
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

constexpr double kUnboundedRadius = 1e9;

constexpr std::array<std::string_view, 5> kNames = {"flat2", "flat3", "sphere2-stereographic", "hyperbolic-halfplane",
                                                     "poly-perturbed2"};

/// Levi-Civita coefficients of g = exp(2 phi) * identity, given grad phi.
Christoffel conformal_christoffel(const Vec& grad_phi) {
  const int n = static_cast<int>(grad_phi.size());
  Christoffel g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double v = 0.0;
        if (i == j) v += grad_phi(k);
        if (i == k) v += grad_phi(j);
        if (j == k) v -= grad_phi(i);
        g(i, j, k) = v;
      }
  return g;
}

CatalogEntry make_flat(int dim) {
  Connection conn("flat" + std::to_string(dim), dim, [dim](const Vec&) { return Christoffel(dim); },
                  kUnboundedRadius);
  ClosedForms cf;
  cf.exp = [](const Vec& base, const Vec& v) -> Vec { return base + v; };
  cf.distance = [](const Vec& x, const Vec& y) { return (x - y).norm(); };
  cf.conformal_factor = [](const Vec&) { return 1.0; };
  return {std::move(conn), std::move(cf), Point(zero_vec(dim))};
}

// Unit sphere through the stereographic chart x -> (2x, 1 - |x|^2) / (1 + |x|^2).
Eigen::Vector3d sphere_embed(const Vec& x) {
  const double q = 1.0 + x.squaredNorm();
  return {2.0 * x(0) / q, 2.0 * x(1) / q, (1.0 - x.squaredNorm()) / q};
}

Eigen::Vector3d sphere_push(const Vec& x, const Vec& v) {
  const double q = 1.0 + x.squaredNorm();
  const double s = x.dot(v);
  return {2.0 * v(0) / q - 4.0 * x(0) * s / (q * q), 2.0 * v(1) / q - 4.0 * x(1) * s / (q * q), -4.0 * s / (q * q)};
}

Vec sphere_chart(const Eigen::Vector3d& p) {
  Vec x(2);
  x(0) = p(0) / (1.0 + p(2));
  x(1) = p(1) / (1.0 + p(2));
  return x;
}

CatalogEntry make_sphere() {
  Connection conn(
      "sphere2-stereographic", 2,
      [](const Vec& x) {
        const Vec grad = -2.0 * x / (1.0 + x.squaredNorm());
        return conformal_christoffel(grad);
      },
      1.0, [](const Vec& x) { return x.norm() < 100.0; });
  ClosedForms cf;
  cf.exp = [](const Vec& base, const Vec& v) -> Vec {
    const Eigen::Vector3d p = sphere_embed(base);
    const Eigen::Vector3d w = sphere_push(base, v);
    const double len = w.norm();
    if (len == 0.0) return base;
    return sphere_chart(p * std::cos(len) + w * (std::sin(len) / len));
  };
  cf.distance = [](const Vec& x, const Vec& y) {
    const double c = std::clamp(sphere_embed(x).dot(sphere_embed(y)), -1.0, 1.0);
    return std::acos(c);
  };
  cf.conformal_factor = [](const Vec& x) { return 2.0 / (1.0 + x.squaredNorm()); };
  return {std::move(conn), std::move(cf), Point{0.0, 0.0}};
}

// Hyperbolic plane through the hyperboloid model -X0^2 + X1^2 + X2^2 = -1.
double minkowski(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return -a(0) * b(0) + a(1) * b(1) + a(2) * b(2);
}

Eigen::Vector3d halfplane_embed(const Vec& p) {
  const double x = p(0), y = p(1), r2 = x * x + y * y;
  return {(r2 + 1.0) / (2.0 * y), x / y, (r2 - 1.0) / (2.0 * y)};
}

Eigen::Vector3d halfplane_push(const Vec& p, const Vec& v) {
  const double x = p(0), y = p(1);
  const double y2 = y * y;
  return {x / y * v(0) + (y2 - x * x - 1.0) / (2.0 * y2) * v(1), v(0) / y - x / y2 * v(1),
          x / y * v(0) + (y2 - x * x + 1.0) / (2.0 * y2) * v(1)};
}

Vec halfplane_chart(const Eigen::Vector3d& q) {
  const double y = 1.0 / (q(0) - q(2));
  Vec p(2);
  p(0) = q(1) * y;
  p(1) = y;
  return p;
}

CatalogEntry make_halfplane() {
  Connection conn(
      "hyperbolic-halfplane", 2,
      [](const Vec& x) {
        Vec grad(2);
        grad(0) = 0.0;
        grad(1) = -1.0 / x(1);
        return conformal_christoffel(grad);
      },
      0.5, [](const Vec& x) { return x(1) > 0.0; });
  ClosedForms cf;
  cf.exp = [](const Vec& base, const Vec& v) -> Vec {
    const Eigen::Vector3d p = halfplane_embed(base);
    const Eigen::Vector3d w = halfplane_push(base, v);
    const double len = std::sqrt(std::max(0.0, minkowski(w, w)));
    if (len == 0.0) return base;
    return halfplane_chart(p * std::cosh(len) + w * (std::sinh(len) / len));
  };
  cf.distance = [](const Vec& x, const Vec& y) {
    return std::acosh(std::max(1.0, -minkowski(halfplane_embed(x), halfplane_embed(y))));
  };
  cf.conformal_factor = [](const Vec& x) { return 1.0 / x(1); };
  return {std::move(conn), std::move(cf), Point{0.0, 1.0}};
}

CatalogEntry make_poly(double eps) {
  if (!std::isfinite(eps)) throw PreconditionError("perturbation strength must be finite");
  Connection conn(
      "poly-perturbed2", 2,
      [eps](const Vec& x) {
        const double x1 = x(0), x2 = x(1);
        Christoffel g(2);
        g(0, 0, 0) = eps * (1.0 + x2);
        g(0, 0, 1) = g(0, 1, 0) = eps * (0.5 * x1 - 0.3);
        g(0, 1, 1) = eps * (x1 * x2);
        g(1, 0, 0) = eps * (x1 * x1 - 0.4);
        g(1, 0, 1) = g(1, 1, 0) = eps * (0.2 * x2);
        g(1, 1, 1) = eps * (0.7 - 0.5 * x1);
        return g;
      },
      1.0, [](const Vec& x) { return x.norm() < 10.0; });
  return {std::move(conn), std::nullopt, Point{0.0, 0.0}};
}

}  // namespace

std::span<const std::string_view> catalog_names() { return kNames; }

CatalogEntry catalog(std::string_view name, const CatalogOptions& options) {
  if (name == "flat2") return make_flat(2);
  if (name == "flat3") return make_flat(3);
  if (name == "sphere2-stereographic") return make_sphere();
  if (name == "hyperbolic-halfplane") return make_halfplane();
  if (name == "poly-perturbed2") return make_poly(options.epsilon);
  throw LookupError("unknown manifold '" + std::string(name) + "'");
}

}  // namespace geoloop
