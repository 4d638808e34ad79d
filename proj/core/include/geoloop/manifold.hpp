#pragma once

#include <geoloop/types.hpp>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace geoloop {

/// A manifold presented by one chart and its connection coefficients.
///
/// The coefficient field must be deterministic and safe to call concurrently.
/// No (j,k) symmetry is assumed, so connections with torsion are representable.
class Connection {
 public:
  using CoefficientField = std::function<Christoffel(const Vec&)>;
  /// Partial derivatives d_m Gamma for m = 0..dim-1.
  using DerivativeField = std::function<std::array<Christoffel, kMaxDim>(const Vec&)>;
  using DomainTest = std::function<bool(const Vec&)>;

  Connection(std::string name, int dim, CoefficientField gamma, double trust_radius, DomainTest domain = {},
             DerivativeField derivatives = {});

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  double trust_radius() const { return trust_radius_; }

  /// True when x lies in the chart domain and has finite coordinates.
  bool contains(const Vec& x) const;

  /// Unchecked coefficient evaluation for integrator inner loops.
  Christoffel coefficients(const Vec& x) const { return gamma_(x); }

  bool has_analytic_derivatives() const { return static_cast<bool>(derivatives_); }
  std::array<Christoffel, kMaxDim> analytic_derivatives(const Vec& x) const { return derivatives_(x); }

 private:
  std::string name_;
  int dim_;
  CoefficientField gamma_;
  double trust_radius_;
  DomainTest domain_;
  DerivativeField derivatives_;
};

/// Gamma^i_jk(p). Throws EvaluationDomainError on non-finite coefficients.
Christoffel eval_gamma(const Connection& conn, const Point& p);

/// Default central-difference step for coefficient derivatives.
inline constexpr double kGammaDerivativeStep = 1e-4;

/// Curvature at p, R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj.
/// On the unit sphere this gives R(X,Y)Y = X for orthonormal X, Y.
Riemann riemann(const Connection& conn, const Point& p, double fd_step = kGammaDerivativeStep);

/// Same as riemann() on raw coordinates, without the finiteness check on p.
Riemann riemann_at(const Connection& conn, const Vec& x, double fd_step = kGammaDerivativeStep);

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// Closed-form oracles for catalog manifolds that come from a conformally flat metric
/// g = lambda(x)^2 * identity. Only tests and diagnostics use these.
struct ClosedForms {
  std::function<Vec(const Vec& base, const Vec& velocity)> exp;
  std::function<double(const Vec& x, const Vec& y)> distance;
  std::function<double(const Vec& x)> conformal_factor;

  /// Metric inner product at x.
  double inner(const Vec& x, const Vec& u, const Vec& w) const {
    const double lam = conformal_factor(x);
    return lam * lam * u.dot(w);
  }
};

struct CatalogEntry {
  Connection connection;
  std::optional<ClosedForms> closed_forms;
  /// Point around which the trust radius applies.
  Point center;
};

struct CatalogOptions {
  /// Strength of the polynomial perturbation for "poly-perturbed2".
  double epsilon = 0.1;
};

/// Names accepted by catalog(), in a stable order.
std::span<const std::string_view> catalog_names();

/// Throws LookupError for unknown names.
CatalogEntry catalog(std::string_view name, const CatalogOptions& options = {});

}  // namespace geoloop
