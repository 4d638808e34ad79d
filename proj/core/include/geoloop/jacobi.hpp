#pragma once

#include <geoloop/geo.hpp>
#include <geoloop/loops.hpp>
#include <geoloop/manifold.hpp>
#include <geoloop/report.hpp>

#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace geoloop {

/// Solution of D^2X/dt^2 + R(X, Y)Y = 0 along a geodesic with velocity Y, sampled on the
/// geodesic's grid. Stores X and W = DX/dt in chart components.
class JacobiField {
 public:
  explicit JacobiField(int dim, SampledTrajectory samples) : dim_(dim), samples_(std::move(samples)) {}

  int dim() const { return dim_; }
  int sample_count() const { return samples_.size(); }
  double sample_time(int k) const { return samples_.time(k); }
  double step() const { return samples_.step(); }
  double t_end() const { return samples_.t_end(); }

  Vec sample_position(int k) const { return block(k, 0); }
  Vec sample_velocity(int k) const { return block(k, 1); }
  Vec sample_field(int k) const { return block(k, 2); }
  Vec sample_derivative(int k) const { return block(k, 3); }

  /// X(t) by Hermite interpolation.
  Vec field(double t) const;
  /// DX/dt(t) by Hermite interpolation.
  Vec covariant_derivative(double t) const;

 private:
  Vec block(int k, int which) const;

  int dim_;
  SampledTrajectory samples_;
};

/// Integrates the Jacobi equation along `path` as the first-order system
///   X' = W - Gamma(Y, X),  W' = -R(X, Y)Y - Gamma(Y, W)
/// jointly with the geodesic, using the path's RK4 step. X0 = X(0), V0 = DX/dt(0).
JacobiField jacobi_solve(const Connection& conn, const GeodesicPath& path, const Vec& x0, const Vec& v0,
                         double curvature_step = kGammaDerivativeStep);

/// The fields Y(t) and t Y(t) carried by every geodesic.
std::pair<JacobiField, JacobiField> natural_fields(const Connection& conn, const GeodesicPath& path);

/// Per-sample residual of the Jacobi equation, max of |DX/dt - W| and |DW/dt + R(X,Y)Y|,
/// with derivatives of the samples taken by fourth-order stencils.
std::vector<double> jacobi_residuals(const Connection& conn, const JacobiField& field,
                                     double curvature_step = kGammaDerivativeStep);
double jacobi_residual(const Connection& conn, const JacobiField& field, double curvature_step = kGammaDerivativeStep);

// ---------------------------------------------------------------------------
// Geodesic variations
// ---------------------------------------------------------------------------

enum class VariationKind {
  /// alpha(s, t) = Exp_{x(s)} tau^a_{x(s)} (t xi), x(s) = Exp_a(s zeta).
  transported,
  /// beta(s, t) = Exp_a(t xi + s t eta).
  linear,
  /// beta(s, t) = Lambda(x(t), a, y(s, t)), x(t) = Exp_a(t xi), y(s, t) = Exp_a(s t eta).
  linear_via_sum,
};

std::string_view to_string(VariationKind kind);

struct GridSpec {
  double ds = 1e-3;
  double dt = 1e-2;
  double s_max = 5e-3;
};

/// Samples of a two-parameter family on s in [-s_max, s_max], t in [0, 1].
class VariationGrid {
 public:
  VariationGrid(VariationKind kind, int dim, std::vector<double> s, std::vector<double> t, bool with_velocities);

  VariationKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int s_count() const { return static_cast<int>(s_.size()); }
  int t_count() const { return static_cast<int>(t_.size()); }
  double s(int i) const { return s_[static_cast<std::size_t>(i)]; }
  double t(int j) const { return t_[static_cast<std::size_t>(j)]; }
  double ds() const { return s_[1] - s_[0]; }
  double dt() const { return t_[1] - t_[0]; }
  /// Index of the row with s = 0.
  int center_row() const { return s_count() / 2; }

  const Vec& position(int i, int j) const { return positions_[index(i, j)]; }
  void set_position(int i, int j, Vec p) { positions_[index(i, j)] = std::move(p); }
  bool has_velocities() const { return !velocities_.empty(); }
  const Vec& velocity(int i, int j) const { return velocities_[index(i, j)]; }
  void set_velocity(int i, int j, Vec v) { velocities_[index(i, j)] = std::move(v); }

  std::span<const Vec> row(int i) const {
    return {positions_.data() + index(i, 0), static_cast<std::size_t>(t_count())};
  }

  /// d alpha / dt at a node: stored velocity when present, else a five-point stencil along the row.
  Vec t_derivative(int i, int j) const;
  /// Row i at an arbitrary t: Hermite with velocities, else cubic Lagrange.
  Vec row_at(int i, double t) const;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * t_.size() + static_cast<std::size_t>(j); }

  VariationKind kind_;
  int dim_;
  std::vector<double> s_;
  std::vector<double> t_;
  std::vector<Vec> positions_;
  std::vector<Vec> velocities_;
};

VariationGrid variation_alpha(const Connection& conn, const Point& a, const Vec& zeta, const Vec& xi,
                              const GridSpec& grid = {}, const GeoSettings& settings = {});

enum class BetaRoute { direct, via_sum };

VariationGrid variation_beta(const Connection& conn, const Point& a, const Vec& xi, const Vec& eta,
                             const GridSpec& grid = {}, BetaRoute route = BetaRoute::direct,
                             const GeoSettings& settings = {});

/// d alpha / ds at s = 0 by central difference over the neighbouring rows.
Vec infinitesimal_variation(const VariationGrid& grid, double t);

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

struct JacobiVariationOptions {
  GridSpec grid;
  GeoSettings settings;
  double curvature_step = kGammaDerivativeStep;
  double tolerance = 1e-4;
};

/// Compares the s-derivative of the transported variation with the Jacobi field that has
/// the same initial value and covariant derivative (both measured from the grid).
ResidualReport verify_jacobi_variation(const Connection& conn, const Point& a, const Vec& zeta, const Vec& xi,
                                       const JacobiVariationOptions& options = {});

struct TransportedVariationOptions {
  GridSpec grid;
  GeoSettings settings;
  double derivative_tolerance = 1e-5;
  double geodesic_tolerance = 1e-7;
};

/// Along t = 0 the variation field is nonzero with vanishing covariant t-derivative, and
/// every row is a geodesic whose initial velocity is tau^a_{x(s)} xi.
/// Throws PreconditionError when zeta = 0.
ResidualReport verify_transported_variation(const Connection& conn, const Point& a, const Vec& zeta, const Vec& xi,
                                            const TransportedVariationOptions& options = {});

struct GenerationDirections {
  Vec zeta;
  Vec xi;
  Vec eta;
};

struct GenerationOptions {
  GridSpec grid{0.2, 0.1, 1.0};
  GeoSettings settings;
  double radius = 0.3;
  double tolerance = 1e-6;
  double field_tolerance = 1e-9;
  double derivative_tolerance = 1e-5;
};

/// Variations reproduce the odular operations: alpha equals L(x(s), a, y(t)), the linear
/// variation equals Lambda(x(t), a, y(s, t)), rows are affinely parametrized (omega along
/// rows), and the linear variation field starts at zero with covariant derivative eta.
ResidualReport verify_jacobi_generation(const Connection& conn, const Point& a, const GenerationDirections& directions,
                                        const GenerationOptions& options = {});

}  // namespace geoloop
