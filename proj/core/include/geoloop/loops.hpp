#pragma once

#include <geoloop/geo.hpp>
#include <geoloop/manifold.hpp>
#include <geoloop/report.hpp>

#include <vector>

namespace geoloop {

/// The geodesic ternary operations of an affinely connected chart:
///   multiply: L(x, a, y)   = Exp_x tau^a_x Exp_a^{-1} y
///   scale:    w_t(a, z)    = Exp_a(t Exp_a^{-1} z)
///   add:      Lambda(x, a, y) = Exp_a(Exp_a^{-1} x + Exp_a^{-1} y)
/// tau^a_x is parallel transport along the geodesic from a to x.
class OdularStructure {
 public:
  explicit OdularStructure(Connection conn, GeoSettings settings = {});

  const Connection& connection() const { return conn_; }
  const GeoSettings& settings() const { return settings_; }

  Point multiply(const Point& x, const Point& a, const Point& y) const;
  Point scale(double t, const Point& a, const Point& z) const;
  Point add(const Point& x, const Point& a, const Point& y) const;

 private:
  Connection conn_;
  GeoSettings settings_;
};

/// A local loop: the structure restricted to a ball of `radius` around the neutral element.
class LoopContext {
 public:
  LoopContext(OdularStructure structure, Point neutral, double radius);
  LoopContext(const Connection& conn, Point neutral, double radius, const GeoSettings& settings = {});

  const OdularStructure& structure() const { return structure_; }
  const Connection& connection() const { return structure_.connection(); }
  const GeoSettings& settings() const { return structure_.settings(); }
  const Point& neutral() const { return neutral_; }
  double radius() const { return radius_; }

  /// Throws PreconditionError unless |p - neutral| <= radius.
  void require_within(const Point& p, const char* role) const;

 private:
  OdularStructure structure_;
  Point neutral_;
  double radius_;
};

/// x ._a y with a the context neutral.
Point loop_multiply(const LoopContext& ctx, const Point& x, const Point& y);
/// t_a z.
Point loop_scale(const LoopContext& ctx, double t, const Point& z);
/// x +_a y.
Point loop_add(const LoopContext& ctx, const Point& x, const Point& y);

/// y with loop_multiply(ctx, x, y) == z, by Newton iteration from z - x + a.
Point left_divide(const LoopContext& ctx, const Point& x, const Point& z);
/// x with loop_multiply(ctx, x, y) == z, by Newton iteration from z - y + a.
Point right_divide(const LoopContext& ctx, const Point& z, const Point& y);

inline constexpr double kFundamentalFieldStep = 1e-4;

/// Differential at the neutral of y -> x . y; column j is the left basic field A_j(x).
Mat left_fundamental_field(const LoopContext& ctx, const Point& x, double step = kFundamentalFieldStep);
/// Differential at the neutral of x -> x . y; column j is the right basic field B_j(y).
Mat right_fundamental_field(const LoopContext& ctx, const Point& y, double step = kFundamentalFieldStep);

inline constexpr int kLoopExponentialSteps = 16;

struct LoopExponential {
  Point end;
  /// Solution samples at the RK4 nodes t = k / steps, starting with the neutral.
  std::vector<Vec> path;
};

/// Solves f'(t) = A(f(t)) X, f(0) = neutral, on [0, 1] with RK4, A the left fundamental field.
LoopExponential loop_exponential(const LoopContext& ctx, const Vec& x, int steps = kLoopExponentialSteps);

/// Inverse of loop_exponential by Newton shooting.
Vec loop_logarithm(const LoopContext& ctx, const Point& x, int steps = kLoopExponentialSteps);

/// Canonical unary operation built on the loop exponential: Exp(t Exp^{-1} x).
Point canonical_scalar(const LoopContext& ctx, double t, const Point& x, int steps = kLoopExponentialSteps);
/// Canonical sum built on the loop exponential: Exp(Exp^{-1} x + Exp^{-1} y).
Point canonical_sum(const LoopContext& ctx, const Point& x, const Point& y, int steps = kLoopExponentialSteps);

/// Chart distance between (t x) . (u x) and (t + u) x.
double monoassociativity_residual(const LoopContext& ctx, double t, double u, const Point& x);

/// Connection recovered from the loop at a: -d^2 L(x, a, y)^i / dx^j dy^k at x = y = a.
Christoffel reconstruct_connection(const OdularStructure& structure, const Point& a,
                                   double fd_step = kMixedDerivativeStep);

/// Connection whose coefficients are multilinear interpolants of reconstruct_connection()
/// on a lattice of the given spacing anchored at `anchor`. Lattice nodes are evaluated lazily.
Connection interpolated_reconstruction(const OdularStructure& structure, const Point& anchor, double spacing,
                                       double fd_step = kMixedDerivativeStep);

struct ConnectionCheckOptions {
  double fd_step = kMixedDerivativeStep;
  double tolerance = 5e-4;
};

/// Max component error between the reconstructed and the input connection over `points`.
ResidualReport verify_connection_reconstruction(const OdularStructure& structure, const std::vector<Point>& points,
                                                const ConnectionCheckOptions& options = {});

struct StructureSample {
  Point x;
  Point y;
  double t;
};

struct StructureCheckOptions {
  double grid_spacing = 0.05;
  double fd_step = kMixedDerivativeStep;
  double tolerance = 1e-3;
};

/// Rebuilds the structure from the interpolated reconstructed connection and reports the
/// sup chart distance between the two structures' multiply, scale and add over the samples
/// (all with neutral a).
ResidualReport verify_structure_reconstruction(const OdularStructure& structure, const Point& a,
                                               const std::vector<StructureSample>& samples,
                                               const StructureCheckOptions& options = {});

}  // namespace geoloop
