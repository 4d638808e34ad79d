#pragma once

#include <geoloop/manifold.hpp>
#include <geoloop/types.hpp>

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace geoloop {

inline constexpr double kDefaultStep = 1e-3;

/// Integrator and shooting parameters shared by every geodesic construction.
struct GeoSettings {
  /// Fixed RK4 step in the geodesic parameter.
  double step = kDefaultStep;
  /// Chart-norm residual at which Newton shooting stops.
  double log_tolerance = 1e-12;
  int log_max_iterations = 50;
  /// Forward-difference step for the shooting Jacobian.
  double log_jacobian_step = 1e-6;
  /// Line-search contraction applied while the residual grows.
  double damping = 0.5;
};

/// Uniformly sampled state with per-sample slopes and cubic Hermite dense output.
class SampledTrajectory {
 public:
  SampledTrajectory() = default;
  SampledTrajectory(double step, int width) : step_(step), width_(width) {}

  void push(std::span<const double> value, std::span<const double> slope);

  int size() const { return width_ == 0 ? 0 : static_cast<int>(values_.size()) / width_; }
  int width() const { return width_; }
  double step() const { return step_; }
  double time(int k) const { return k * step_; }
  double t_end() const { return time(size() - 1); }

  std::span<const double> value(int k) const {
    return {values_.data() + static_cast<std::size_t>(k) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const double> slope(int k) const {
    return {slopes_.data() + static_cast<std::size_t>(k) * width_, static_cast<std::size_t>(width_)};
  }

  /// Writes the interpolated state at t into out. Throws RangeError outside [0, t_end].
  void interpolate(double t, std::span<double> out) const;

 private:
  double step_ = 0.0;
  int width_ = 0;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

/// Dense solution of the geodesic equation together with the parallel-transport
/// frame P(t) that maps components at the start point to components at gamma(t).
class GeodesicPath {
 public:
  GeodesicPath(TangentVector initial, SampledTrajectory samples);

  int dim() const { return initial_.dim(); }
  const TangentVector& initial() const { return initial_; }
  double t_end() const { return samples_.t_end(); }
  double step() const { return samples_.step(); }
  int sample_count() const { return samples_.size(); }
  double sample_time(int k) const { return samples_.time(k); }

  Vec sample_position(int k) const;
  Vec sample_velocity(int k) const;
  Mat sample_frame(int k) const;

  Vec position(double t) const;
  Vec velocity(double t) const;
  Mat frame(double t) const;

  const SampledTrajectory& samples() const { return samples_; }

 private:
  TangentVector initial_;
  SampledTrajectory samples_;
};

/// Endpoint of a geodesic without stored samples.
struct GeodesicEnd {
  Vec position;
  Vec velocity;
  /// Transport frame at the endpoint; empty unless requested.
  Mat frame;
};

/// Integrates x'' = -Gamma(x)(x', x') with fixed-step RK4 and returns the endpoint.
/// The arithmetic matches integrate_geodesic() sample for sample.
GeodesicEnd geodesic_end(const Connection& conn, const TangentVector& init, double t_end, double step, bool with_frame);

/// Full dense path on [0, t_end]. Requires step <= t_end / 10.
/// Throws DomainExitError when the trajectory leaves the chart domain.
GeodesicPath integrate_geodesic(const Connection& conn, const TangentVector& init, double t_end,
                                double step = kDefaultStep);

/// Like integrate_geodesic() but stops at a domain exit instead of throwing.
struct GeodesicTrace {
  GeodesicPath path;
  std::optional<double> exit_time;
};
GeodesicTrace trace_geodesic(const Connection& conn, const TangentVector& init, double t_end,
                             double step = kDefaultStep);

/// Exp_a(X): time-one point of the geodesic with initial data X.
Point exp_map(const Connection& conn, const TangentVector& x, const GeoSettings& settings = {});

/// Exp_a^{-1}(y) by damped Newton shooting on the initial velocity.
/// The initial guess defaults to the chart difference y - a.
TangentVector log_map(const Connection& conn, const Point& a, const Point& y, const GeoSettings& settings = {},
                      const std::optional<Vec>& guess = std::nullopt);

/// Transports v (based at the path start) to gamma(t).
TangentVector parallel_transport(const GeodesicPath& path, const TangentVector& v, double t);

/// Default step for mixed second derivatives of loop operations.
inline constexpr double kMixedDerivativeStep = 1e-3;

using PointPairMap = std::function<Vec(const Vec&, const Vec&)>;

/// Four-point central estimate of d^2 f / dx^j dy^k at (x0, y0), error O(step^2).
Vec fd_second_mixed(const PointPairMap& f, const Vec& x0, const Vec& y0, int j, int k,
                    double step = kMixedDerivativeStep);

/// Sup over samples of |x'' + Gamma(x)(x', x')| with fourth-order stencils on the
/// stored velocities, plus the mismatch between stored velocities and differentiated positions.
double geodesic_residual(const Connection& conn, const GeodesicPath& path);

/// Same residual measured from positions alone, sampled every `spacing` in the parameter.
/// Uses interior samples only; needs at least five.
double sampled_geodesic_residual(const Connection& conn, std::span<const Vec> positions, double spacing);

}  // namespace geoloop
