#include <geoloop/errors.hpp>
#include <geoloop/geo.hpp>
#include <geoloop/stencil.hpp>

#include "newton.hpp"

#include <algorithm>
#include <cmath>

namespace geoloop {

// ---------------------------------------------------------------------------
// SampledTrajectory
// ---------------------------------------------------------------------------

void SampledTrajectory::push(std::span<const double> value, std::span<const double> slope) {
  values_.insert(values_.end(), value.begin(), value.end());
  slopes_.insert(slopes_.end(), slope.begin(), slope.end());
}

void SampledTrajectory::interpolate(double t, std::span<double> out) const {
  const int n = size();
  if (n < 2) throw RangeError("trajectory has fewer than two samples");
  const double span = t_end();
  const double slack = 1e-12 * std::max(1.0, span);
  if (!(t >= -slack && t <= span + slack)) throw RangeError("parameter " + std::to_string(t) + " outside [0, " +
                                                            std::to_string(span) + "]");
  t = std::clamp(t, 0.0, span);
  int k = static_cast<int>(std::floor(t / step_));
  k = std::clamp(k, 0, n - 2);
  const double u = (t - time(k)) / step_;
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  const auto y0 = value(k), y1 = value(k + 1), m0 = slope(k), m1 = slope(k + 1);
  for (int i = 0; i < width_; ++i)
    out[static_cast<std::size_t>(i)] = h00 * y0[i] + h10 * step_ * m0[i] + h01 * y1[i] + h11 * step_ * m1[i];
}

// ---------------------------------------------------------------------------
// Geodesic + frame integration
// ---------------------------------------------------------------------------

namespace {

struct GeoState {
  Vec x;
  Vec v;
  Mat frame;  // empty when not tracked

  friend GeoState operator+(const GeoState& a, const GeoState& b) { return {a.x + b.x, a.v + b.v, a.frame + b.frame}; }
  friend GeoState operator*(double s, const GeoState& a) { return {s * a.x, s * a.v, s * a.frame}; }
};

GeoState geodesic_rhs(const Connection& conn, double t, const GeoState& s) {
  const Christoffel g = conn.coefficients(s.x);
  if (!g.all_finite()) throw DomainExitError(t);
  const Mat m = g.along(s.v);
  return {s.v, -(m * s.v), -(m * s.frame)};
}

int step_count(double t_end, double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw PreconditionError("integration step must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw PreconditionError("integration end must be non-negative");
  return std::max(1, static_cast<int>(std::ceil(t_end / step - 1e-9)));
}

void check_init(const Connection& conn, const TangentVector& init) {
  if (init.base.dim() != conn.dim() || init.components.size() != conn.dim())
    throw PreconditionError("tangent vector dimension does not match connection");
  if (!init.components.allFinite()) throw PreconditionError("non-finite tangent components");
  if (!conn.contains(init.base.coords)) throw DomainExitError(0.0);
}

GeoState initial_state(const TangentVector& init, bool with_frame) {
  const int n = init.dim();
  return {init.base.coords, init.components, with_frame ? Mat(Mat::Identity(n, n)) : Mat(0, 0)};
}

/// Kahan-compensated y += inc. Endpoints of long fixed-step runs are differenced with small
/// steps downstream (shooting Jacobians, mixed derivatives), so accumulated rounding matters.
template <class M>
void compensated_add(M& y, M& carry, const M& inc) {
  const M corrected = inc - carry;
  const M sum = y + corrected;
  carry = (sum - y) - corrected;
  y = sum;
}

/// Advances y by one RK4 step; k1 is supplied by the caller so sample slopes are reused.
void rk4_step(const Connection& conn, double t, GeoState& y, GeoState& carry, const GeoState& k1, double h) {
  const GeoState k2 = geodesic_rhs(conn, t + 0.5 * h, y + (0.5 * h) * k1);
  const GeoState k3 = geodesic_rhs(conn, t + 0.5 * h, y + (0.5 * h) * k2);
  const GeoState k4 = geodesic_rhs(conn, t + h, y + h * k3);
  const GeoState inc = (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  compensated_add(y.x, carry.x, inc.x);
  compensated_add(y.v, carry.v, inc.v);
  compensated_add(y.frame, carry.frame, inc.frame);
}

GeoState zero_like(const GeoState& s) {
  return {Vec::Zero(s.x.size()), Vec::Zero(s.v.size()), Mat::Zero(s.frame.rows(), s.frame.cols())};
}

void pack(const GeoState& s, std::vector<double>& out) {
  out.clear();
  out.insert(out.end(), s.x.data(), s.x.data() + s.x.size());
  out.insert(out.end(), s.v.data(), s.v.data() + s.v.size());
  out.insert(out.end(), s.frame.data(), s.frame.data() + s.frame.size());
}

GeodesicTrace run_trace(const Connection& conn, const TangentVector& init, double t_end, double step) {
  check_init(conn, init);
  const int steps = step_count(t_end, step);
  if (t_end > 0.0 && step > t_end / 10.0 * (1.0 + 1e-12))
    throw PreconditionError("integration step must not exceed a tenth of the interval");
  const double h = t_end / steps;
  const int n = conn.dim();
  SampledTrajectory traj(h, 2 * n + n * n);

  GeoState y = initial_state(init, true);
  GeoState carry = zero_like(y);
  GeoState k1 = geodesic_rhs(conn, 0.0, y);
  std::vector<double> value, slope;
  pack(y, value);
  pack(k1, slope);
  traj.push(value, slope);

  std::optional<double> exit_time;
  for (int s = 0; s < steps; ++s) {
    const double t = s * h;
    try {
      rk4_step(conn, t, y, carry, k1, h);
      if (!conn.contains(y.x)) throw DomainExitError((s + 1) * h);
      k1 = geodesic_rhs(conn, (s + 1) * h, y);
    } catch (const DomainExitError& e) {
      exit_time = e.exit_time();
      break;
    }
    pack(y, value);
    pack(k1, slope);
    traj.push(value, slope);
  }
  if (traj.size() < 2) {
    // Exit inside the first step: keep a degenerate two-sample path so the trace stays queryable.
    const std::vector<double> v0(traj.value(0).begin(), traj.value(0).end());
    const std::vector<double> s0(traj.slope(0).begin(), traj.slope(0).end());
    traj.push(v0, s0);
  }
  return {GeodesicPath(init, std::move(traj)), exit_time};
}

}  // namespace

GeodesicPath::GeodesicPath(TangentVector initial, SampledTrajectory samples)
    : initial_(std::move(initial)), samples_(std::move(samples)) {}

Vec GeodesicPath::sample_position(int k) const {
  const auto v = samples_.value(k);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), dim());
}

Vec GeodesicPath::sample_velocity(int k) const {
  const auto v = samples_.value(k);
  return Eigen::Map<const Eigen::VectorXd>(v.data() + dim(), dim());
}

Mat GeodesicPath::sample_frame(int k) const {
  const auto v = samples_.value(k);
  return Eigen::Map<const Eigen::MatrixXd>(v.data() + 2 * dim(), dim(), dim());
}

Vec GeodesicPath::position(double t) const {
  std::array<double, 2 * kMaxDim + kMaxDim * kMaxDim> buf{};
  samples_.interpolate(t, std::span<double>(buf.data(), static_cast<std::size_t>(samples_.width())));
  return Eigen::Map<const Eigen::VectorXd>(buf.data(), dim());
}

Vec GeodesicPath::velocity(double t) const {
  std::array<double, 2 * kMaxDim + kMaxDim * kMaxDim> buf{};
  samples_.interpolate(t, std::span<double>(buf.data(), static_cast<std::size_t>(samples_.width())));
  return Eigen::Map<const Eigen::VectorXd>(buf.data() + dim(), dim());
}

Mat GeodesicPath::frame(double t) const {
  std::array<double, 2 * kMaxDim + kMaxDim * kMaxDim> buf{};
  samples_.interpolate(t, std::span<double>(buf.data(), static_cast<std::size_t>(samples_.width())));
  return Eigen::Map<const Eigen::MatrixXd>(buf.data() + 2 * dim(), dim(), dim());
}

GeodesicEnd geodesic_end(const Connection& conn, const TangentVector& init, double t_end, double step,
                         bool with_frame) {
  check_init(conn, init);
  const int steps = step_count(t_end, step);
  const double h = t_end / steps;
  GeoState y = initial_state(init, with_frame);
  GeoState carry = zero_like(y);
  GeoState k1 = geodesic_rhs(conn, 0.0, y);
  for (int s = 0; s < steps; ++s) {
    rk4_step(conn, s * h, y, carry, k1, h);
    if (!conn.contains(y.x)) throw DomainExitError((s + 1) * h);
    if (s + 1 < steps) k1 = geodesic_rhs(conn, (s + 1) * h, y);
  }
  return {y.x, y.v, y.frame};
}

GeodesicPath integrate_geodesic(const Connection& conn, const TangentVector& init, double t_end, double step) {
  GeodesicTrace trace = run_trace(conn, init, t_end, step);
  if (trace.exit_time) throw DomainExitError(*trace.exit_time);
  return std::move(trace.path);
}

GeodesicTrace trace_geodesic(const Connection& conn, const TangentVector& init, double t_end, double step) {
  return run_trace(conn, init, t_end, step);
}

Point exp_map(const Connection& conn, const TangentVector& x, const GeoSettings& settings) {
  if (x.components.size() == x.base.dim() && x.components.allFinite() && x.components.isZero(0.0)) {
    check_init(conn, x);
    return x.base;
  }
  return Point(geodesic_end(conn, x, 1.0, settings.step, false).position);
}

TangentVector log_map(const Connection& conn, const Point& a, const Point& y, const GeoSettings& settings,
                      const std::optional<Vec>& guess) {
  if (a.dim() != conn.dim() || y.dim() != conn.dim()) throw PreconditionError("point dimension does not match");
  if (!conn.contains(y.coords)) throw PreconditionError("target point outside the chart domain");
  auto residual = [&](const Vec& v) -> Vec { return exp_map(conn, TangentVector{a, v}, settings).coords - y.coords; };
  Vec v = detail::newton_solve(residual, guess ? *guess : Vec(y.coords - a.coords), settings,
                               "logarithm shooting did not converge");
  return {a, std::move(v)};
}

TangentVector parallel_transport(const GeodesicPath& path, const TangentVector& v, double t) {
  const Vec& start = path.initial().base.coords;
  if (v.base.dim() != path.dim() || v.components.size() != path.dim())
    throw PreconditionError("vector dimension does not match the path");
  if ((v.base.coords - start).norm() > 1e-12 * (1.0 + start.norm()))
    throw PreconditionError("vector must be based at the path start");
  if (!(t >= 0.0 && t <= path.t_end() * (1.0 + 1e-12))) throw RangeError("transport parameter outside the path span");
  return {Point(path.position(t)), path.frame(t) * v.components};
}

Vec fd_second_mixed(const PointPairMap& f, const Vec& x0, const Vec& y0, int j, int k, double step) {
  if (!(step > 0.0)) throw PreconditionError("finite-difference step must be positive");
  if (j < 0 || j >= x0.size() || k < 0 || k >= y0.size()) throw PreconditionError("derivative index out of range");
  Vec xp = x0, xm = x0, yp = y0, ym = y0;
  xp(j) += step;
  xm(j) -= step;
  yp(k) += step;
  ym(k) -= step;
  const Vec fpp = f(xp, yp), fpm = f(xp, ym), fmp = f(xm, yp), fmm = f(xm, ym);
  if (!fpp.allFinite() || !fpm.allFinite() || !fmp.allFinite() || !fmm.allFinite())
    throw NumericsError("non-finite sample in mixed-derivative stencil");
  return (fpp - fpm - fmp + fmm) / (4.0 * step * step);
}

double geodesic_residual(const Connection& conn, const GeodesicPath& path) {
  const int count = path.sample_count();
  const double h = path.step();
  auto pos = [&](int i) { return path.sample_position(i); };
  auto vel = [&](int i) { return path.sample_velocity(i); };
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const Vec x = pos(k), v = vel(k);
    const Vec acc = derivative5(vel, count, k, h);
    const Vec eq = acc + conn.coefficients(x).contract(v, v);
    const Vec consistency = derivative5(pos, count, k, h) - v;
    worst = std::max({worst, eq.lpNorm<Eigen::Infinity>(), consistency.lpNorm<Eigen::Infinity>()});
  }
  return worst;
}

double sampled_geodesic_residual(const Connection& conn, std::span<const Vec> positions, double spacing) {
  const int count = static_cast<int>(positions.size());
  if (count < 5) throw NumericsError("geodesic residual needs at least five samples");
  auto pos = [&](int i) { return positions[static_cast<std::size_t>(i)]; };
  double worst = 0.0;
  for (int k = 2; k <= count - 3; ++k) {
    const Vec v = derivative5(pos, count, k, spacing);
    const Vec acc = second_derivative5(pos, count, k, spacing);
    const Vec eq = acc + conn.coefficients(pos(k)).contract(v, v);
    worst = std::max(worst, eq.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace geoloop
