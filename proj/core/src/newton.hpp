#pragma once

#include <geoloop/errors.hpp>
#include <geoloop/geo.hpp>

#include <Eigen/LU>

namespace geoloop::detail {

/// Damped Newton iteration on residual(v) = 0 with a forward-difference Jacobian.
/// The step is halved (by settings.damping) while the residual norm grows. The Jacobian is
/// kept while full steps shrink the residual at least tenfold, and rebuilt otherwise.
template <class Residual>
Vec newton_solve(const Residual& residual, Vec v, const GeoSettings& settings, const char* what) {
  const int n = static_cast<int>(v.size());
  Vec r = residual(v);
  double res = r.norm();
  int it = 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu;
  bool fresh = false;
  for (; it < settings.log_max_iterations && !(res < settings.log_tolerance); ++it) {
    if (!fresh) {
      Mat jac(n, n);
      for (int j = 0; j < n; ++j) {
        Vec vj = v;
        vj(j) += settings.log_jacobian_step;
        jac.col(j) = (residual(vj) - r) / settings.log_jacobian_step;
      }
      lu.compute(jac);
      fresh = true;
    }
    const Vec delta = lu.solve(Eigen::VectorXd(-r));
    if (!delta.allFinite()) break;
    const double before = res;

    double lambda = 1.0;
    for (;;) {
      const Vec trial = v + lambda * delta;
      try {
        const Vec rt = residual(trial);
        const double trial_res = rt.norm();
        if (trial_res < res || lambda < 1e-6) {
          v = trial;
          r = rt;
          res = trial_res;
          break;
        }
      } catch (const DomainExitError&) {
        if (lambda < 1e-6) throw;
      }
      lambda *= settings.damping;
    }
    if (lambda < 1.0 || res > 0.1 * before) fresh = false;
  }
  if (!(res < settings.log_tolerance)) throw NoConvergenceError(what, res, it);
  return v;
}

}  // namespace geoloop::detail
