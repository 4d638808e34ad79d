#include "oracle.hpp"

#include <geoloop/types.hpp>

#include <stdexcept>

namespace oracle {

namespace {

geoloop::Vec to_lib(const VectorXd& v) { return geoloop::Vec(v); }

/// Gamma^i_jk u^j w^k from raw coefficients.
VectorXd quad(const geoloop::Christoffel& g, const VectorXd& u, const VectorXd& w) {
  const auto n = u.size();
  VectorXd out = VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k)
        out(i) += g(static_cast<int>(i), static_cast<int>(j), static_cast<int>(k)) * u(j) * w(k);
  return out;
}

struct State {
  VectorXd x, v;
  MatrixXd p;
};

State deriv(const geoloop::Connection& conn, const State& s) {
  const geoloop::Christoffel g = conn.coefficients(to_lib(s.x));
  State d{s.v, -quad(g, s.v, s.v), MatrixXd(s.p.rows(), s.p.cols())};
  for (Eigen::Index c = 0; c < s.p.cols(); ++c) d.p.col(c) = -quad(g, s.v, s.p.col(c));
  return d;
}

State axpy(const State& s, double h, const State& d) { return {s.x + h * d.x, s.v + h * d.v, s.p + h * d.p}; }

}  // namespace

End shoot(const geoloop::Connection& conn, const VectorXd& a, const VectorXd& v, int steps) {
  const double h = 1.0 / steps;
  State s{a, v, MatrixXd::Identity(a.size(), a.size())};
  for (int i = 0; i < steps; ++i) {
    const State k1 = deriv(conn, s);
    const State k2 = deriv(conn, axpy(s, h / 2, k1));
    const State k3 = deriv(conn, axpy(s, h / 2, k2));
    const State k4 = deriv(conn, axpy(s, h, k3));
    s.x += h / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    s.v += h / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    s.p += h / 6 * (k1.p + 2 * k2.p + 2 * k3.p + k4.p);
  }
  return {s.x, s.v, s.p};
}

VectorXd exp(const geoloop::Connection& conn, const VectorXd& a, const VectorXd& v, int steps) {
  return shoot(conn, a, v, steps).x;
}

VectorXd log(const geoloop::Connection& conn, const VectorXd& a, const VectorXd& y, int steps) {
  VectorXd v = y - a;
  const double eps = 1e-6;
  for (int it = 0; it < 30; ++it) {
    const VectorXd r = exp(conn, a, v, steps) - y;
    if (r.norm() < 1e-13) return v;
    MatrixXd jac(a.size(), a.size());
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      VectorXd vp = v, vm = v;
      vp(j) += eps;
      vm(j) -= eps;
      jac.col(j) = (exp(conn, a, vp, steps) - exp(conn, a, vm, steps)) / (2 * eps);
    }
    v -= jac.partialPivLu().solve(r);
  }
  throw std::runtime_error("oracle shooting did not converge");
}

VectorXd multiply(const geoloop::Connection& conn, const VectorXd& x, const VectorXd& a, const VectorXd& y,
                  int steps) {
  const MatrixXd p = shoot(conn, a, log(conn, a, x, steps), steps).frame;
  return exp(conn, x, p * log(conn, a, y, steps), steps);
}

VectorXd add(const geoloop::Connection& conn, const VectorXd& x, const VectorXd& a, const VectorXd& y, int steps) {
  return exp(conn, a, log(conn, a, x, steps) + log(conn, a, y, steps), steps);
}

MatrixXd left_field(const geoloop::Connection& conn, const VectorXd& x, const VectorXd& a, double step) {
  const auto n = a.size();
  MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    VectorXd yp = a, ym = a;
    yp(j) += step;
    ym(j) -= step;
    m.col(j) = (multiply(conn, x, a, yp) - multiply(conn, x, a, ym)) / (2 * step);
  }
  return m;
}

double sectional(const geoloop::CatalogEntry& entry, const VectorXd& x, const VectorXd& u, const VectorXd& w) {
  const auto& forms = *entry.closed_forms;
  const geoloop::Riemann r = geoloop::riemann(entry.connection, geoloop::Point(to_lib(x)));
  const geoloop::Vec rw = r.apply(to_lib(u), to_lib(w), to_lib(w));
  const geoloop::Vec lx = to_lib(x), lu = to_lib(u), lw = to_lib(w);
  const double uu = forms.inner(lx, lu, lu), ww = forms.inner(lx, lw, lw), uw = forms.inner(lx, lu, lw);
  return forms.inner(lx, rw, lu) / (uu * ww - uw * uw);
}

}  // namespace oracle
