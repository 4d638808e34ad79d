#pragma once

#include <Eigen/Core>

#include <array>
#include <initializer_list>

namespace geoloop {

/// Charts are at most three-dimensional; vectors and matrices use inline storage.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Vec zero_vec(int dim) { return Vec::Zero(dim); }

/// A point of the chart.
struct Point {
  Vec coords;

  Point() = default;
  explicit Point(Vec c) : coords(std::move(c)) {}
  Point(std::initializer_list<double> values) : coords(make_vec(values)) {}

  int dim() const { return static_cast<int>(coords.size()); }
};

/// Chart components of a vector attached to a base point.
struct TangentVector {
  Point base;
  Vec components;

  int dim() const { return base.dim(); }
};

/// Connection coefficients Gamma^i_jk at one point. The first lower index is the
/// differentiation direction: (nabla_u w)^i = u^j d_j w^i + Gamma^i_jk u^j w^k.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(int dim) : dim_(dim) {}

  int dim() const { return dim_; }

  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  /// Gamma^i_jk u^j w^k.
  Vec contract(const Vec& u, const Vec& w) const {
    Vec out = Vec::Zero(dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k) out(i) += (*this)(i, j, k) * u(j) * w(k);
    return out;
  }

  /// M^i_k = Gamma^i_jk u^j, so that contract(u, w) == M * w.
  Mat along(const Vec& u) const {
    Mat m = Mat::Zero(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k) m(i, k) += (*this)(i, j, k) * u(j);
    return m;
  }

  bool all_finite() const;
  double max_abs() const;
  double max_abs_diff(const Christoffel& other) const;

 private:
  static int index(int i, int j, int k) { return (i * kMaxDim + j) * kMaxDim + k; }

  int dim_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

/// Curvature components R^i_jkl with (R(X,Y)Z)^i = R^i_jkl Z^j X^k Y^l.
class Riemann {
 public:
  Riemann() = default;
  explicit Riemann(int dim) : dim_(dim) {}

  int dim() const { return dim_; }

  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }

  /// R(X,Y)Z.
  Vec apply(const Vec& x, const Vec& y, const Vec& z) const {
    Vec out = Vec::Zero(dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k)
          for (int l = 0; l < dim_; ++l) out(i) += (*this)(i, j, k, l) * z(j) * x(k) * y(l);
    return out;
  }

  double max_abs() const;

 private:
  static int index(int i, int j, int k, int l) { return ((i * kMaxDim + j) * kMaxDim + k) * kMaxDim + l; }

  int dim_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> data_{};
};

}  // namespace geoloop
