#include <geoloop/sampling.hpp>

#include <cmath>

namespace geoloop {

Vec BallSampler::direction(int dim, double length) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = normal(rng_);
  } while (v.norm() < 1e-12);
  return v * (length / v.norm());
}

Vec BallSampler::point(const Vec& center, double radius) {
  const int n = static_cast<int>(center.size());
  const double r = radius * std::pow(uniform(0.0, 1.0), 1.0 / n);
  return center + direction(n, r);
}

std::vector<Vec> BallSampler::points(const Vec& center, double radius, int count) {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(point(center, radius));
  return out;
}

double BallSampler::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

}  // namespace geoloop
