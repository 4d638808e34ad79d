#pragma once

#include <geoloop/types.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace geoloop {

/// Seeded uniform sampling in the chart ball |x - center| < radius.
class BallSampler {
 public:
  explicit BallSampler(std::uint64_t seed) : rng_(seed) {}

  Vec point(const Vec& center, double radius);
  std::vector<Vec> points(const Vec& center, double radius, int count);
  /// Uniform direction scaled to the given chart length.
  Vec direction(int dim, double length);
  double uniform(double lo, double hi);

 private:
  std::mt19937_64 rng_;
};

}  // namespace geoloop
