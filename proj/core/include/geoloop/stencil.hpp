#pragma once

#include <geoloop/errors.hpp>
#include <geoloop/types.hpp>

#include <array>

namespace geoloop {

/// First derivative of uniformly spaced samples at index k, fourth order.
/// Uses the centered five-point window in the interior and shifted windows near the ends.
/// `sample(i)` must return the i-th sample as a Vec.
template <class Sample>
Vec derivative5(const Sample& sample, int count, int k, double spacing) {
  if (count < 5) throw NumericsError("five-point derivative needs at least five samples");
  if (k < 0 || k >= count) throw RangeError("stencil index outside the sample range");
  // Weights (times 12) for the five points starting at `first`, evaluated at offset k - first.
  static constexpr std::array<std::array<double, 5>, 5> kWeights = {{
      {-25.0, 48.0, -36.0, 16.0, -3.0},
      {-3.0, -10.0, 18.0, -6.0, 1.0},
      {1.0, -8.0, 0.0, 8.0, -1.0},
      {-1.0, 6.0, -18.0, 10.0, 3.0},
      {3.0, -16.0, 36.0, -48.0, 25.0},
  }};
  int first = k - 2;
  if (first < 0) first = 0;
  if (first > count - 5) first = count - 5;
  const auto& w = kWeights[static_cast<std::size_t>(k - first)];
  Vec d = w[0] * sample(first);
  for (int m = 1; m < 5; ++m) d += w[static_cast<std::size_t>(m)] * sample(first + m);
  return d / (12.0 * spacing);
}

/// Centered fourth-order second derivative; requires 2 <= k <= count - 3.
template <class Sample>
Vec second_derivative5(const Sample& sample, int count, int k, double spacing) {
  if (k < 2 || k > count - 3) throw RangeError("centered second-derivative stencil needs two neighbours each side");
  const Vec d = -sample(k - 2) + 16.0 * sample(k - 1) - 30.0 * sample(k) + 16.0 * sample(k + 1) - sample(k + 2);
  return d / (12.0 * spacing * spacing);
}

}  // namespace geoloop
