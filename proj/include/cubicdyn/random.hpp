#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace cubicdyn {

/// Uniform [0,1) from the top 53 bits, identical on every standard library.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform point on the simplex (normalised exponential spacings).
inline std::vector<double> random_simplex_coords(std::size_t m, std::mt19937_64& rng) {
  std::vector<double> x(m);
  double sum = 0.0;
  for (auto& v : x) {
    v = -std::log1p(-uniform01(rng));
    sum += v;
  }
  for (auto& v : x) v /= sum;
  return x;
}

}  // namespace cubicdyn
