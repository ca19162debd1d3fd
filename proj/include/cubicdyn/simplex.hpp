#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cubicdyn/error.hpp"

namespace cubicdyn {

inline constexpr double kNegativeClamp = 1e-12;
inline constexpr double kSimplexSumTolerance = 1e-9;

/// Neumaier-compensated sum; mass totals over large grids stay within a few ulps.
inline double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      carry += (sum - t) + v;
    else
      carry += (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

/// A probability vector on {1..m}. Coordinates in [-1e-12, 0) are clamped to
/// zero, anything more negative is rejected, and the sum must be within 1e-9
/// of one before the point is renormalized.
class SimplexPoint {
 public:
  SimplexPoint() = default;

  explicit SimplexPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw InvalidSimplexPoint("simplex point needs m >= 1");
    for (std::size_t i = 0; i < coords_.size(); ++i) {
      double& c = coords_[i];
      if (!std::isfinite(c))
        throw InvalidSimplexPoint("coordinate " + std::to_string(i + 1) + " is not finite");
      if (c < -kNegativeClamp)
        throw InvalidSimplexPoint("coordinate " + std::to_string(i + 1) + " is negative");
      if (c < 0.0) c = 0.0;
    }
    const double sum = compensated_sum(coords_);
    if (std::abs(sum - 1.0) > kSimplexSumTolerance)
      throw InvalidSimplexPoint("coordinates sum to " + std::to_string(sum));
    if (sum != 1.0)
      for (double& c : coords_) c /= sum;
  }

  static SimplexPoint vertex(std::size_t m, std::size_t i) {
    std::vector<double> c(m, 0.0);
    c.at(i) = 1.0;
    return SimplexPoint(std::move(c));
  }

  static SimplexPoint barycenter(std::size_t m) {
    return SimplexPoint(std::vector<double>(m, 1.0 / static_cast<double>(m)));
  }

  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  std::span<const double> coords() const noexcept { return coords_; }
  const std::vector<double>& vector() const noexcept { return coords_; }

  double sup_distance(const SimplexPoint& other) const {
    if (other.dim() != dim()) throw DimensionMismatch(dim(), other.dim());
    double d = 0.0;
    for (std::size_t i = 0; i < dim(); ++i)
      d = std::max(d, std::abs(coords_[i] - other.coords_[i]));
    return d;
  }

  friend bool operator==(const SimplexPoint&, const SimplexPoint&) = default;

 private:
  std::vector<double> coords_;
};

}  // namespace cubicdyn
