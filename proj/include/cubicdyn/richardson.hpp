#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cubicdyn {

struct LimitEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = false;
  std::vector<double> samples;  // g(Delta_k) in the order supplied
  std::string note;
};

inline constexpr double kLimitNoiseFloor = 1e-10;
inline constexpr double kGrowthRatio = 1.0;
inline constexpr double kSettledRelative = 1e-6;

/// Extrapolates g(Delta) to Delta -> 0 with Neville's scheme on a
/// polynomial in Delta. `deltas` must be strictly decreasing and positive.
/// The sequence counts as convergent if its last increment is below a
/// relative noise floor, if the extrapolant has settled to kSettledRelative,
/// or if the raw increments are not growing. A c/Delta blow-up grows them
/// by 1/ratio of successive deltas.
inline LimitEstimate richardson_limit(std::span<const double> deltas,
                                      std::span<const double> values) {
  if (deltas.size() != values.size() || deltas.size() < 2)
    throw std::invalid_argument("richardson_limit: need >= 2 matching samples");
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] > 0.0)) throw std::invalid_argument("richardson_limit: deltas must be > 0");
    if (k > 0 && !(deltas[k] < deltas[k - 1]))
      throw std::invalid_argument("richardson_limit: deltas must decrease");
  }
  LimitEstimate est;
  est.samples.assign(values.begin(), values.end());
  const std::size_t n = values.size();

  for (double v : values)
    if (!std::isfinite(v)) {
      est.value = NAN;
      est.error_estimate = INFINITY;
      est.note = "non-finite sample";
      return est;
    }

  std::vector<double> table(values.begin(), values.end());
  std::vector<double> prev_diag;
  double best = table[n - 1], second = n > 1 ? table[n - 2] : table[n - 1];
  // table[k] holds T[k][j] after round j
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t k = n - 1; k >= j; --k) {
      const double factor = deltas[k] / (deltas[k - j] - deltas[k]);
      table[k] = table[k] + (table[k] - table[k - 1]) * factor;
      if (k == j) break;
    }
    second = best;
    best = table[n - 1];
  }
  est.value = best;
  est.error_estimate = std::abs(best - second);

  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double floor = kLimitNoiseFloor * (1.0 + scale);
  const double last = std::abs(values[n - 1] - values[n - 2]);
  if (last <= floor || est.error_estimate <= kSettledRelative * (1.0 + std::abs(best))) {
    est.converged = true;
    return est;
  }
  if (n >= 3) {
    const double before = std::abs(values[n - 2] - values[n - 3]);
    if (last < kGrowthRatio * before) {
      est.converged = true;
      return est;
    }
    est.note = "difference quotients do not settle as Delta -> 0 (increment ratio " +
               std::to_string(before > 0.0 ? last / before : INFINITY) + ")";
  } else {
    est.note = "too few samples to establish convergence";
  }
  return est;
}

}  // namespace cubicdyn
