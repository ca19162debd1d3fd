#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cubicdyn/cso.hpp"
#include "cubicdyn/partition.hpp"
#include "cubicdyn/tensor.hpp"

namespace cubicdyn {

/// Density of the kernel w.r.t. mu at a point of cell l, for arguments in
/// cells i, j, k:  <ijk,l> mu(Omega_l) / (mu(Omega_i) + mu(Omega_j) + mu(Omega_k)).
inline double raw_coefficient(const PartitionMeasure& pm, std::size_t i, std::size_t j,
                              std::size_t k, std::size_t l) {
  const int hits = int(i == l) + int(j == l) + int(k == l);
  if (hits == 0) return 0.0;
  return hits * pm.cell_mass(l) / (pm.cell_mass(i) + pm.cell_mass(j) + pm.cell_mass(k));
}

/// P(s1,s2,s3,A) for s1, s2, s3 in cells i, j, k, given the cell masses mu(Omega)
/// and the intersections mu(A ∩ Omega). The case split is taken on the sorted
/// multiset {i,j,k}, so every ordering evaluates the identical expression.
inline double kernel_from_masses(std::span<const double> cell, std::span<const double> inter,
                                 std::size_t i, std::size_t j, std::size_t k) {
  std::array<std::size_t, 3> c{i, j, k};
  std::sort(c.begin(), c.end());
  if (c[0] == c[2]) return inter[c[0]] / cell[c[0]];
  if (c[0] != c[1] && c[1] != c[2]) {
    const double num =
        cell[c[0]] * inter[c[0]] + cell[c[1]] * inter[c[1]] + cell[c[2]] * inter[c[2]];
    const double den = cell[c[0]] * cell[c[0]] + cell[c[1]] * cell[c[1]] + cell[c[2]] * cell[c[2]];
    return num / den;
  }
  // two of the three coincide
  const std::size_t twice = c[0] == c[1] ? c[0] : c[1];
  const std::size_t once = c[0] == c[1] ? c[2] : c[0];
  const double num = 2.0 * cell[twice] * inter[twice] + cell[once] * inter[once];
  const double den = 2.0 * cell[twice] * cell[twice] + cell[once] * cell[once];
  return num / den;
}

inline double kernel_measure(const PartitionMeasure& pm, std::size_t i, std::size_t j,
                             std::size_t k, const MeasurableSet& a) {
  const auto inter = pm.intersect_masses(a);
  return kernel_from_masses(pm.cell_masses(), inter, i, j, k);
}

/// a_i(A), b_ij(A) (i != j) and c_ijk(A) (i < j < k).
struct CubicCoefficients {
  std::size_t m = 0;
  std::vector<double> a;  // a[i]
  std::vector<double> b;  // b[i*m + j]
  std::vector<double> c;  // c[(i*m + j)*m + k], only i<j<k populated

  double b_at(std::size_t i, std::size_t j) const { return b[i * m + j]; }
  double c_at(std::size_t i, std::size_t j, std::size_t k) const { return c[(i * m + j) * m + k]; }

  /// sum a_i l_i^3 + 3 sum_{i!=j} b_ij l_i^2 l_j + 6 sum_{i<j<k} c_ijk l_i l_j l_k
  double evaluate(std::span<const double> lam) const {
    if (lam.size() != m) throw DimensionMismatch(m, lam.size());
    double cubic = 0.0, mixed = 0.0, distinct = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      cubic += a[i] * lam[i] * lam[i] * lam[i];
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) mixed += b[i * m + j] * lam[i] * lam[i] * lam[j];
      for (std::size_t j = i + 1; j < m; ++j)
        for (std::size_t k = j + 1; k < m; ++k)
          distinct += c[(i * m + j) * m + k] * lam[i] * lam[j] * lam[k];
    }
    return cubic + 3.0 * mixed + 6.0 * distinct;
  }
};

inline CubicCoefficients coefficients_from_masses(std::span<const double> cell,
                                                  std::span<const double> inter) {
  const std::size_t m = cell.size();
  CubicCoefficients co;
  co.m = m;
  co.a.assign(m, 0.0);
  co.b.assign(m * m, 0.0);
  co.c.assign(m * m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    co.a[i] = inter[i] / cell[i];
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      co.b[i * m + j] = (2.0 * cell[i] * inter[i] + cell[j] * inter[j]) /
                        (2.0 * cell[i] * cell[i] + cell[j] * cell[j]);
    }
    for (std::size_t j = i + 1; j < m; ++j)
      for (std::size_t k = j + 1; k < m; ++k)
        co.c[(i * m + j) * m + k] =
            (cell[i] * inter[i] + cell[j] * inter[j] + cell[k] * inter[k]) /
            (cell[i] * cell[i] + cell[j] * cell[j] + cell[k] * cell[k]);
  }
  return co;
}

inline CubicCoefficients coefficients_abc(const PartitionMeasure& pm, const MeasurableSet& a) {
  const auto inter = pm.intersect_masses(a);
  return coefficients_from_masses(pm.cell_masses(), inter);
}

/// lambda'(A) for the measure-level CSO built on `pm`.
inline double apply_measure_cso(const PartitionMeasure& pm, const StateMeasure& lambda,
                                const MeasurableSet& a) {
  return coefficients_abc(pm, a).evaluate(lambda.cell_masses(pm));
}

/// One step of the measure-level CSO at atom resolution: lambda'({p}) for
/// every atom p, each evaluated from its own coefficient families.
inline StateMeasure step_measure(const PartitionMeasure& pm, const StateMeasure& lambda) {
  const auto lam = lambda.cell_masses(pm);
  std::vector<double> inter(pm.m(), 0.0);
  std::vector<double> next(pm.grid_size());
  for (std::size_t p = 0; p < pm.grid_size(); ++p) {
    const std::size_t c = pm.cell_of(p);
    inter[c] = pm.atom_mass(p);
    next[p] = coefficients_from_masses(pm.cell_masses(), inter).evaluate(lam);
    inter[c] = 0.0;
  }
  return StateMeasure(std::move(next));
}

/// The Volterra CSO on S^{m-1} driving the cell masses: P_{ijk,l} = P(., ., ., Omega_l).
inline CubicTensor reduce_to_volterra(const PartitionMeasure& pm) {
  const std::size_t m = pm.m();
  const auto cell = pm.cell_masses();
  std::vector<double> inter(m, 0.0);
  RawEntries entries;
  for (std::size_t l = 0; l < m; ++l) {
    inter[l] = cell[l];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k) {
          if (i != l && j != l && k != l) continue;
          entries.push_back({{i, j, k, l}, kernel_from_masses(cell, inter, i, j, k)});
        }
    inter[l] = 0.0;
  }
  return make_tensor(entries, m);
}

/// lambda^(n)(A) for n = 0..steps, with the cell masses taken from the
/// reduced Volterra orbit.
inline std::vector<double> iterate_measure(const PartitionMeasure& pm, const StateMeasure& lambda0,
                                           std::size_t steps, const MeasurableSet& a) {
  const CubicTensor reduced = reduce_to_volterra(pm);
  const CubicCoefficients co = coefficients_abc(pm, a);
  std::vector<double> values;
  values.reserve(steps + 1);
  values.push_back(lambda0.measure_of(a));
  SimplexPoint cells(lambda0.cell_masses(pm));
  for (std::size_t n = 0; n < steps; ++n) {
    values.push_back(co.evaluate(cells.coords()));
    cells = apply_cso(reduced, cells);
  }
  return values;
}

/// lim lambda^(n)(A) given the limit point of the reduced orbit.
inline double limit_measure(const PartitionMeasure& pm, const SimplexPoint& limit,
                            const MeasurableSet& a) {
  if (limit.dim() != pm.m()) throw DimensionMismatch(pm.m(), limit.dim());
  return coefficients_abc(pm, a).evaluate(limit.coords());
}

}  // namespace cubicdyn
