#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cubicdyn/error.hpp"
#include "cubicdyn/simplex.hpp"
#include "cubicdyn/tensor.hpp"

namespace cubicdyn {

/// x'_l = sum_{i,j,k} P_{ijk,l} x_i x_j x_k, without renormalization.
inline std::vector<double> apply_cso_raw(const CubicTensor& t, std::span<const double> x) {
  const std::size_t m = t.m();
  if (x.size() != m) throw DimensionMismatch(m, x.size());
  std::vector<double> out(m, 0.0);
  if (t.is_dense()) {
    for (std::size_t i = 0; i < m; ++i) {
      if (x[i] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        const double xij = x[i] * x[j];
        if (xij == 0.0) continue;
        for (std::size_t k = 0; k < m; ++k) {
          const double w = xij * x[k];
          if (w == 0.0) continue;
          const double* row = t.dense_row(i, j, k);
          for (std::size_t l = 0; l < m; ++l) out[l] += w * row[l];
        }
      }
    }
  } else {
    t.for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                           double p) { out[l] += p * (x[i] * x[j] * x[k]); });
  }
  return out;
}

inline SimplexPoint apply_cso(const CubicTensor& t, const SimplexPoint& x) {
  return SimplexPoint(apply_cso_raw(t, x.coords()));
}

struct Orbit {
  std::vector<SimplexPoint> points;
  bool converged = false;
  std::optional<SimplexPoint> limit;
  std::size_t iterations_used = 0;
};

/// Iterates W up to `max_iter` times, stopping once the sup-norm step falls
/// below `tol`. tol = 0 never stops early. Periodic orbits are not detected.
inline Orbit iterate(const CubicTensor& t, const SimplexPoint& x0, std::size_t max_iter,
                     double tol) {
  if (max_iter < 1) throw std::invalid_argument("iterate: max_iter must be >= 1");
  if (!(tol >= 0.0)) throw std::invalid_argument("iterate: tol must be >= 0");
  if (x0.dim() != t.m()) throw DimensionMismatch(t.m(), x0.dim());
  Orbit orbit;
  orbit.points.reserve(max_iter + 1);
  orbit.points.push_back(x0);
  for (std::size_t n = 0; n < max_iter; ++n) {
    SimplexPoint next = apply_cso(t, orbit.points.back());
    const double step = next.sup_distance(orbit.points.back());
    orbit.points.push_back(std::move(next));
    orbit.iterations_used = n + 1;
    if (step < tol) {
      orbit.converged = true;
      orbit.limit = orbit.points.back();
      break;
    }
  }
  return orbit;
}

inline constexpr double kVolterraZero = 1e-15;

/// True iff P_{ijk,l} vanishes (up to 1e-15) whenever l is not in {i,j,k}.
inline bool is_volterra(const CubicTensor& t) {
  bool volterra = true;
  t.for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                         double p) {
    if (l != i && l != j && l != k && p > kVolterraZero) volterra = false;
  });
  return volterra;
}

/// Coefficients of a Volterra CSO written as
///   x'_l = x_l ( d_l x_l^2 + x_l sum_{i!=l} a_{i,l} x_i + sum_{i,j!=l} b_{ij,l} x_i x_j ).
/// b is kept upper-triangular: b_{ij,l} = 0 for i > j.
struct VolterraForm {
  std::size_t m = 0;
  std::vector<double> diag;  // d_l = P_{lll,l}
  std::vector<double> a;     // a[i*m + l]
  std::vector<double> b;     // b[(i*m + j)*m + l]

  double a_coef(std::size_t i, std::size_t l) const { return a[i * m + l]; }
  double b_coef(std::size_t i, std::size_t j, std::size_t l) const {
    return b[(i * m + j) * m + l];
  }

  std::vector<double> evaluate_raw(std::span<const double> x) const {
    if (x.size() != m) throw DimensionMismatch(m, x.size());
    std::vector<double> out(m, 0.0);
    for (std::size_t l = 0; l < m; ++l) {
      if (x[l] == 0.0) continue;
      double linear = 0.0;
      double quadratic = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (i == l) continue;
        linear += a_coef(i, l) * x[i];
        for (std::size_t j = 0; j < m; ++j)
          if (j != l) quadratic += b_coef(i, j, l) * x[i] * x[j];
      }
      out[l] = x[l] * (diag[l] * x[l] * x[l] + x[l] * linear + quadratic);
    }
    return out;
  }

  SimplexPoint evaluate(const SimplexPoint& x) const {
    return SimplexPoint(evaluate_raw(x.coords()));
  }
};

inline VolterraForm to_volterra_form(const CubicTensor& t) {
  if (!is_volterra(t)) throw NotVolterra();
  if (!t.symmetric()) throw NotSymmetric();
  const std::size_t m = t.m();
  VolterraForm form;
  form.m = m;
  form.diag.assign(m, 0.0);
  form.a.assign(m * m, 0.0);
  form.b.assign(m * m * m, 0.0);
  for (std::size_t l = 0; l < m; ++l) {
    form.diag[l] = t.at(l, l, l, l);
    for (std::size_t i = 0; i < m; ++i) {
      if (i == l) continue;
      form.a[i * m + l] = 3.0 * t.at(l, l, i, l);
      form.b[(i * m + i) * m + l] = 3.0 * t.at(i, i, l, l);
      for (std::size_t j = i + 1; j < m; ++j)
        if (j != l) form.b[(i * m + j) * m + l] = 6.0 * t.at(i, j, l, l);
    }
  }
  return form;
}

}  // namespace cubicdyn
