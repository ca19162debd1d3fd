#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubicdyn/coefficients.hpp"
#include "cubicdyn/error.hpp"
#include "cubicdyn/gaussian.hpp"
#include "cubicdyn/kernel_family.hpp"
#include "cubicdyn/parallel.hpp"
#include "cubicdyn/richardson.hpp"

namespace cubicdyn {

enum class GeneratorEquation {
  forward,   // d/dt
  backward,  // d/ds
};

/// P(s, i,j,k, t, l) on finite E.
struct GeneratorProbe {
  double s, t;
  std::size_t i, j, k, l;
};

struct GeneratorLevel {
  double h;
  double lhs;
  double residual;  // lhs - rhs
};

struct GeneratorResidual {
  std::size_t probe_id = 0;
  double rhs = 0.0;
  std::vector<GeneratorLevel> levels;
  std::vector<double> ratios;  // |residual(h_k)| / |residual(h_{k+1})|
  bool rhs_converged = true;
  std::string note;

  double finest_residual() const { return levels.empty() ? 0.0 : levels.back().residual; }
};

struct GeneratorReport {
  GeneratorEquation equation = GeneratorEquation::forward;
  std::vector<GeneratorResidual> probes;
  double max_finest = 0.0;
};

inline std::vector<double> default_fd_steps() { return {0.1, 0.05, 0.025}; }
inline std::vector<double> default_limit_deltas() { return {1e-2, 5e-3, 2.5e-3, 1.25e-3}; }

namespace detail {

inline void finish_levels(GeneratorResidual& r) {
  for (std::size_t n = 0; n + 1 < r.levels.size(); ++n) {
    const double fine = std::abs(r.levels[n + 1].residual);
    r.ratios.push_back(fine > 0.0 ? std::abs(r.levels[n].residual) / fine : INFINITY);
  }
}

inline void finish_report(GeneratorReport& rep) {
  for (const auto& p : rep.probes)
    rep.max_finest = std::max(rep.max_finest, std::abs(p.finest_residual()));
}

inline void check_regime(double s, double t) {
  if (!(t > s + 2.0)) throw std::invalid_argument("generator residuals need t > s + 2");
}

template <class Quotient>
LimitEstimate quotient_limit(const std::vector<double>& deltas, Quotient&& g) {
  std::vector<double> vals;
  vals.reserve(deltas.size());
  for (double d : deltas) vals.push_back(g(d));
  return richardson_limit(deltas, vals);
}

}  // namespace detail

/// Residuals of the two integro-differential equations on finite E:
///   forward:  dP/dt = sum_{u,th,q} P(s,ijk,t-1,u) C(t,u,th,q,l) x_th x_q  at t-1
///   backward: dP/ds = -sum_{u,th,q} C(s+1,ijk,u) P(s+1,u th q,t,l) x_th x_q  at s+1
/// with C the forward difference quotient limit. The left side is a
/// central difference with each step in `steps`.
inline GeneratorReport residual_generator(const ClosedFormKernel& kernel, GeneratorEquation eq,
                                          const std::vector<GeneratorProbe>& probes,
                                          const std::vector<double>& steps = default_fd_steps(),
                                          const std::vector<double>& deltas =
                                              default_limit_deltas()) {
  const std::size_t m = kernel.m();
  GeneratorReport rep;
  rep.equation = eq;
  for (std::size_t n = 0; n < probes.size(); ++n) {
    const auto& p = probes[n];
    detail::check_regime(p.s, p.t);
    if (p.i >= m || p.j >= m || p.k >= m || p.l >= m) throw DimensionMismatch(m, std::max({p.i, p.j, p.k, p.l}) + 1);
    GeneratorResidual res;
    res.probe_id = n;
    double rhs = 0.0;
    if (eq == GeneratorEquation::forward) {
      const auto x = kernel.state(p.t - 1.0);
      for (std::size_t u = 0; u < m; ++u) {
        const double left = kernel.eval(p.s, p.t - 1.0, p.i, p.j, p.k, u);
        for (std::size_t th = 0; th < m; ++th)
          for (std::size_t q = 0; q < m; ++q) {
            const auto c = detail::quotient_limit(deltas, [&](double d) {
              return (kernel.eval(p.t - 1.0, p.t + d, u, th, q, p.l) -
                      kernel.eval(p.t - 1.0, p.t, u, th, q, p.l)) / d;
            });
            if (!c.converged) res.rhs_converged = false;
            rhs += left * c.value * x[th] * x[q];
          }
      }
    } else {
      const auto x = kernel.state(p.s + 1.0);
      for (std::size_t u = 0; u < m; ++u) {
        const auto c = detail::quotient_limit(deltas, [&](double d) {
          return (kernel.eval(p.s, p.s + 1.0 + d, p.i, p.j, p.k, u) -
                  kernel.eval(p.s + d, p.s + 1.0 + d, p.i, p.j, p.k, u)) / d;
        });
        if (!c.converged) res.rhs_converged = false;
        for (std::size_t th = 0; th < m; ++th)
          for (std::size_t q = 0; q < m; ++q)
            rhs -= c.value * kernel.eval(p.s + 1.0, p.t, u, th, q, p.l) * x[th] * x[q];
      }
    }
    res.rhs = rhs;
    if (!res.rhs_converged) res.note = "C limit did not settle";
    for (double h : steps) {
      const double lhs =
          eq == GeneratorEquation::forward
              ? (kernel.eval(p.s, p.t + h, p.i, p.j, p.k, p.l) -
                 kernel.eval(p.s, p.t - h, p.i, p.j, p.k, p.l)) / (2.0 * h)
              : (kernel.eval(p.s + h, p.t, p.i, p.j, p.k, p.l) -
                 kernel.eval(p.s - h, p.t, p.i, p.j, p.k, p.l)) / (2.0 * h);
      res.levels.push_back({h, lhs, lhs - rhs});
    }
    detail::finish_levels(res);
    rep.probes.push_back(std::move(res));
  }
  detail::finish_report(rep);
  return rep;
}

/// Families built by composition exist at integer times only.
inline GeneratorReport residual_generator(const CspKernelFamily&, GeneratorEquation,
                                          const std::vector<GeneratorProbe>&,
                                          const std::vector<double>& = default_fd_steps(),
                                          const std::vector<double>& = default_limit_deltas()) {
  throw UndefinedAtNonIntegerGap();
}

enum class GeneratorMode {
  distribution,  // F(s,x,y,z,t,w) = P(s,x,y,z,t,(-inf,w])
  density,       // f(s,x,y,z,t,w)
};

namespace detail {

/// Kernel value of the requested mode.
inline double mode_value(const DensityKernel& k, GeneratorMode mode, double s, double S,
                         double t, double w) {
  return mode == GeneratorMode::density ? k.f(s, S, 0.0, 0.0, t, w)
                                        : cumulative_F(k, s, S, 0.0, 0.0, t, w);
}

/// Triple integral over (u, theta, q) with r-weights on theta and q. The
/// u-factor of the integrand is supplied by `u_weight`, the C-factor by
/// `c_of(u + theta + q)` or `c_of(u)` depending on the equation.
inline double gaussian_generator_rhs(const DensityKernel& k, const QuadratureSpec& q,
                                     GeneratorEquation eq, GeneratorMode mode,
                                     const ContinuumProbe& p, const std::vector<double>& deltas,
                                     bool& converged) {
  const double S = p.x + p.y + p.z;
  const Rule ref = q.reference_rule();
  std::vector<double> un, uw, tn, tw;
  if (eq == GeneratorEquation::forward) {
    // dP/dt = iiint f(s,x,y,z,t-1,u) C(t,u,th,q,w) du m(dth) m(dq)
    const double tm = p.t - 1.0;
    map_rule(ref, S, q.truncation_halfwidth_sigmas * k.sigma(p.s, tm), un, uw);
    map_rule(ref, 0.0, q.truncation_halfwidth_sigmas * k.background_sigma(tm), tn, tw);
    double total = 0.0;
    for (std::size_t a = 0; a < un.size(); ++a) {
      const double fu = uw[a] * k.f(p.s, S, 0.0, 0.0, tm, un[a]);
      double mid = 0.0;
      for (std::size_t b = 0; b < tn.size(); ++b) {
        double inner = 0.0;
        for (std::size_t c = 0; c < tn.size(); ++c) {
          const double arg = un[a] + tn[b] + tn[c];
          const auto lim = quotient_limit(deltas, [&](double d) {
            if (mode == GeneratorMode::density)
              return (k.f(tm, arg, 0.0, 0.0, p.t + d, p.w) - k.f(0.0, arg, 0.0, 0.0, 1.0, p.w)) / d;
            return (mode_value(k, mode, tm, arg, p.t + d, p.w) -
                    mode_value(k, mode, tm, arg, p.t, p.w)) / d;
          });
          if (!lim.converged) converged = false;
          inner += tw[c] * k.r(tm, tn[c]) * lim.value;
        }
        mid += tw[b] * k.r(tm, tn[b]) * inner;
      }
      total += fu * mid;
    }
    return total;
  }
  // dP/ds = -iiint c(s+1,x,y,z,u) P(s+1,u,th,q,t,w) du m(dth) m(dq), where c
  // is the density-level difference quotient limit.
  const double sp = p.s + 1.0;
  map_rule(ref, S, q.truncation_halfwidth_sigmas * k.sigma(p.s, sp + deltas.front()), un, uw);
  map_rule(ref, 0.0, q.truncation_halfwidth_sigmas * k.background_sigma(sp), tn, tw);
  double total = 0.0;
  for (std::size_t a = 0; a < un.size(); ++a) {
    const auto lim = quotient_limit(deltas, [&](double d) {
      return (k.f(p.s, S, 0.0, 0.0, sp + d, un[a]) - k.f(p.s + d, S, 0.0, 0.0, sp + d, un[a])) / d;
    });
    if (!lim.converged) converged = false;
    double mid = 0.0;
    for (std::size_t b = 0; b < tn.size(); ++b) {
      double inner = 0.0;
      for (std::size_t c = 0; c < tn.size(); ++c)
        inner += tw[c] * k.r(sp, tn[c]) *
                 mode_value(k, mode, sp, un[a] + tn[b] + tn[c], p.t, p.w);
      mid += tw[b] * k.r(sp, tn[b]) * inner;
    }
    total += uw[a] * lim.value * mid;
  }
  return -total;
}

}  // namespace detail

/// Residuals of the integro-differential equations for the Gaussian family,
/// for the distribution function F or the density f. The right side is a
/// triple quadrature evaluated once per probe; the left side is a central
/// difference at each step.
inline GeneratorReport residual_generator(const DensityKernel& k, const QuadratureSpec& q,
                                          GeneratorEquation eq, GeneratorMode mode,
                                          const std::vector<ContinuumProbe>& probes,
                                          const std::vector<double>& steps = default_fd_steps(),
                                          const std::vector<double>& deltas =
                                              default_limit_deltas()) {
  q.validate();
  for (const auto& p : probes) detail::check_regime(p.s, p.t);
  q.charge(3.0, static_cast<double>(probes.size() * deltas.size()));
  GeneratorReport rep;
  rep.equation = eq;
  rep.probes = parallel_map<GeneratorResidual>(probes.size(), [&](std::size_t n) {
    const auto& p = probes[n];
    GeneratorResidual res;
    res.probe_id = n;
    res.rhs = detail::gaussian_generator_rhs(k, q, eq, mode, p, deltas, res.rhs_converged);
    if (!res.rhs_converged) res.note = "C limit did not settle";
    const double S = p.x + p.y + p.z;
    for (double h : steps) {
      const double lhs =
          eq == GeneratorEquation::forward
              ? (detail::mode_value(k, mode, p.s, S, p.t + h, p.w) -
                 detail::mode_value(k, mode, p.s, S, p.t - h, p.w)) / (2.0 * h)
              : (detail::mode_value(k, mode, p.s + h, S, p.t, p.w) -
                 detail::mode_value(k, mode, p.s - h, S, p.t, p.w)) / (2.0 * h);
      res.levels.push_back({h, lhs, lhs - res.rhs});
    }
    detail::finish_levels(res);
    return res;
  });
  detail::finish_report(rep);
  return rep;
}

}  // namespace cubicdyn
