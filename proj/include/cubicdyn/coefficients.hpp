#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cubicdyn/gaussian.hpp"
#include "cubicdyn/richardson.hpp"

namespace cubicdyn {

struct CoefficientProbe {
  double s, x, y, z;
};

/// Raw Delta-indexed moments and their extrapolated limits at one probe.
struct ProbeCoefficients {
  CoefficientProbe probe{};
  std::vector<double> a_raw, b2_raw;             // a(s,x,y,z,Delta), b^2(s,x,y,z,Delta)
  std::vector<double> alpha_y_raw, alpha_z_raw;  // alpha(s+1,., Delta)
  std::vector<double> alpha2_y_raw, alpha2_z_raw;
  LimitEstimate A, B2, D_y, D_z, D2_y, D2_z;

  bool all_converged() const {
    return A.converged && B2.converged && D_y.converged && D_z.converged && D2_y.converged &&
           D2_z.converged;
  }
};

struct CoefficientEstimates {
  std::vector<double> deltas;
  std::vector<ProbeCoefficients> probes;
};

inline std::vector<double> default_deltas() { return {0.1, 0.05, 0.025, 0.0125}; }

namespace detail {

/// a(Delta) and b^2(Delta): first and second moments about x of the
/// difference f(s,.,s+1+Delta,u) - f(s+Delta,.,s+1+Delta,u).
inline std::pair<double, double> drift_moments(const DensityKernel& k, const QuadratureSpec& q,
                                               const CoefficientProbe& p, double delta) {
  const double t_end = p.s + 1.0 + delta;
  const double mean = p.x + p.y + p.z;
  const double h = q.truncation_halfwidth_sigmas *
                   std::max(k.sigma(p.s, t_end), k.sigma(p.s + delta, t_end));
  const Rule r = composite_rule(mean - h, mean + h, q.nodes_per_dimension);
  double first = 0.0, second = 0.0;
  for (std::size_t n = 0; n < r.nodes.size(); ++n) {
    const double u = r.nodes[n];
    const double diff = k.f(p.s, p.x, p.y, p.z, t_end, u) - k.f(p.s + delta, p.x, p.y, p.z, t_end, u);
    first += r.weights[n] * diff * (u - p.x);
    second += r.weights[n] * diff * (u - p.x) * (u - p.x);
  }
  return {first, second};
}

/// alpha and alpha_2: first and second moments of m_t = r_t(theta) d theta about `centre`.
inline std::pair<double, double> background_moments(const DensityKernel& k,
                                                    const QuadratureSpec& q, double t,
                                                    double centre) {
  const double h = q.truncation_halfwidth_sigmas * k.background_sigma(t);
  const Rule r = composite_rule(-h, h, q.nodes_per_dimension);
  double first = 0.0, second = 0.0;
  for (std::size_t n = 0; n < r.nodes.size(); ++n) {
    const double th = r.nodes[n];
    const double wr = r.weights[n] * k.r(t, th);
    first += wr * (th - centre);
    second += wr * (th - centre) * (th - centre);
  }
  return {first, second};
}

}  // namespace detail

/// Estimates A = lim a/Delta, B^2 = lim b^2/(2 Delta), D = lim alpha and
/// D_2 = lim alpha_2/(2 Delta) over a decreasing Delta sequence. A limit
/// that fails to settle is reported through LimitEstimate::converged.
inline CoefficientEstimates estimate_coefficients(const DensityKernel& k, const QuadratureSpec& q,
                                                  const std::vector<CoefficientProbe>& probes,
                                                  const std::vector<double>& deltas) {
  q.validate();
  if (deltas.size() < 2) throw std::invalid_argument("estimate_coefficients: need >= 2 deltas");
  q.charge(1.0, 6.0 * static_cast<double>(deltas.size() * probes.size()));
  CoefficientEstimates out;
  out.deltas = deltas;
  out.probes = parallel_map<ProbeCoefficients>(probes.size(), [&](std::size_t i) {
    ProbeCoefficients pc;
    pc.probe = probes[i];
    const auto& p = probes[i];
    std::vector<double> A, B2, Dy, Dz, D2y, D2z;
    for (double d : deltas) {
      const auto [a, b2] = detail::drift_moments(k, q, p, d);
      const auto [ay, a2y] = detail::background_moments(k, q, p.s + 1.0 + d, p.y);
      const auto [az, a2z] = detail::background_moments(k, q, p.s + 1.0 + d, p.z);
      pc.a_raw.push_back(a);
      pc.b2_raw.push_back(b2);
      pc.alpha_y_raw.push_back(ay);
      pc.alpha_z_raw.push_back(az);
      pc.alpha2_y_raw.push_back(a2y);
      pc.alpha2_z_raw.push_back(a2z);
      A.push_back(a / d);
      B2.push_back(b2 / (2.0 * d));
      Dy.push_back(ay);
      Dz.push_back(az);
      D2y.push_back(a2y / (2.0 * d));
      D2z.push_back(a2z / (2.0 * d));
    }
    pc.A = richardson_limit(deltas, A);
    pc.B2 = richardson_limit(deltas, B2);
    pc.D_y = richardson_limit(deltas, Dy);
    pc.D_z = richardson_limit(deltas, Dz);
    pc.D2_y = richardson_limit(deltas, D2y);
    pc.D2_z = richardson_limit(deltas, D2z);
    return pc;
  });
  return out;
}

enum class NonConvergentPolicy {
  skip_probe,  // record NonConvergentCoefficients and move on
  drop_terms,  // zero every term that carries a non-convergent coefficient
};

struct DiffusionResidual {
  std::size_t probe_id = 0;
  bool skipped = false;
  double lhs = 0.0;               // df/ds at (s, x, y, z, t, w)
  double rhs_asymmetric = 0.0;    // 1/2 on A D(y) d2f/dxdy only
  double rhs_symmetric = 0.0;     // 1/2 also on the A D(z) d2f/dxdz term
  double residual_asymmetric = 0.0;  // lhs - rhs
  double residual_symmetric = 0.0;
  std::string note;
};

namespace detail {
/// d^n f / dS^n with S = x+y+z, for n = 1..3; f depends on x, y, z only through S.
inline std::array<double, 3> sum_derivatives(double a, double v, double f) {
  const double g = 2.0 * v / a;
  return {f * g, f * (g * g - 2.0 / a), f * (g * g * g - 12.0 * v / (a * a))};
}
}  // namespace detail

/// Residual of the advanced-argument equation: df/ds at s against the right
/// side built from f(s+1, ...) and the estimated coefficients. Derivatives
/// of f are analytic.
inline std::vector<DiffusionResidual> residual_diffusion(const DensityKernel& k,
                                             const CoefficientEstimates& est,
                                             const std::vector<ContinuumProbe>& probes,
                                             NonConvergentPolicy policy =
                                                 NonConvergentPolicy::skip_probe) {
  if (est.probes.size() != probes.size())
    throw std::invalid_argument("residual_diffusion: one coefficient set per probe is required");
  std::vector<DiffusionResidual> out;
  for (std::size_t n = 0; n < probes.size(); ++n) {
    const auto& p = probes[n];
    const auto& c = est.probes[n];
    if (c.probe.s != p.s || c.probe.x != p.x || c.probe.y != p.y || c.probe.z != p.z)
      throw std::invalid_argument("residual_diffusion: coefficient probe does not match");
    DiffusionResidual res;
    res.probe_id = n;

    auto take = [&](const LimitEstimate& e, const char* name) -> double {
      if (e.converged) return e.value;
      if (res.note.find(name) == std::string::npos)
        res.note += std::string(res.note.empty() ? "" : "; ") + name + " non-convergent";
      return NAN;
    };
    const double A = take(c.A, "A"), B2 = take(c.B2, "B2");
    const double Dy = take(c.D_y, "D(y)"), Dz = take(c.D_z, "D(z)");
    const double D2y = take(c.D2_y, "D2(y)"), D2z = take(c.D2_z, "D2(z)");
    if (!res.note.empty() && policy == NonConvergentPolicy::skip_probe) {
      res.skipped = true;
      res.note = "NonConvergentCoefficients: " + res.note;
      out.push_back(res);
      continue;
    }

    const double a_now = k.a(p.s, p.t);
    const double v_now = p.w - p.x - p.y - p.z;
    const double f_now = k.f(p.s, p.x, p.y, p.z, p.t, p.w);
    const double df_da = f_now * (-0.5 / a_now + v_now * v_now / (a_now * a_now));
    res.lhs = df_da * k.params().a_ds(p.s, p.t);

    const double a1 = k.a(p.s + 1.0, p.t);
    const double f1 = k.f(p.s + 1.0, p.x, p.y, p.z, p.t, p.w);
    const auto d = detail::sum_derivatives(a1, v_now, f1);

    // each term is coefficient product x derivative; NaN marks a dropped term
    auto term = [&](double coef, double deriv) {
      return std::isnan(coef) ? 0.0 : coef * deriv;
    };
    const double common = -term(A, d[0]) - term(B2, d[1]) - term(B2 * Dy, d[2]) -
                          term(B2 * Dz, d[2]) - 0.5 * term(A * D2y, d[2]) -
                          0.5 * term(A * D2z, d[2]) - term(A * Dy * Dz, d[2]);
    res.rhs_asymmetric = common - 0.5 * term(A * Dy, d[1]) - term(A * Dz, d[1]);
    res.rhs_symmetric = common - 0.5 * term(A * Dy, d[1]) - 0.5 * term(A * Dz, d[1]);
    res.residual_asymmetric = res.lhs - res.rhs_asymmetric;
    res.residual_symmetric = res.lhs - res.rhs_symmetric;
    if (!res.note.empty()) res.note = "dropped terms: " + res.note;
    out.push_back(res);
  }
  return out;
}

}  // namespace cubicdyn
