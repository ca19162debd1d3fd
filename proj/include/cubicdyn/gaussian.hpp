#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubicdyn/error.hpp"
#include "cubicdyn/parallel.hpp"
#include "cubicdyn/quadrature.hpp"

namespace cubicdyn {

/// Parameter functions of the Gaussian CSP family. The built-in family is
/// a(s,t) = t - s - eps, b(t) = eps/2; custom (a, b) pairs may violate the
/// composition relation and are used as controls.
struct GaussianCspParams {
  double epsilon = 0.5;
  std::function<double(double, double)> a;
  std::function<double(double)> b;
  std::function<double(double, double)> da_ds;  // optional; finite differences otherwise

  static GaussianCspParams builtin(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw std::invalid_argument("epsilon must lie in (0, 1)");
    GaussianCspParams p;
    p.epsilon = epsilon;
    p.a = [epsilon](double s, double t) { return t - s - epsilon; };
    p.b = [epsilon](double) { return epsilon / 2.0; };
    p.da_ds = [](double, double) { return -1.0; };
    return p;
  }

  static GaussianCspParams custom(std::function<double(double, double)> a,
                                  std::function<double(double)> b) {
    GaussianCspParams p;
    p.epsilon = NAN;
    p.a = std::move(a);
    p.b = std::move(b);
    return p;
  }

  double a_of(double s, double t) const {
    const double v = a(s, t);
    if (!(v > 0.0)) throw std::domain_error("a(s,t) must be positive");
    return v;
  }
  double b_of(double t) const {
    const double v = b(t);
    if (!(v > 0.0)) throw std::domain_error("b(t) must be positive");
    return v;
  }
  double a_ds(double s, double t) const {
    if (da_ds) return da_ds(s, t);
    const double h = 1e-5;
    return (a(s + h, t) - a(s - h, t)) / (2.0 * h);
  }
};

/// |a(s,t) - 2 b(tau) - a(s,tau) - a(tau,t)|.
inline double check_ab_relation(const GaussianCspParams& p, double s, double tau, double t) {
  if (tau - s < 1.0 || t - tau < 1.0) throw InvalidTimeSplit(s, tau, t);
  return std::abs(p.a(s, t) - 2.0 * p.b(tau) - p.a(s, tau) - p.a(tau, t));
}

/// f(s,x,y,z,t,w) = (pi a)^{-1/2} exp(-(w-x-y-z)^2 / a) with a = a(s,t),
/// and the background density r_t(u) = (pi b)^{-1/2} exp(-u^2 / b).
class DensityKernel {
 public:
  explicit DensityKernel(GaussianCspParams params) : p_(std::move(params)) {}

  const GaussianCspParams& params() const noexcept { return p_; }

  double a(double s, double t) const {
    if (t - s < 1.0 - 1e-12) throw InvalidTimeGap(s, t);
    return p_.a_of(s, t);
  }

  /// Standard deviation of f(s,...,t,.) in w.
  double sigma(double s, double t) const { return std::sqrt(a(s, t) / 2.0); }
  double background_sigma(double t) const { return std::sqrt(p_.b_of(t) / 2.0); }

  double f(double s, double x, double y, double z, double t, double w) const {
    return gaussian(a(s, t), w - x - y - z);
  }

  double r(double t, double u) const { return gaussian(p_.b_of(t), u); }

  /// (pi a)^{-1/2} exp(-d^2 / a)
  static double gaussian(double a, double d) {
    return std::exp(-d * d / a) / std::sqrt(std::numbers::pi * a);
  }

 private:
  GaussianCspParams p_;
};

inline double eval_f(const DensityKernel& k, double s, double x, double y, double z, double t,
                     double w) {
  return k.f(s, x, y, z, t, w);
}

/// F(s,x,y,z,t,w) = P(s,x,y,z,t,(-inf, w]).
inline double cumulative_F(const DensityKernel& k, double s, double x, double y, double z,
                           double t, double w) {
  const double a = k.a(s, t);
  return 0.5 * std::erfc(-(w - x - y - z) / std::sqrt(a));
}

struct QuadratureSpec {
  double truncation_halfwidth_sigmas = 8.0;
  std::size_t nodes_per_dimension = 96;
  double max_evaluations = 2e9;

  void validate() const {
    if (nodes_per_dimension < 8) throw std::invalid_argument("quadrature needs >= 8 nodes");
    if (!(truncation_halfwidth_sigmas >= 4.0))
      throw std::invalid_argument("quadrature halfwidth must be >= 4 sigmas");
  }

  Rule reference_rule() const { return composite_rule(-1.0, 1.0, nodes_per_dimension); }

  void charge(double dimensions, double count) const {
    const double needed = std::pow(static_cast<double>(nodes_per_dimension), dimensions) * count;
    if (needed > max_evaluations) throw QuadratureBudgetExceeded(needed, max_evaluations);
  }
};

/// Integral of f over w on mean +/- halfwidth sigmas.
inline double normalization(const DensityKernel& k, const QuadratureSpec& q, double s, double x,
                            double y, double z, double t) {
  q.validate();
  const double mean = x + y + z;
  const double h = q.truncation_halfwidth_sigmas * k.sigma(s, t);
  return integrate([&](double w) { return k.f(s, x, y, z, t, w); }, mean - h, mean + h,
                   q.nodes_per_dimension);
}

/// Full argument list (s, x, y, z, t, w) of a transition density.
struct ContinuumProbe {
  double s, x, y, z, t, w;
};

struct CompositionProbe {
  double x, y, z, w;
};

struct CompositionResidual {
  std::size_t probe_id;
  double lhs;
  double rhs;
  double abs_residual;
  double rel_residual;
};

struct CompositionReport {
  double s = 0, tau = 0, t = 0;
  std::vector<CompositionResidual> probes;
  double max_abs = 0.0;
  double max_rel = 0.0;
};

inline constexpr double kRelativeFloor = 1e-12;

/// Right-hand side of the density composition identity
///   f(s,x,y,z,t,w) = iiint f(s,x,y,z,tau,u) f(tau,u,th,q,t,w) r(th) r(q) du dth dq.
/// theta and q run over r's truncated support; for each (theta, q) the u
/// interval is centred on the mean of the product of the two Gaussian
/// u-factors and spans the same number of its standard deviations.
inline double composition_rhs(const DensityKernel& k, const QuadratureSpec& q, double s,
                              double tau, double t, const CompositionProbe& pr) {
  const Rule ref = q.reference_rule();
  const double a1 = k.a(s, tau), a2 = k.a(tau, t);
  const double v1 = a1 / 2.0, v2 = a2 / 2.0;
  const double mu1 = pr.x + pr.y + pr.z;
  const double post_var = v1 * v2 / (v1 + v2);
  const double hu = q.truncation_halfwidth_sigmas * std::sqrt(post_var);
  const double hr = q.truncation_halfwidth_sigmas * k.background_sigma(tau);
  std::vector<double> th, wth, uu, wu;
  map_rule(ref, 0.0, hr, th, wth);
  double total = 0.0;
  for (std::size_t a = 0; a < th.size(); ++a) {
    const double ra = wth[a] * k.r(tau, th[a]);
    double row = 0.0;
    for (std::size_t b = 0; b < th.size(); ++b) {
      const double rb = wth[b] * k.r(tau, th[b]);
      const double target = pr.w - th[a] - th[b];
      const double centre = (mu1 * v2 + target * v1) / (v1 + v2);
      map_rule(ref, centre, hu, uu, wu);
      double inner = 0.0;
      for (std::size_t c = 0; c < uu.size(); ++c)
        inner += wu[c] * DensityKernel::gaussian(a1, uu[c] - mu1) *
                 DensityKernel::gaussian(a2, target - uu[c]);
      row += rb * inner;
    }
    total += ra * row;
  }
  return total;
}

/// Compares f(s,...,t,w) with its composition through tau at each probe.
inline CompositionReport verify_composition(const DensityKernel& k, const QuadratureSpec& q,
                                            double s, double tau, double t,
                                            const std::vector<CompositionProbe>& probes) {
  q.validate();
  if (tau - s < 1.0 || t - tau < 1.0) throw InvalidTimeSplit(s, tau, t);
  q.charge(3.0, static_cast<double>(probes.size()));
  CompositionReport rep;
  rep.s = s;
  rep.tau = tau;
  rep.t = t;
  rep.probes = parallel_map<CompositionResidual>(probes.size(), [&](std::size_t i) {
    const auto& pr = probes[i];
    const double lhs = k.f(s, pr.x, pr.y, pr.z, t, pr.w);
    const double rhs = composition_rhs(k, q, s, tau, t, pr);
    const double abs_r = std::abs(rhs - lhs);
    return CompositionResidual{i, lhs, rhs, abs_r,
                               abs_r / std::max(std::abs(lhs), kRelativeFloor)};
  });
  for (const auto& r : rep.probes) {
    rep.max_abs = std::max(rep.max_abs, r.abs_residual);
    rep.max_rel = std::max(rep.max_rel, r.rel_residual);
  }
  return rep;
}

}  // namespace cubicdyn
