#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "cubicdyn/kernel_family.hpp"

namespace cubicdyn {

/// x^{(t)} = sum P^{[s,t]}_{ijk,l} x^{(s)}_i x^{(s)}_j x^{(s)}_k.
template <KernelFamily F>
SimplexPoint propagate_state(const F& fam, int s, int t) {
  if (t - s < 1) throw InvalidTimeGap(s, t);
  const KernelArray& p = fam.kernel(s, t);
  const std::vector<double> xs = fam.state(s);
  return SimplexPoint(propagate(p, xs));
}

/// P^{[s,t]} composed through tau from the family's own factors.
template <KernelFamily F>
KernelArray extend_kernel(const F& fam, int s, int tau, int t) {
  if (tau - s < 1 || t - tau < 1) throw InvalidTimeSplit(s, tau, t);
  const std::vector<double> x_tau = fam.state(tau);
  return compose_kernels(fam.kernel(s, tau), fam.kernel(tau, t), x_tau);
}

struct SplitResidual {
  int tau;
  double residual;  // sup-norm against the family's own P^{[s,t]}
};

struct CkReport {
  int s = 0;
  int t = 0;
  std::vector<SplitResidual> splits;
  double max_pairwise = 0.0;  // spread between splits
  double max_residual = 0.0;
  double tol = 0.0;
  bool consistent = true;
};

/// Chapman-Kolmogorov (type A) consistency of P^{[s,t]} across splits tau.
template <KernelFamily F>
CkReport ck_check_A(const F& fam, int s, int t, const std::vector<int>& splits,
                    double tol = 1e-10) {
  CkReport report;
  report.s = s;
  report.t = t;
  report.tol = tol;
  const KernelArray direct = fam.kernel(s, t);
  std::vector<KernelArray> composed;
  for (int tau : splits) {
    composed.push_back(extend_kernel(fam, s, tau, t));
    const double r = composed.back().sup_distance(direct);
    report.splits.push_back({tau, r});
    report.max_residual = std::max(report.max_residual, r);
  }
  for (std::size_t a = 0; a < composed.size(); ++a)
    for (std::size_t b = a + 1; b < composed.size(); ++b)
      report.max_pairwise = std::max(report.max_pairwise, composed[a].sup_distance(composed[b]));
  report.consistent = report.max_pairwise <= tol && report.max_residual <= tol;
  return report;
}

inline std::vector<int> all_splits(int s, int t) {
  std::vector<int> out;
  for (int tau = s + 1; tau <= t - 1; ++tau) out.push_back(tau);
  return out;
}

struct CkBReport {
  int s = 0;
  int tau = 0;
  int t = 0;
  double residual = 0.0;
};

/// Type-B composition: three kernels from s to tau, each marginalised over
/// two partners drawn from m_s, feeding one kernel from tau to t. The six
/// partner sums factor into the one-argument transfer R_{i,u}.
template <KernelFamily F>
CkBReport ck_check_B(const F& fam, int s, int tau, int t) {
  if (tau - s < 1 || t - tau < 1) throw InvalidTimeSplit(s, tau, t);
  const std::size_t m = fam.m();
  const KernelArray left = fam.kernel(s, tau);
  const KernelArray right = fam.kernel(tau, t);
  const KernelArray direct = fam.kernel(s, t);
  const std::vector<double> xs = fam.state(s);

  std::vector<double> transfer(m * m, 0.0);  // R_{i,u} = sum_{y,z} left_{iyz,u} x_y x_z
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t y = 0; y < m; ++y)
      for (std::size_t z = 0; z < m; ++z) {
        const auto row = left.row(i, y, z);
        for (std::size_t u = 0; u < m; ++u) transfer[i * m + u] += row[u] * xs[y] * xs[z];
      }

  CkBReport report{s, tau, t, 0.0};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) {
          double rhs = 0.0;
          for (std::size_t u = 0; u < m; ++u)
            for (std::size_t v = 0; v < m; ++v)
              for (std::size_t w = 0; w < m; ++w)
                rhs += transfer[i * m + u] * transfer[j * m + v] * transfer[k * m + w] *
                       right(u, v, w, l);
          report.residual = std::max(report.residual, std::abs(rhs - direct(i, j, k, l)));
        }
  return report;
}

struct CspConditionReport {
  bool stationary = true;    // (I)
  bool symmetric = true;     // (II)
  bool stochastic = true;    // (III)
  bool measurable = true;    // (IV), vacuous on a finite state space
  bool chapman_kolmogorov = true;  // (V), type A
  double worst_stochastic_defect = 0.0;
  double worst_ck_residual = 0.0;
  std::vector<std::string> notes;

  bool all_ok() const {
    return stationary && symmetric && stochastic && measurable && chapman_kolmogorov;
  }
};

/// Checks the defining conditions of a CSP up to horizon T on integer times.
template <KernelFamily F>
CspConditionReport verify_csp_conditions(const F& fam, int horizon, double tol = 1e-10,
                                         double stochastic_tol = 1e-12) {
  if (horizon < 2) throw std::invalid_argument("verify_csp_conditions: horizon must be >= 2");
  CspConditionReport rep;
  const KernelArray first = fam.kernel(0, 1);
  for (int t = 1; t < horizon; ++t)
    if (!(KernelArray(fam.kernel(t, t + 1)) == first)) {
      rep.stationary = false;
      rep.notes.push_back("(I) P[" + std::to_string(t) + "," + std::to_string(t + 1) +
                          "] differs from P[0,1]");
      break;
    }
  for (int s = 0; s < horizon; ++s)
    for (int t = s + 1; t <= horizon; ++t) {
      const KernelArray p = fam.kernel(s, t);
      if (rep.symmetric && !p.symmetric()) {
        rep.symmetric = false;
        rep.notes.push_back("(II) P[" + std::to_string(s) + "," + std::to_string(t) +
                            "] is not permutation symmetric");
      }
      const double defect = p.stochasticity_defect();
      rep.worst_stochastic_defect = std::max(rep.worst_stochastic_defect, defect);
      if (!(defect <= stochastic_tol) && rep.stochastic) {
        rep.stochastic = false;
        rep.notes.push_back("(III) P[" + std::to_string(s) + "," + std::to_string(t) +
                            "] is not stochastic");
      }
    }
  rep.notes.push_back("(IV) measurability is vacuous on a finite state space");
  for (int s = 0; s < horizon; ++s)
    for (int t = s + 2; t <= horizon; ++t) {
      const CkReport ck = ck_check_A(fam, s, t, all_splits(s, t), tol);
      rep.worst_ck_residual = std::max({rep.worst_ck_residual, ck.max_residual, ck.max_pairwise});
      if (!ck.consistent && rep.chapman_kolmogorov) {
        rep.chapman_kolmogorov = false;
        rep.notes.push_back("(V) Chapman-Kolmogorov fails on [" + std::to_string(s) + "," +
                            std::to_string(t) + "]");
      }
    }
  return rep;
}

/// Q^{[s,t]}_{ij,l} = sum_k P^{[s,t]}_{ijk,l} x^{(s)}_k.
template <KernelFamily F>
QspArray marginalize_to_qsp(const F& fam, int s, int t) {
  if (t - s < 1) throw InvalidTimeGap(s, t);
  const std::size_t m = fam.m();
  const KernelArray p = fam.kernel(s, t);
  const std::vector<double> xs = fam.state(s);
  QspArray q(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) q(i, j, l) += p(i, j, k, l) * xs[k];
  return q;
}

}  // namespace cubicdyn
