#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <algorithm>
#include <stdexcept>
#include <vector>

namespace cubicdyn {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {
/// P_n(x) and P_n'(x) by the three-term recurrence.
inline std::pair<double, double> legendre(std::size_t n, double x) {
  double p0 = 1.0, p1 = x;
  for (std::size_t k = 2; k <= n; ++k) {
    const double dk = static_cast<double>(k);
    const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
    p0 = p1;
    p1 = p2;
  }
  const double dn = static_cast<double>(n);
  return {p1, dn * (x * p1 - p0) / (x * x - 1.0)};
}
}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1], nodes ascending.
inline Rule gauss_legendre(std::size_t n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  if (n == 1) return Rule{{0.0}, {2.0}};
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      const auto [p, dp] = detail::legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = detail::legendre(n, x).second;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) {
    const double dp = detail::legendre(n, 0.0).second;
    r.nodes[n / 2] = 0.0;
    r.weights[n / 2] = 2.0 / (dp * dp);
  }
  return r;
}

inline constexpr std::size_t kPanelNodes = 8;

/// Composite Gauss-Legendre with `total_nodes` nodes split into panels of
/// about eight nodes over [lo, hi]. Nodes come out in ascending order.
inline Rule composite_rule(double lo, double hi, std::size_t total_nodes) {
  if (total_nodes < 1) throw std::invalid_argument("composite_rule: need at least one node");
  const std::size_t panels = std::max<std::size_t>(1, total_nodes / kPanelNodes);
  const std::size_t base = total_nodes / panels;
  const std::size_t extra = total_nodes % panels;
  Rule out;
  out.nodes.reserve(total_nodes);
  out.weights.reserve(total_nodes);
  const double width = (hi - lo) / static_cast<double>(panels);
  Rule small = gauss_legendre(base);
  Rule large = extra ? gauss_legendre(base + 1) : Rule{};
  for (std::size_t p = 0; p < panels; ++p) {
    const Rule& g = p < extra ? large : small;
    const double a = lo + width * static_cast<double>(p);
    const double half = 0.5 * width;
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      out.nodes.push_back(a + half * (g.nodes[q] + 1.0));
      out.weights.push_back(half * g.weights[q]);
    }
  }
  return out;
}

/// Fixed-order sum of f over a composite rule.
template <class F>
double integrate(F&& f, double lo, double hi, std::size_t total_nodes) {
  const Rule r = composite_rule(lo, hi, total_nodes);
  double sum = 0.0;
  for (std::size_t q = 0; q < r.nodes.size(); ++q) sum += r.weights[q] * f(r.nodes[q]);
  return sum;
}

/// Rule mapped from a reference composite rule on [-1, 1] to [center - h, center + h].
inline void map_rule(const Rule& ref, double center, double half_width, std::vector<double>& x,
                     std::vector<double>& w) {
  x.resize(ref.nodes.size());
  w.resize(ref.nodes.size());
  for (std::size_t q = 0; q < ref.nodes.size(); ++q) {
    x[q] = center + half_width * ref.nodes[q];
    w[q] = half_width * ref.weights[q];
  }
}

}  // namespace cubicdyn
