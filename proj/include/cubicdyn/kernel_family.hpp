#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "cubicdyn/error.hpp"
#include "cubicdyn/simplex.hpp"
#include "cubicdyn/tensor.hpp"

namespace cubicdyn {

inline constexpr int kMaxHorizon = 64;

/// Dense rank-4 array P_{ijk,l}; unlike CubicTensor it carries no
/// stochasticity guarantee, so broken kernels can be inspected.
class KernelArray {
 public:
  KernelArray() = default;
  explicit KernelArray(std::size_t m) : m_(m), data_(m * m * m * m, 0.0) {}

  static KernelArray from_tensor(const CubicTensor& t) {
    KernelArray k(t.m());
    t.for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t kk, std::size_t l,
                           double v) { k(i, j, kk, l) = v; });
    return k;
  }

  std::size_t m() const noexcept { return m_; }
  double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * m_ + j) * m_ + k) * m_ + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * m_ + j) * m_ + k) * m_ + l];
  }
  std::span<const double> row(std::size_t i, std::size_t j, std::size_t k) const {
    return {data_.data() + ((i * m_ + j) * m_ + k) * m_, m_};
  }
  std::span<const double> data() const noexcept { return data_; }

  double sup_distance(const KernelArray& other) const {
    if (other.m_ != m_) throw DimensionMismatch(m_, other.m_);
    double d = 0.0;
    for (std::size_t n = 0; n < data_.size(); ++n)
      d = std::max(d, std::abs(data_[n] - other.data_[n]));
    return d;
  }

  bool symmetric() const {
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < m_; ++j)
        for (std::size_t k = 0; k < m_; ++k)
          for (std::size_t l = 0; l < m_; ++l) {
            const double v = (*this)(i, j, k, l);
            if ((*this)(i, k, j, l) != v || (*this)(j, i, k, l) != v ||
                (*this)(j, k, i, l) != v || (*this)(k, i, j, l) != v ||
                (*this)(k, j, i, l) != v)
              return false;
          }
    return true;
  }

  /// Largest |row sum - 1|, or +inf if any entry is negative.
  double stochasticity_defect() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < m_ * m_ * m_; ++r) {
      double sum = 0.0;
      for (std::size_t l = 0; l < m_; ++l) {
        const double v = data_[r * m_ + l];
        if (v < 0.0) return INFINITY;
        sum += v;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
  }

  friend bool operator==(const KernelArray&, const KernelArray&) = default;

 private:
  std::size_t m_ = 0;
  std::vector<double> data_;
};

/// Rank-3 array Q_{ij,l} of a quadratic stochastic process.
class QspArray {
 public:
  explicit QspArray(std::size_t m) : m_(m), data_(m * m * m, 0.0) {}
  std::size_t m() const noexcept { return m_; }
  double& operator()(std::size_t i, std::size_t j, std::size_t l) {
    return data_[(i * m_ + j) * m_ + l];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t l) const {
    return data_[(i * m_ + j) * m_ + l];
  }

 private:
  std::size_t m_;
  std::vector<double> data_;
};

/// y_l = sum_{ijk} P_{ijk,l} x_i x_j x_k.
inline std::vector<double> propagate(const KernelArray& p, std::span<const double> x) {
  const std::size_t m = p.m();
  if (x.size() != m) throw DimensionMismatch(m, x.size());
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        const double w = x[i] * x[j] * x[k];
        if (w == 0.0) continue;
        const auto row = p.row(i, j, k);
        for (std::size_t l = 0; l < m; ++l) out[l] += w * row[l];
      }
  return out;
}

/// Composition through an intermediate time:
///   P_{ijk,l} = sum_{n,g,d} left_{ijk,n} right_{ngd,l} x_g x_d.
inline KernelArray compose_kernels(const KernelArray& left, const KernelArray& right,
                                   std::span<const double> x_mid) {
  const std::size_t m = left.m();
  if (right.m() != m) throw DimensionMismatch(m, right.m());
  if (x_mid.size() != m) throw DimensionMismatch(m, x_mid.size());
  // transfer matrix T_{n,l} = sum_{g,d} right_{ngd,l} x_g x_d
  std::vector<double> transfer(m * m, 0.0);
  for (std::size_t n = 0; n < m; ++n)
    for (std::size_t g = 0; g < m; ++g)
      for (std::size_t d = 0; d < m; ++d) {
        const double w = x_mid[g] * x_mid[d];
        const auto row = right.row(n, g, d);
        for (std::size_t l = 0; l < m; ++l) transfer[n * m + l] += w * row[l];
      }
  KernelArray out(m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        const auto row = left.row(i, j, k);
        for (std::size_t n = 0; n < m; ++n) {
          if (row[n] == 0.0) continue;
          for (std::size_t l = 0; l < m; ++l) out(i, j, k, l) += row[n] * transfer[n * m + l];
        }
      }
  return out;
}

/// Anything that hands out two-time kernels P^{[s,t]} and marginals x^{(t)}
/// on a finite state space.
template <class F>
concept KernelFamily = requires(const F& f, int s, int t) {
  { f.m() } -> std::convertible_to<std::size_t>;
  { f.kernel(s, t) } -> std::convertible_to<KernelArray>;
  { f.state(t) } -> std::convertible_to<std::vector<double>>;
};

/// A CSP generated from its one-step kernel: states follow the one-step
/// law from x^{(0)}, and P^{[s,t]} for t-s >= 2 is composed through
/// tau = t-1 unless another split is requested with extend().
class CspKernelFamily {
 public:
  CspKernelFamily(const CubicTensor& base, const SimplexPoint& x0, int horizon)
      : CspKernelFamily(KernelArray::from_tensor(base), x0.vector(), horizon) {}

  /// Accepts an unvalidated base kernel so that defective inputs can be diagnosed.
  CspKernelFamily(KernelArray base, std::vector<double> x0, int horizon)
      : base_(std::move(base)), horizon_(horizon) {
    if (horizon_ < 1 || horizon_ > kMaxHorizon)
      throw std::invalid_argument("horizon must be in 1..64");
    if (x0.size() != base_.m()) throw DimensionMismatch(base_.m(), x0.size());
    states_.push_back(std::move(x0));
    for (int t = 1; t <= horizon_; ++t) states_.push_back(propagate(base_, states_.back()));
    for (int gap = 1; gap <= horizon_; ++gap)
      for (int s = 0; s + gap <= horizon_; ++s) {
        if (gap == 1)
          cache_.emplace(std::pair{s, s + 1}, Entry{base_, std::nullopt});
        else
          extend(s, s + gap - 1, s + gap);
      }
  }

  std::size_t m() const noexcept { return base_.m(); }
  int horizon() const noexcept { return horizon_; }
  const KernelArray& base() const noexcept { return base_; }

  const KernelArray& kernel(int s, int t) const {
    auto it = cache_.find({s, t});
    if (it == cache_.end()) throw KernelUnavailable(s, t);
    return it->second.kernel;
  }

  /// Split used to build P^{[s,t]}; empty for one-step kernels.
  std::optional<int> split_of(int s, int t) const {
    auto it = cache_.find({s, t});
    if (it == cache_.end()) throw KernelUnavailable(s, t);
    return it->second.tau;
  }

  const std::vector<double>& state(int t) const {
    if (t < 0 || t > horizon_) throw KernelUnavailable(t, t);
    return states_[static_cast<std::size_t>(t)];
  }

  /// Recomputes P^{[s,t]} through `tau` and stores it.
  const KernelArray& extend(int s, int tau, int t) {
    if (tau - s < 1 || t - tau < 1) throw InvalidTimeSplit(s, tau, t);
    KernelArray composed = compose_kernels(kernel(s, tau), kernel(tau, t), state(tau));
    auto& slot = cache_[{s, t}];
    slot = Entry{std::move(composed), tau};
    return slot.kernel;
  }

 private:
  struct Entry {
    KernelArray kernel;
    std::optional<int> tau;
  };

  KernelArray base_;
  int horizon_;
  std::vector<std::vector<double>> states_;
  std::map<std::pair<int, int>, Entry> cache_;
};

/// Example 1: the identity CSO on E = {1,2} with initial vector (x, 1-x).
///   P_{ijk,1}^{[s,t]} = 3^{-n} c/3 + (1 - 3^{-n}) x,  n = t-s-1,
/// c = number of indices among (i,j,k) equal to 1.
struct IdentityCsp {
  double x;
};

/// Example 2: P^{[s,t]}_{ijk,l} = a_l(t) for a stochastic-vector path a(t).
struct ForgetfulCsp {
  std::size_t m;
  std::function<std::vector<double>(double)> a;
};

/// Example 3 on finite E (delta_x(A) as an indicator):
///   P = 3^{-n} (d_il + d_jl + d_kl)/3 + (1 - 3^{-n}) m0_l,  n = t-s-1.
struct DeltaMixtureCsp {
  std::vector<double> m0;
};

/// Kernel families with a closed form, valid at real times with t-s >= 1.
class ClosedFormKernel {
 public:
  using Variant = std::variant<IdentityCsp, ForgetfulCsp, DeltaMixtureCsp>;

  ClosedFormKernel(Variant v) : v_(std::move(v)) {
    if (const auto* e = std::get_if<IdentityCsp>(&v_)) {
      if (!(e->x >= 0.0 && e->x <= 1.0)) throw InvalidSimplexPoint("x must lie in [0,1]");
    } else if (const auto* e2 = std::get_if<ForgetfulCsp>(&v_)) {
      if (e2->m < 1 || !e2->a) throw std::invalid_argument("example 2 needs m >= 1 and a(t)");
    } else {
      SimplexPoint check(std::get<DeltaMixtureCsp>(v_).m0);
    }
  }

  static ClosedFormKernel example1(double x) { return ClosedFormKernel(IdentityCsp{x}); }
  static ClosedFormKernel example2(std::size_t m, std::function<std::vector<double>(double)> a) {
    return ClosedFormKernel(ForgetfulCsp{m, std::move(a)});
  }
  static ClosedFormKernel example3(std::vector<double> m0) {
    return ClosedFormKernel(DeltaMixtureCsp{std::move(m0)});
  }

  const Variant& variant() const noexcept { return v_; }
  int example_number() const noexcept { return static_cast<int>(v_.index()) + 1; }

  std::size_t m() const {
    return std::visit(
        [](const auto& e) -> std::size_t {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, IdentityCsp>) return 2;
          else if constexpr (std::is_same_v<T, ForgetfulCsp>) return e.m;
          else return e.m0.size();
        },
        v_);
  }

  /// P^{[s,t]}_{ijk,l} at real times; throws InvalidTimeGap if t-s < 1.
  double eval(double s, double t, std::size_t i, std::size_t j, std::size_t k,
              std::size_t l) const {
    if (t - s < 1.0 - 1e-12) throw InvalidTimeGap(s, t);
    const double p = std::pow(3.0, -(t - s - 1.0));
    return std::visit(
        [&](const auto& e) -> double {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, IdentityCsp>) {
            const int ones = int(i == 0) + int(j == 0) + int(k == 0);
            const double first = p * ones / 3.0 + (1.0 - p) * e.x;
            return l == 0 ? first : 1.0 - first;
          } else if constexpr (std::is_same_v<T, ForgetfulCsp>) {
            return e.a(t).at(l);
          } else {
            const int hits = int(i == l) + int(j == l) + int(k == l);
            return p * hits / 3.0 + (1.0 - p) * e.m0[l];
          }
        },
        v_);
  }

  /// Marginal x^{(t)} generated from x^{(0)}.
  std::vector<double> state(double t) const {
    return std::visit(
        [&](const auto& e) -> std::vector<double> {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, IdentityCsp>) return {e.x, 1.0 - e.x};
          else if constexpr (std::is_same_v<T, ForgetfulCsp>) return e.a(t);
          else return e.m0;
        },
        v_);
  }
  std::vector<double> state(int t) const { return state(static_cast<double>(t)); }

  KernelArray kernel(double s, double t) const {
    const std::size_t m = this->m();
    KernelArray out(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
          for (std::size_t l = 0; l < m; ++l) out(i, j, k, l) = eval(s, t, i, j, k, l);
    return out;
  }
  KernelArray kernel(int s, int t) const {
    return kernel(static_cast<double>(s), static_cast<double>(t));
  }

  /// One-step kernel P^{[0,1]} as a validated tensor.
  CubicTensor base_tensor() const {
    return tensor_from_function(m(), [&](std::size_t i, std::size_t j, std::size_t k,
                                         std::size_t l) { return eval(0.0, 1.0, i, j, k, l); });
  }

 private:
  Variant v_;
};

inline double closed_form_eval(const ClosedFormKernel& kernel, double s, double t, std::size_t i,
                               std::size_t j, std::size_t k, std::size_t l) {
  return kernel.eval(s, t, i, j, k, l);
}

/// Example 1's one-step tensor (the identity CSO).
inline CubicTensor identity_cso_tensor() { return ClosedFormKernel::example1(0.5).base_tensor(); }

static_assert(KernelFamily<CspKernelFamily>);
static_assert(KernelFamily<ClosedFormKernel>);

}  // namespace cubicdyn
