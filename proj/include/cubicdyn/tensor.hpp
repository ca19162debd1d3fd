#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cubicdyn/error.hpp"

namespace cubicdyn {

/// Heredity-coefficient index (i, j, k, l), zero-based in the C++ API.
/// Text formats and messages use one-based indices.
using TensorIndex = std::array<std::size_t, 4>;
using RawEntries = std::vector<std::pair<TensorIndex, double>>;

inline constexpr std::size_t kDenseLimit = 32;
inline constexpr double kRowSumTolerance = 1e-9;
// rows closer to 1 than this are stored untouched
inline constexpr double kRenormalizeSlack = 1e-13;

enum class IssueKind { negative_coefficient, row_sum_violation, index_out_of_range };

struct TensorIssue {
  IssueKind kind;
  TensorIndex index;  // zero-based; l is unused for row-sum issues
  double value;

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    const auto [i, j, k, l] = index;
    switch (kind) {
      case IssueKind::negative_coefficient:
        os << "NegativeCoefficient(" << i + 1 << "," << j + 1 << "," << k + 1 << ","
           << l + 1 << ") = " << value;
        break;
      case IssueKind::row_sum_violation:
        os << "RowSumViolation(" << i + 1 << "," << j + 1 << "," << k + 1 << ", " << value
           << ")";
        break;
      case IssueKind::index_out_of_range:
        os << "IndexOutOfRange(" << i + 1 << "," << j + 1 << "," << k + 1 << "," << l + 1
           << ")";
        break;
    }
    return os.str();
  }
};

struct ValidationReport {
  std::vector<TensorIssue> issues;

  bool ok() const noexcept { return issues.empty(); }

  std::string to_string() const {
    std::string out;
    for (const auto& issue : issues) out += issue.describe() + "\n";
    return out;
  }
};

class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report)
      : Error("invalid cubic tensor:\n" + report.to_string()), report_(std::move(report)) {}
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

class CubicTensor;
struct TensorValidation;

TensorValidation validate_tensor(const RawEntries& entries, std::size_t m);
CubicTensor make_tensor(const RawEntries& entries, std::size_t m);
CubicTensor symmetrize(const CubicTensor& t);

/// Stochastic cubic tensor P_{ijk,l}: nonnegative, rows (i,j,k) sum to one
/// over l. Dense for m <= 32, an ordered sparse map above. Only obtainable
/// through validate_tensor / make_tensor / symmetrize, so every instance
/// satisfies the stochasticity invariants.
class CubicTensor {
 public:
  std::size_t m() const noexcept { return m_; }
  bool symmetric() const noexcept { return symmetric_; }
  bool is_dense() const noexcept { return m_ <= kDenseLimit; }

  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    if (is_dense()) return dense_[offset(i, j, k, l)];
    auto it = sparse_.find(offset(i, j, k, l));
    return it == sparse_.end() ? 0.0 : it->second;
  }

  /// Visits nonzero entries in lexicographic (i,j,k,l) order.
  template <class F>
  void for_each_nonzero(F&& f) const {
    if (is_dense()) {
      std::size_t off = 0;
      for (std::size_t i = 0; i < m_; ++i)
        for (std::size_t j = 0; j < m_; ++j)
          for (std::size_t k = 0; k < m_; ++k)
            for (std::size_t l = 0; l < m_; ++l, ++off)
              if (dense_[off] != 0.0) f(i, j, k, l, dense_[off]);
    } else {
      for (const auto& [key, v] : sparse_) {
        const auto idx = unpack(key);
        f(idx[0], idx[1], idx[2], idx[3], v);
      }
    }
  }

  /// Contiguous row P_{ijk,·}; dense storage only.
  const double* dense_row(std::size_t i, std::size_t j, std::size_t k) const {
    return dense_.data() + offset(i, j, k, 0);
  }

  std::size_t nonzero_count() const {
    if (!is_dense()) return sparse_.size();
    return static_cast<std::size_t>(
        std::count_if(dense_.begin(), dense_.end(), [](double v) { return v != 0.0; }));
  }

  friend bool operator==(const CubicTensor& a, const CubicTensor& b) {
    if (a.m_ != b.m_) return false;
    bool same = true;
    a.for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                           double v) { same = same && b.at(i, j, k, l) == v; });
    return same && a.nonzero_count() == b.nonzero_count();
  }

 private:
  friend TensorValidation validate_tensor(const RawEntries&, std::size_t);
  friend CubicTensor symmetrize(const CubicTensor&);

  CubicTensor(std::size_t m) : m_(m) {
    if (is_dense()) dense_.assign(m * m * m * m, 0.0);
  }

  std::uint64_t offset(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return ((static_cast<std::uint64_t>(i) * m_ + j) * m_ + k) * m_ + l;
  }

  TensorIndex unpack(std::uint64_t key) const {
    TensorIndex idx{};
    for (int d = 3; d >= 0; --d) {
      idx[static_cast<std::size_t>(d)] = static_cast<std::size_t>(key % m_);
      key /= m_;
    }
    return idx;
  }

  void set(std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v) {
    if (is_dense()) {
      dense_[offset(i, j, k, l)] = v;
    } else if (v != 0.0) {
      sparse_[offset(i, j, k, l)] = v;
    } else {
      sparse_.erase(offset(i, j, k, l));
    }
  }

  bool compute_symmetric() const {
    bool sym = true;
    for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                         double v) {
      if (!sym) return;
      sym = at(i, k, j, l) == v && at(j, i, k, l) == v && at(j, k, i, l) == v &&
            at(k, i, j, l) == v && at(k, j, i, l) == v;
    });
    return sym;
  }

  std::size_t m_ = 0;
  bool symmetric_ = false;
  std::vector<double> dense_;
  std::map<std::uint64_t, double> sparse_;
};

struct TensorValidation {
  std::optional<CubicTensor> tensor;
  ValidationReport report;
};

/// Checks nonnegativity and row-stochasticity of `entries` (omitted entries
/// are zero, later duplicates overwrite earlier ones). On success the
/// returned tensor has rows renormalized and its symmetric flag computed.
inline TensorValidation validate_tensor(const RawEntries& entries, std::size_t m) {
  TensorValidation result;
  if (m == 0) {
    result.report.issues.push_back({IssueKind::index_out_of_range, {0, 0, 0, 0}, 0.0});
    return result;
  }
  CubicTensor t(m);
  for (const auto& [idx, value] : entries) {
    if (idx[0] >= m || idx[1] >= m || idx[2] >= m || idx[3] >= m) {
      result.report.issues.push_back({IssueKind::index_out_of_range, idx, value});
      continue;
    }
    double v = value;
    if (!(v >= -kNegativeClamp)) {
      result.report.issues.push_back({IssueKind::negative_coefficient, idx, value});
      continue;
    }
    if (v < 0.0) v = 0.0;
    t.set(idx[0], idx[1], idx[2], idx[3], v);
  }

  // row sums accumulate in ascending l, which is the visiting order
  std::vector<double> sums(m * m * m, 0.0);
  t.for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t k, std::size_t, double v) {
    sums[(i * m + j) * m + k] += v;
  });
  for (std::size_t r = 0; r < sums.size(); ++r) {
    const double sum = sums[r];
    if (!(std::abs(sum - 1.0) <= kRowSumTolerance))
      result.report.issues.push_back(
          {IssueKind::row_sum_violation, {r / (m * m), (r / m) % m, r % m, 0}, sum});
  }
  if (result.report.ok()) {
    std::vector<std::pair<TensorIndex, double>> rescaled;
    t.for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l,
                           double v) {
      const double sum = sums[(i * m + j) * m + k];
      if (std::abs(sum - 1.0) > kRenormalizeSlack) rescaled.push_back({{i, j, k, l}, v / sum});
    });
    for (const auto& [idx, v] : rescaled) t.set(idx[0], idx[1], idx[2], idx[3], v);
  }

  if (result.report.ok()) {
    t.symmetric_ = t.compute_symmetric();
    result.tensor = std::move(t);
  }
  return result;
}

/// Throwing variant of validate_tensor.
inline CubicTensor make_tensor(const RawEntries& entries, std::size_t m) {
  auto v = validate_tensor(entries, m);
  if (!v.tensor) throw ValidationError(std::move(v.report));
  return std::move(*v.tensor);
}

/// Builds a tensor from a coefficient function of zero-based (i,j,k,l).
template <class F>
CubicTensor tensor_from_function(std::size_t m, F&& coefficient) {
  RawEntries entries;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k)
        for (std::size_t l = 0; l < m; ++l) {
          const double v = coefficient(i, j, k, l);
          if (v != 0.0) entries.push_back({{i, j, k, l}, v});
        }
  return make_tensor(entries, m);
}

/// Mean over the six orderings of (i,j,k). The mean is computed once per
/// sorted multiset and written to every ordering, so the output is exactly
/// symmetric.
inline CubicTensor symmetrize(const CubicTensor& t) {
  const std::size_t m = t.m();
  CubicTensor out(m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b)
      for (std::size_t c = b; c < m; ++c) {
        const std::array<std::array<std::size_t, 3>, 6> perms{{{a, b, c},
                                                               {a, c, b},
                                                               {b, a, c},
                                                               {b, c, a},
                                                               {c, a, b},
                                                               {c, b, a}}};
        for (std::size_t l = 0; l < m; ++l) {
          double sum = 0.0;
          for (const auto& p : perms) sum += t.at(p[0], p[1], p[2], l);
          const double mean = sum / 6.0;
          if (mean == 0.0) continue;
          for (const auto& p : perms) out.set(p[0], p[1], p[2], l, mean);
        }
      }
  out.symmetric_ = true;
  return out;
}

}  // namespace cubicdyn
