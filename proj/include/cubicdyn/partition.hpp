#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cubicdyn/error.hpp"
#include "cubicdyn/simplex.hpp"

namespace cubicdyn {

inline constexpr std::size_t kMaxCells = 64;
inline constexpr std::size_t kMaxAtoms = 1'000'000;
inline constexpr double kMeasureSumTolerance = 1e-12;

/// A subset of the grid atoms {0..N-1}, kept sorted and unique.
class MeasurableSet {
 public:
  MeasurableSet() = default;
  MeasurableSet(std::size_t grid_size, std::vector<std::size_t> atoms)
      : grid_size_(grid_size), atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end());
    atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
    if (!atoms_.empty() && atoms_.back() >= grid_size_)
      throw InvalidPartition("set atom " + std::to_string(atoms_.back() + 1) +
                             " is outside the grid");
  }

  static MeasurableSet full(std::size_t grid_size) {
    std::vector<std::size_t> all(grid_size);
    for (std::size_t p = 0; p < grid_size; ++p) all[p] = p;
    return MeasurableSet(grid_size, std::move(all));
  }

  std::size_t grid_size() const noexcept { return grid_size_; }
  std::span<const std::size_t> atoms() const noexcept { return atoms_; }
  bool empty() const noexcept { return atoms_.empty(); }
  bool contains(std::size_t p) const { return std::binary_search(atoms_.begin(), atoms_.end(), p); }

  MeasurableSet unite(const MeasurableSet& other) const {
    std::vector<std::size_t> u;
    std::set_union(atoms_.begin(), atoms_.end(), other.atoms_.begin(), other.atoms_.end(),
                   std::back_inserter(u));
    return MeasurableSet(grid_size_, std::move(u));
  }

  friend bool operator==(const MeasurableSet&, const MeasurableSet&) = default;

 private:
  std::size_t grid_size_ = 0;
  std::vector<std::size_t> atoms_;
};

/// Reference measure mu on N atoms together with a partition into m cells.
/// Cells are zero-based here; text formats are one-based.
class PartitionMeasure {
 public:
  PartitionMeasure(std::size_t m, std::vector<std::size_t> cell_of, std::vector<double> atom_mass)
      : m_(m), cell_of_(std::move(cell_of)), atom_mass_(std::move(atom_mass)) {
    if (m_ < 1 || m_ > kMaxCells) throw InvalidPartition("cell count must be in 1..64");
    if (cell_of_.empty() || cell_of_.size() > kMaxAtoms)
      throw InvalidPartition("grid size must be in 1..1e6");
    if (cell_of_.size() != atom_mass_.size())
      throw InvalidPartition("cell_of and atom_mass differ in length");
    std::vector<std::vector<double>> per_cell(m_);
    for (std::size_t p = 0; p < cell_of_.size(); ++p) {
      if (cell_of_[p] >= m_)
        throw InvalidPartition("atom " + std::to_string(p + 1) + " has cell out of range");
      if (!(atom_mass_[p] > 0.0) || !std::isfinite(atom_mass_[p]))
        throw InvalidPartition("atom " + std::to_string(p + 1) + " must have positive mass");
      per_cell[cell_of_[p]].push_back(atom_mass_[p]);
    }
    const double total = compensated_sum(atom_mass_);
    if (std::abs(total - 1.0) > kMeasureSumTolerance)
      throw InvalidPartition("atom masses sum to " + std::to_string(total));
    cell_mass_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      if (per_cell[i].empty())
        throw InvalidPartition("cell " + std::to_string(i + 1) + " is empty");
      cell_mass_[i] = compensated_sum(per_cell[i]);
    }
  }

  std::size_t m() const noexcept { return m_; }
  std::size_t grid_size() const noexcept { return cell_of_.size(); }
  std::size_t cell_of(std::size_t p) const { return cell_of_[p]; }
  double atom_mass(std::size_t p) const { return atom_mass_[p]; }
  double cell_mass(std::size_t i) const { return cell_mass_[i]; }
  std::span<const double> cell_masses() const noexcept { return cell_mass_; }
  std::span<const std::size_t> cells() const noexcept { return cell_of_; }
  std::span<const double> atom_masses() const noexcept { return atom_mass_; }

  /// mu(A ∩ Omega_i) for every cell i.
  std::vector<double> intersect_masses(const MeasurableSet& a) const {
    check_grid(a);
    std::vector<std::vector<double>> per_cell(m_);
    for (std::size_t p : a.atoms()) per_cell[cell_of_[p]].push_back(atom_mass_[p]);
    std::vector<double> out(m_);
    for (std::size_t i = 0; i < m_; ++i) out[i] = compensated_sum(per_cell[i]);
    return out;
  }

  MeasurableSet cell_set(std::size_t i) const {
    std::vector<std::size_t> atoms;
    for (std::size_t p = 0; p < cell_of_.size(); ++p)
      if (cell_of_[p] == i) atoms.push_back(p);
    return MeasurableSet(grid_size(), std::move(atoms));
  }

  MeasurableSet full_set() const { return MeasurableSet::full(grid_size()); }

  void check_grid(const MeasurableSet& a) const {
    if (a.grid_size() != grid_size()) throw DimensionMismatch(grid_size(), a.grid_size());
  }

 private:
  std::size_t m_;
  std::vector<std::size_t> cell_of_;
  std::vector<double> atom_mass_;
  std::vector<double> cell_mass_;
};

/// The evolving measure lambda, stored per atom.
class StateMeasure {
 public:
  explicit StateMeasure(std::vector<double> atom_weights) : w_(std::move(atom_weights)) {
    if (w_.empty()) throw InvalidPartition("state measure needs at least one atom");
    for (double& v : w_) {
      if (!std::isfinite(v) || v < -kNegativeClamp)
        throw InvalidPartition("state measure weights must be nonnegative");
      if (v < 0.0) v = 0.0;
    }
    const double total = compensated_sum(w_);
    if (std::abs(total - 1.0) > kMeasureSumTolerance)
      throw InvalidPartition("state measure sums to " + std::to_string(total));
    if (total != 1.0)
      for (double& v : w_) v /= total;
  }

  static StateMeasure uniform(std::size_t n) {
    return StateMeasure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  /// Spreads cell masses over atoms proportionally to mu within each cell.
  static StateMeasure from_cell_masses(const PartitionMeasure& pm, const SimplexPoint& cells) {
    if (cells.dim() != pm.m()) throw DimensionMismatch(pm.m(), cells.dim());
    std::vector<double> w(pm.grid_size());
    for (std::size_t p = 0; p < w.size(); ++p) {
      const std::size_t c = pm.cell_of(p);
      w[p] = cells[c] * (pm.atom_mass(p) / pm.cell_mass(c));
    }
    return StateMeasure(std::move(w));
  }

  std::size_t grid_size() const noexcept { return w_.size(); }
  double weight(std::size_t p) const { return w_[p]; }
  std::span<const double> weights() const noexcept { return w_; }

  double measure_of(const MeasurableSet& a) const {
    std::vector<double> parts;
    parts.reserve(a.atoms().size());
    for (std::size_t p : a.atoms()) parts.push_back(w_.at(p));
    return compensated_sum(parts);
  }

  /// lambda(Omega_i) for every cell.
  std::vector<double> cell_masses(const PartitionMeasure& pm) const {
    if (pm.grid_size() != w_.size()) throw DimensionMismatch(pm.grid_size(), w_.size());
    std::vector<std::vector<double>> per_cell(pm.m());
    for (std::size_t p = 0; p < w_.size(); ++p) per_cell[pm.cell_of(p)].push_back(w_[p]);
    std::vector<double> out(pm.m());
    for (std::size_t i = 0; i < pm.m(); ++i) out[i] = compensated_sum(per_cell[i]);
    return out;
  }

 private:
  std::vector<double> w_;
};

}  // namespace cubicdyn
