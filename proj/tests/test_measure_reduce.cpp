#include <gtest/gtest.h>

#include <random>

#include "cubicdyn/measure_reduce.hpp"
#include "oracles.hpp"

using namespace cubicdyn;

namespace {

template <class T>
std::vector<T> vec(std::span<const T> s) {
  return {s.begin(), s.end()};
}

std::vector<bool> membership(const MeasurableSet& a, std::size_t n) {
  std::vector<bool> in(n, false);
  for (std::size_t p : a.atoms()) in[p] = true;
  return in;
}

MeasurableSet random_set(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> atoms;
  for (std::size_t p = 0; p < n; ++p)
    if (oracle::uniform(rng) < 0.4) atoms.push_back(p);
  return MeasurableSet(n, atoms);
}

StateMeasure random_state(std::size_t n, std::mt19937_64& rng) {
  return StateMeasure(oracle::random_simplex(n, rng));
}

}  // namespace

TEST(Partition, RejectsInvalidInput) {
  EXPECT_THROW(PartitionMeasure(2, {0, 0}, {0.5, 0.5}), InvalidPartition);
  EXPECT_THROW(PartitionMeasure(2, {0, 1}, {0.0, 1.0}), InvalidPartition);
  EXPECT_THROW(PartitionMeasure(2, {0, 1}, {0.5, 0.6}), InvalidPartition);
  EXPECT_THROW(PartitionMeasure(2, {0, 2}, {0.5, 0.5}), InvalidPartition);
  EXPECT_THROW(PartitionMeasure(0, {}, {}), InvalidPartition);
}

TEST(Partition, CellMassesAndSets) {
  PartitionMeasure pm(2, {0, 1, 0}, {0.25, 0.5, 0.25});
  EXPECT_DOUBLE_EQ(pm.cell_mass(0), 0.5);
  EXPECT_EQ(vec(pm.cell_set(0).atoms()), (std::vector<std::size_t>{0, 2}));
  auto inter = pm.intersect_masses(MeasurableSet(3, {2, 1}));
  EXPECT_DOUBLE_EQ(inter[0], 0.25);
  EXPECT_DOUBLE_EQ(inter[1], 0.5);
  EXPECT_THROW(pm.intersect_masses(MeasurableSet(4, {0})), DimensionMismatch);
}

TEST(RawCoefficient, CasesAndUnitExample) {
  PartitionMeasure pm(2, {0, 1}, {0.4, 0.6});
  EXPECT_DOUBLE_EQ(raw_coefficient(pm, 0, 0, 0, 0), 1.0);
  EXPECT_EQ(raw_coefficient(pm, 1, 1, 1, 0), 0.0);
  // two of the three indices hit l, so <ijk,l> = 2
  EXPECT_NEAR(raw_coefficient(pm, 0, 0, 1, 0), 2 * 0.4 / 1.4, 1e-16);
  EXPECT_NEAR(raw_coefficient(pm, 0, 1, 1, 0), 0.4 / 1.6, 1e-16);
}

TEST(KernelMeasure, FullSpaceAndCells) {
  std::mt19937_64 rng(1);
  auto pm = oracle::to_measure(oracle::random_partition(20, 4, rng));
  const auto full = pm.full_set();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(kernel_measure(pm, i, j, k, full), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(kernel_measure(pm, 2, 2, 2, pm.cell_set(2)), 1.0);
  EXPECT_EQ(kernel_measure(pm, 2, 2, 2, pm.cell_set(1)), 0.0);
}

TEST(KernelMeasure, DistinctCellsUnitExample) {
  PartitionMeasure pm(3, {0, 1, 2}, {0.2, 0.3, 0.5});
  EXPECT_NEAR(kernel_measure(pm, 0, 1, 2, pm.cell_set(1)), 0.09 / 0.38, 1e-15);
}

TEST(KernelMeasure, MatchesOracleSymmetricAndAdditive) {
  std::mt19937_64 rng(2);
  auto part = oracle::random_partition(30, 5, rng);
  auto pm = oracle::to_measure(part);
  const auto cm = oracle::cell_masses(part, part.mass);
  for (int rep = 0; rep < 5; ++rep) {
    auto a = random_set(30, rng);
    std::vector<std::size_t> rest;
    for (std::size_t p = 0; p < 30; ++p)
      if (!a.contains(p) && oracle::uniform(rng) < 0.5) rest.push_back(p);
    MeasurableSet b(30, rest);
    const auto ia = oracle::inter(part, membership(a, 30));
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t k = 0; k < 5; ++k) {
          const double v = kernel_measure(pm, i, j, k, a);
          EXPECT_NEAR(v, static_cast<double>(oracle::kernel(cm, ia, i, j, k)), 1e-15);
          EXPECT_EQ(v, kernel_measure(pm, k, i, j, a));
          EXPECT_EQ(v, kernel_measure(pm, j, k, i, a));
          EXPECT_EQ(v, kernel_measure(pm, i, k, j, a));
          EXPECT_NEAR(kernel_measure(pm, i, j, k, a.unite(b)), v + kernel_measure(pm, i, j, k, b),
                      1e-15);
        }
  }
}

TEST(Coefficients, CellTargets) {
  PartitionMeasure pm(2, {0, 1}, {0.4, 0.6});
  auto c1 = coefficients_abc(pm, pm.cell_set(0));
  EXPECT_DOUBLE_EQ(c1.a[0], 1.0);
  EXPECT_EQ(c1.a[1], 0.0);
  EXPECT_NEAR(c1.b_at(0, 1), 8.0 / 17, 1e-15);

  PartitionMeasure pm3(4, {0, 1, 2, 3}, {0.1, 0.2, 0.3, 0.4});
  auto c = coefficients_abc(pm3, pm3.cell_set(3));
  EXPECT_EQ(c.c_at(0, 1, 2), 0.0);
  EXPECT_GT(c.c_at(0, 1, 3), 0.0);
}

TEST(ApplyMeasureCso, FullSpaceAndConcentratedState) {
  std::mt19937_64 rng(4);
  auto part = oracle::random_partition(12, 3, rng);
  auto pm = oracle::to_measure(part);
  auto lam = random_state(12, rng);
  EXPECT_NEAR(apply_measure_cso(pm, lam, pm.full_set()), 1.0, 1e-15);

  std::vector<double> w(12, 0.0);
  std::size_t in_cell = 0;
  for (std::size_t p = 0; p < 12; ++p)
    if (part.cell[p] == 1) ++in_cell;
  for (std::size_t p = 0; p < 12; ++p)
    if (part.cell[p] == 1) w[p] = 1.0 / static_cast<double>(in_cell);
  StateMeasure conc(w);
  auto a = random_set(12, rng);
  EXPECT_NEAR(apply_measure_cso(pm, conc, a), pm.intersect_masses(a)[1] / pm.cell_mass(1), 1e-15);
}

TEST(ApplyMeasureCso, MatchesTripleSumOverAtoms) {
  std::mt19937_64 rng(6);
  auto part = oracle::random_partition(12, 3, rng);
  auto pm = oracle::to_measure(part);
  auto lam = StateMeasure::uniform(12);
  for (int rep = 0; rep < 4; ++rep) {
    auto a = rep == 0 ? pm.cell_set(0) : random_set(12, rng);
    const double ref = static_cast<double>(oracle::step_set(part, vec(lam.weights()), membership(a, 12)));
    EXPECT_NEAR(apply_measure_cso(pm, lam, a), ref, 1e-12);
  }
}

TEST(Reduce, SingleCell) {
  auto t = reduce_to_volterra(PartitionMeasure(1, {0, 0}, {0.5, 0.5}));
  EXPECT_EQ(t.m(), 1u);
  EXPECT_EQ(t.at(0, 0, 0, 0), 1.0);
}

TEST(Reduce, EqualMassesGiveIdentityCso) {
  auto t = reduce_to_volterra(PartitionMeasure(2, {0, 1}, {0.5, 0.5}));
  EXPECT_NEAR(t.at(0, 0, 1, 0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(t.at(0, 1, 1, 0), 1.0 / 3, 1e-15);
  EXPECT_NEAR(t.at(0, 1, 1, 1), 2.0 / 3, 1e-15);
  SimplexPoint x({0.37, 0.63});
  EXPECT_LE(apply_cso(t, x).sup_distance(x), 1e-15);
}

TEST(Reduce, VolterraSymmetricAndMatchesMeasureCso) {
  std::mt19937_64 rng(8);
  for (std::size_t m : {2u, 3u, 5u}) {
    auto part = oracle::random_partition(4 * m, m, rng);
    auto pm = oracle::to_measure(part);
    auto t = reduce_to_volterra(pm);
    EXPECT_TRUE(is_volterra(t));
    EXPECT_TRUE(t.symmetric());
    const auto cm = oracle::cell_masses(part, part.mass);
    for (std::size_t l = 0; l < m; ++l) {
      const auto il = oracle::inter(part, membership(pm.cell_set(l), part.mass.size()));
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          for (std::size_t k = 0; k < m; ++k)
            EXPECT_NEAR(t.at(i, j, k, l), static_cast<double>(oracle::kernel(cm, il, i, j, k)),
                        1e-15);
    }
    for (int n = 0; n < 100; ++n) {
      auto lam = random_state(4 * m, rng);
      auto y = apply_cso(t, SimplexPoint(lam.cell_masses(pm)));
      for (std::size_t l = 0; l < m; ++l)
        EXPECT_NEAR(y[l], apply_measure_cso(pm, lam, pm.cell_set(l)), 1e-12);
    }
  }
}

TEST(StepMeasure, MatchesAtomOracleAndKeepsWithinCellProfile) {
  std::mt19937_64 rng(10);
  auto part = oracle::random_partition(15, 3, rng);
  auto pm = oracle::to_measure(part);
  auto lam = random_state(15, rng);
  auto next = step_measure(pm, lam);
  auto ref = oracle::step_atoms(part, vec(lam.weights()));
  for (std::size_t p = 0; p < 15; ++p) EXPECT_NEAR(next.weights()[p], ref[p], 1e-15);
  // image restricted to a cell is proportional to mu there
  const auto cells = next.cell_masses(pm);
  for (std::size_t p = 0; p < 15; ++p)
    EXPECT_NEAR(next.weights()[p], cells[part.cell[p]] * part.mass[p] / pm.cell_mass(part.cell[p]),
                1e-15);
}

TEST(IterateMeasure, FullSpaceIsConstant) {
  std::mt19937_64 rng(12);
  auto pm = oracle::to_measure(oracle::random_partition(10, 3, rng));
  auto v = iterate_measure(pm, random_state(10, rng), 20, pm.full_set());
  ASSERT_EQ(v.size(), 21u);
  for (double x : v) EXPECT_NEAR(x, 1.0, 1e-14);
}

TEST(IterateMeasure, VertexStartIsFixed) {
  PartitionMeasure pm(3, {0, 1, 2, 1}, {0.3, 0.2, 0.4, 0.1});
  StateMeasure lam({0.0, 0.5, 0.0, 0.5});
  MeasurableSet a(4, {1, 2});
  auto v = iterate_measure(pm, lam, 8, a);
  for (std::size_t n = 1; n < v.size(); ++n) EXPECT_NEAR(v[n], 0.2 / 0.3, 1e-15);
}

TEST(IterateMeasure, MatchesDirectIteration) {
  PartitionMeasure pm(2, {0, 1}, {0.4, 0.6});
  auto lam = StateMeasure::uniform(2);
  const auto a = pm.cell_set(0);
  auto v = iterate_measure(pm, lam, 10, a);
  oracle::Partition part{2, {0, 1}, {0.4, 0.6}};
  auto w = vec(lam.weights());
  for (std::size_t n = 0; n <= 10; ++n) {
    EXPECT_NEAR(v[n], w[0], 1e-12) << "n=" << n;
    w = oracle::step_atoms(part, w);
  }
}

TEST(LimitMeasure, VertexAndFullSpace) {
  std::mt19937_64 rng(14);
  auto pm = oracle::to_measure(oracle::random_partition(9, 3, rng));
  auto a = random_set(9, rng);
  EXPECT_NEAR(limit_measure(pm, SimplexPoint::vertex(3, 2), a),
              pm.intersect_masses(a)[2] / pm.cell_mass(2), 1e-15);
  EXPECT_NEAR(limit_measure(pm, SimplexPoint::barycenter(3), pm.full_set()), 1.0, 1e-15);
  EXPECT_THROW(limit_measure(pm, SimplexPoint::barycenter(2), a), DimensionMismatch);
}

TEST(LimitMeasure, AgreesWithOrbitTail) {
  PartitionMeasure pm(3, {0, 1, 2, 0, 1, 2}, {0.05, 0.1, 0.15, 0.2, 0.25, 0.25});
  auto lam = StateMeasure::uniform(6);
  MeasurableSet a(6, {0, 1, 5});
  auto t = reduce_to_volterra(pm);
  auto orbit = iterate(t, SimplexPoint(lam.cell_masses(pm)), 200000, 1e-15);
  ASSERT_TRUE(orbit.converged);
  auto seq = iterate_measure(pm, lam, orbit.iterations_used, a);
  EXPECT_NEAR(limit_measure(pm, *orbit.limit, a), seq.back(), 1e-8);
}
