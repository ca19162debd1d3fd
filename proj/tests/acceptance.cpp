// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cubicdyn.hpp"
#include "oracles.hpp"

using namespace cubicdyn;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

CubicTensor random_tensor(std::size_t m, std::mt19937_64& rng) {
  return make_tensor(oracle::to_entries(oracle::random_stochastic(m, rng, true), m), m);
}

ClosedFormKernel smooth_example2() {
  return ClosedFormKernel::example2(2, [](double t) {
    const double a = (1 + std::exp(-t)) / 2;
    return std::vector<double>{a, 1 - a};
  });
}

ClosedFormKernel const_example2() {
  return ClosedFormKernel::example2(3, [](double) { return std::vector<double>{0.2, 0.5, 0.3}; });
}

SimplexPoint random_point(std::size_t m, std::mt19937_64& rng) {
  return SimplexPoint(random_simplex_coords(m, rng));
}

Outcome identity_cso() {
  std::mt19937_64 rng(101);
  const CubicTensor t = ClosedFormKernel::example1(0.5).base_tensor();
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    const SimplexPoint x = random_point(2, rng);
    worst = std::max(worst, apply_cso(t, x).sup_distance(x));
  }
  return {worst <= 1e-12, "max |W(x)-x| = " + sci(worst)};
}

Outcome example1_closed_vs_recursive() {
  std::mt19937_64 rng(102);
  const int horizon = 8;
  double worst = 0.0;
  for (int n = 0; n < 20; ++n) {
    const double x = uniform01(rng);
    const ClosedFormKernel closed = ClosedFormKernel::example1(x);
    const CspKernelFamily fam(closed.base_tensor(), SimplexPoint({x, 1 - x}), horizon);
    for (int s = 0; s < horizon; ++s)
      for (int t = s + 1; t <= std::min(horizon, s + 6); ++t) {
        const KernelArray& rec = fam.kernel(s, t);
        worst = std::max(worst, rec.sup_distance(closed.kernel(s, t)));
        for (std::size_t i = 0; i < 2; ++i)
          for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t k = 0; k < 2; ++k)
              for (std::size_t l = 0; l < 2; ++l)
                worst = std::max(worst, std::abs(rec(i, j, k, l) - oracle::example1(x, t - s, i, j, k, l)));
      }
  }
  return {worst <= 1e-10, "sup-norm gap " + sci(worst) + " over gaps 1..6, 20 initial points"};
}

Outcome stationary_one_step() {
  std::mt19937_64 rng(103);
  std::vector<std::pair<CubicTensor, std::vector<double>>> bases = {
      {ClosedFormKernel::example1(0.3).base_tensor(), {0.3, 0.7}},
      {const_example2().base_tensor(), {0.1, 0.6, 0.3}},
      {ClosedFormKernel::example3({0.2, 0.3, 0.5}).base_tensor(), {0.2, 0.3, 0.5}},
      {random_tensor(3, rng), random_simplex_coords(3, rng)},
      {random_tensor(4, rng), random_simplex_coords(4, rng)},
  };
  std::size_t checked = 0;
  for (const auto& [base, x0] : bases) {
    const CspKernelFamily fam(base, SimplexPoint(x0), 11);
    const KernelArray expected = KernelArray::from_tensor(base);
    for (int t = 0; t <= 10; ++t, ++checked)
      if (!(fam.kernel(t, t + 1) == expected))
        return {false, "P[" + std::to_string(t) + "," + std::to_string(t + 1) + "] differs"};
  }
  return {true, std::to_string(checked) + " one-step kernels bit-identical to the base"};
}

Outcome chapman_kolmogorov() {
  double worst = 0.0;
  auto sweep = [&](const auto& fam, int horizon) {
    for (int s = 0; s < horizon; ++s)
      for (int t = s + 2; t <= std::min(horizon, s + 5); ++t) {
        const CkReport r = ck_check_A(fam, s, t, all_splits(s, t), 1e-10);
        worst = std::max({worst, r.max_residual, r.max_pairwise});
      }
  };
  const std::vector<ClosedFormKernel> examples{ClosedFormKernel::example1(0.3), const_example2(),
                                               smooth_example2(),
                                               ClosedFormKernel::example3({0.2, 0.3, 0.5})};
  for (const auto& k : examples) {
    sweep(k, 6);
    sweep(CspKernelFamily(k.base_tensor(), SimplexPoint(k.state(0)), 6), 6);
  }
  std::mt19937_64 rng(104);
  const CspKernelFamily random(random_tensor(3, rng), random_point(3, rng), 5);
  const CkReport r = ck_check_A(random, 0, 5, all_splits(0, 5), 1e-10);
  return {worst <= 1e-10 && r.splits.size() == 4,
          "examples max residual " + sci(worst) + "; random tensor report residual " +
              sci(r.max_pairwise) + " (unconstrained)"};
}

struct ReductionSweep {
  double orbit_gap = 0.0;
  double limit_gap = 0.0;
  bool structure = true;
  std::size_t cases = 0;
  std::size_t limits = 0;
};

// The cubic step triples any mass defect, so each direct step is projected
// back onto total mass 1.
std::vector<double> direct_step(const oracle::Partition& part, const std::vector<double>& lambda) {
  std::vector<double> next = oracle::step_atoms(part, lambda);
  long double total = 0.0L;
  for (double v : next) total += v;
  for (double& v : next) v = static_cast<double>(v / total);
  return next;
}

ReductionSweep reduction_sweep() {
  std::mt19937_64 rng(105);
  const std::size_t ms[] = {2, 3, 5};
  ReductionSweep out;
  for (int n = 0; n < 10; ++n) {
    const std::size_t m = ms[n % 3];
    const std::size_t atoms = m + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(61 - m));
    const oracle::Partition part = oracle::random_partition(std::min<std::size_t>(atoms, 60), m, rng);
    const PartitionMeasure pm = oracle::to_measure(part);
    const CubicTensor reduced = reduce_to_volterra(pm);
    out.structure = out.structure && is_volterra(reduced) && reduced.symmetric();

    std::vector<std::size_t> in_a;
    std::vector<bool> mask(part.cell.size(), false);
    for (std::size_t a = 0; a < part.cell.size(); ++a)
      if (uniform01(rng) < 0.5) {
        in_a.push_back(a);
        mask[a] = true;
      }
    const MeasurableSet set(part.cell.size(), in_a);

    for (int r = 0; r < 10; ++r, ++out.cases) {
      std::vector<double> lambda = random_simplex_coords(part.cell.size(), rng);
      SimplexPoint cells(StateMeasure(lambda).cell_masses(pm));
      for (int step = 0; step < 50; ++step) {
        lambda = direct_step(part, lambda);
        cells = apply_cso(reduced, cells);
        const auto direct = oracle::cell_masses(part, lambda);
        for (std::size_t i = 0; i < m; ++i)
          out.orbit_gap = std::max(out.orbit_gap, static_cast<double>(std::abs(direct[i] - cells[i])));
      }
      const Orbit orbit = iterate(reduced, cells, 20000, 1e-13);
      if (!orbit.converged) continue;
      for (std::size_t step = 0; step < orbit.iterations_used; ++step) lambda = direct_step(part, lambda);
      long double direct_a = 0.0L;
      for (std::size_t a : in_a) direct_a += lambda[a];
      ++out.limits;
      out.limit_gap = std::max(out.limit_gap, std::abs(limit_measure(pm, *orbit.limit, set) -
                                                       static_cast<double>(direct_a)));
    }
  }
  return out;
}

const ReductionSweep& reductions() {
  static const ReductionSweep s = reduction_sweep();
  return s;
}

Outcome reduction_equivalence() {
  const auto& s = reductions();
  return {s.orbit_gap <= 1e-10 && s.limit_gap <= 1e-8 && s.limits == s.cases,
          "orbit gap " + sci(s.orbit_gap) + " over " + std::to_string(s.cases) +
              " runs of 50 steps; limit gap " + sci(s.limit_gap) + " at " +
              std::to_string(s.limits) + " converged orbits"};
}

Outcome reduced_structure() {
  return {reductions().structure, "is_volterra and symmetric on every reduced tensor"};
}

DensityKernel builtin() { return DensityKernel(GaussianCspParams::builtin(0.5)); }

std::vector<CompositionProbe> grid_probes() {
  std::vector<CompositionProbe> out;
  for (double sum : {-1.0, 0.0, 1.0})
    for (double off : {-1.2, 0.3, 1.1}) out.push_back({sum / 2, -sum / 4, 3 * sum / 4, sum + off});
  return out;
}

Outcome gaussian_family() {
  std::mt19937_64 rng(107);
  double ab = 0.0;
  for (int n = 0; n < 100; ++n) {
    const double eps = 0.05 + 0.9 * uniform01(rng);
    const double s = 3 * uniform01(rng), tau = s + 1 + 2 * uniform01(rng), t = tau + 1 + 2 * uniform01(rng);
    ab = std::max(ab, check_ab_relation(GaussianCspParams::builtin(eps), s, tau, t));
  }
  const QuadratureSpec q;
  const auto good = verify_composition(builtin(), q, 0, 1, 2, grid_probes());
  const auto bad = verify_composition(
      DensityKernel(GaussianCspParams::custom([](double s, double t) { return t - s; }, [](double) { return 0.1; })),
      q, 0, 1, 2, grid_probes());
  return {ab <= 1e-14 && good.max_rel <= 1e-6 && bad.max_rel > 1e-2,
          "ab " + sci(ab) + "; composition " + sci(good.max_rel) + "; control " + sci(bad.max_rel)};
}

Outcome normalization_and_cdf() {
  const DensityKernel k = builtin();
  const QuadratureSpec q;
  double norm = 0.0, ends = 0.0;
  bool monotone = true;
  for (double s : {0.0, 1.5})
    for (double gap : {1.0, 2.5, 6.0})
      for (double y : {-0.7, 0.2}) {
        norm = std::max(norm, std::abs(normalization(k, q, s, 0.3, y, -0.1, s + gap) - 1.0));
        double prev = 0.0;
        for (int i = 0; i <= 400; ++i) {
          const double v = cumulative_F(k, s, 0.3, y, -0.1, s + gap, -20.0 + 0.1 * i);
          monotone = monotone && v >= prev;
          prev = v;
        }
        ends = std::max({ends, cumulative_F(k, s, 0.3, y, -0.1, s + gap, -40.0),
                         1.0 - cumulative_F(k, s, 0.3, y, -0.1, s + gap, 40.0)});
      }
  return {norm <= 1e-8 && monotone && ends <= 1e-12,
          "|int f - 1| " + sci(norm) + "; endpoints " + sci(ends) + (monotone ? "; monotone" : "; not monotone")};
}

Outcome coefficient_moments() {
  std::mt19937_64 rng(109);
  std::vector<CoefficientProbe> probes;
  for (int n = 0; n < 20; ++n)
    probes.push_back({std::floor(3 * uniform01(rng)), 2 * uniform01(rng) - 1, 2 * uniform01(rng) - 1,
                      2 * uniform01(rng) - 1});
  const auto est = estimate_coefficients(builtin(), QuadratureSpec{}, probes, default_deltas());
  double drift = 0.0;
  bool d2_diverges = true;
  for (std::size_t n = 0; n < probes.size(); ++n) {
    const auto& p = est.probes[n];
    drift = std::max({drift, std::abs(p.D_y.value + probes[n].y), std::abs(p.D_z.value + probes[n].z)});
    if (!p.D_y.converged || !p.D_z.converged) drift = INFINITY;
    d2_diverges = d2_diverges && !p.D2_y.converged && !p.D2_z.converged;
  }
  return {drift <= 1e-8 && d2_diverges,
          "|D + y| " + sci(drift) + (d2_diverges ? "; D2 non-convergent as expected" : "; D2 converged")};
}

Outcome generator_order() {
  const ClosedFormKernel k = smooth_example2();
  const std::vector<double> steps{0.1, 0.05, 0.025, 0.0125};
  const std::vector<GeneratorProbe> probes{{0, 3.5, 0, 1, 1, 0}, {0, 4, 0, 0, 0, 0},
                                           {0.5, 4.5, 1, 1, 0, 1}, {1, 5, 1, 1, 1, 1}};
  const auto fwd = residual_generator(k, GeneratorEquation::forward, probes, steps);
  double lo = INFINITY, hi = 0.0;
  for (const auto& p : fwd.probes) {
    if (p.ratios.size() != 3) return {false, "missing refinement levels"};
    for (double r : p.ratios) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  const auto back = residual_generator(k, GeneratorEquation::backward, probes, steps);
  double back_worst = 0.0;
  for (const auto& p : back.probes)
    for (const auto& l : p.levels) back_worst = std::max(back_worst, std::abs(l.residual));
  return {lo >= 3.5 && hi <= 4.5 && back_worst <= 1e-12,
          "forward ratios in [" + sci(lo) + ", " + sci(hi) + "]; backward residual " + sci(back_worst) +
              " at every level (the family does not depend on s, so no ratio exists)"};
}

std::string artifacts() {
  std::ostringstream out;
  std::mt19937_64 rng(111);
  const CubicTensor t = random_tensor(3, rng);
  out << io::emit_trajectory_csv(iterate(t, random_point(3, rng), 25, 0.0));
  const CspKernelFamily fam(t, random_point(3, rng), 4);
  io::write_ck_header(out);
  for (int s = 0; s + 2 <= 4; ++s) io::write_ck_rows(out, ck_check_A(fam, s, 4, all_splits(s, 4)));
  const auto rep = verify_composition(builtin(), QuadratureSpec{}, 0, 1, 2, grid_probes());
  io::write_probe_header(out);
  for (const auto& p : rep.probes) io::write_probe_row(out, "composition", p.probe_id, p.lhs, p.rhs, p.rel_residual, "");
  const auto gen = residual_generator(builtin(), QuadratureSpec{}, GeneratorEquation::forward,
                                      GeneratorMode::density, {{0, 0.1, 0.2, 0.0, 3.5, 0.6}, {1, 0, 0.3, -0.2, 4.5, 0.1}});
  for (const auto& p : gen.probes)
    io::write_probe_row(out, "density_forward", p.probe_id, p.levels.back().lhs, p.rhs, p.finest_residual(), "");
  return out.str();
}

Outcome determinism() {
  setenv("CUBICDYN_THREADS", "1", 1);
  const std::string a = artifacts(), b = artifacts();
  setenv("CUBICDYN_THREADS", "4", 1);
  const std::string c = artifacts();
  unsetenv("CUBICDYN_THREADS");
  return {a == b && a == c && !a.empty(),
          std::to_string(a.size()) + " bytes identical across 3 runs and thread caps 1 and 4"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"identity CSO fixes every point", identity_cso},
      {"Example 1 closed form matches recursive construction", example1_closed_vs_recursive},
      {"one-step kernels are stationary", stationary_one_step},
      {"Chapman-Kolmogorov split independence", chapman_kolmogorov},
      {"measure dynamics reduce to Volterra dynamics", reduction_equivalence},
      {"reduced tensors are Volterra and symmetric", reduced_structure},
      {"Gaussian family composition", gaussian_family},
      {"normalization and CDF", normalization_and_cdf},
      {"coefficient moments", coefficient_moments},
      {"generator equations converge at second order", generator_order},
      {"byte-identical artifacts", determinism},
  };
  int failures = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[n].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %2zu %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", n + 1, criteria[n].first,
                o.detail.c_str(), secs);
  }
  return failures == 0 ? 0 : 1;
}
