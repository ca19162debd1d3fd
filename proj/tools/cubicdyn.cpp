#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cubicdyn.hpp"

namespace cd = cubicdyn;

namespace {

class IoError : public cd::Error {
 public:
  using cd::Error::Error;
};

class ThresholdExceeded : public cd::Error {
 public:
  ThresholdExceeded(const std::string& check, double value)
      : cd::Error(check + " residual " + cd::io::format_csv(value) + " exceeds threshold") {}
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

template <class F>
auto load(const std::string& path, F&& reader) {
  auto in = open_in(path);
  return reader(in);
}

/// Writes to --output when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw IoError("cannot write " + path);
    }
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct Options {
  std::string input;
  std::string output;
  std::string format = "text";
  double tol = 1e-10;
  std::uint64_t seed = 1;
  std::string x0;
  std::size_t n = 10;
  std::optional<double> stop_tol;
  bool check = false;
  std::string set_file;
  std::size_t samples = 10;
  int s = 0, t = 1;
  double epsilon = 0.5;
  std::size_t quad_nodes = 96;
  double quad_halfwidth = 8.0;
  std::string deltas;
  std::string probes;
  std::string equation = "all";
  std::string policy = "skip";
  std::optional<double> threshold;
  bool closed_form = false;
  bool control = false;
};

cd::QuadratureSpec quad_spec(const Options& o) {
  cd::QuadratureSpec q;
  q.nodes_per_dimension = o.quad_nodes;
  q.truncation_halfwidth_sigmas = o.quad_halfwidth;
  q.validate();
  return q;
}

std::vector<double> deltas_of(const Options& o) {
  return o.deltas.empty() ? cd::default_deltas() : cd::io::parse_list(o.deltas);
}

void print_point(std::ostream& out, const cd::SimplexPoint& x, const std::string& format) {
  if (format == "csv") {
    for (std::size_t i = 0; i < x.dim(); ++i) out << (i ? "," : "") << "x" << i + 1;
    out << '\n';
  }
  for (std::size_t i = 0; i < x.dim(); ++i)
    out << (i ? (format == "csv" ? "," : " ") : "") << cd::io::format_csv(x[i]);
  out << '\n';
}

const char* yes(bool b) { return b ? "true" : "false"; }

// ---- subcommands ----

int run_validate(const Options& o) {
  const auto file = load(o.input, cd::io::parse_tensor_file);
  const auto v = cd::validate_tensor(file.entries, file.m);
  Sink sink(o.output);
  auto& out = sink.out();
  if (!v.tensor) {
    out << "stochastic: false\n" << v.report.to_string();
    return 1;
  }
  const bool sym = v.tensor->symmetric(), volt = cd::is_volterra(*v.tensor);
  if (file.declared_symmetric && !sym)
    throw cd::ParseError(1, "header declares symmetric=1 but entries are not symmetric");
  out << "m: " << file.m << "\nstochastic: true\nsymmetric: " << yes(sym)
      << "\nVolterra: " << yes(volt) << '\n';
  if (sym && volt) out << "symmetric, stochastic, Volterra: true\n";
  return 0;
}

cd::SimplexPoint x0_of(const Options& o, std::size_t m) {
  if (o.x0.empty()) return cd::SimplexPoint::barycenter(m);
  cd::SimplexPoint x(cd::io::parse_list(o.x0));
  if (x.dim() != m) throw cd::DimensionMismatch(m, x.dim());
  return x;
}

int run_apply(const Options& o) {
  const auto t = load(o.input, cd::io::read_tensor);
  Sink sink(o.output);
  print_point(sink.out(), cd::apply_cso(t, x0_of(o, t.m())), o.format);
  return 0;
}

int run_iterate(const Options& o) {
  const auto t = load(o.input, cd::io::read_tensor);
  const auto orbit = cd::iterate(t, x0_of(o, t.m()), o.n, o.stop_tol.value_or(0.0));
  Sink sink(o.output);
  cd::io::write_trajectory_csv(sink.out(), orbit);
  if (!o.output.empty())
    std::cout << "iterations: " << orbit.iterations_used << "\nconverged: " << yes(orbit.converged)
              << '\n';
  return 0;
}

int run_reduce(const Options& o) {
  const auto pm = load(o.input, cd::io::read_pmeasure);
  const auto reduced = cd::reduce_to_volterra(pm);
  {
    Sink sink(o.output);
    cd::io::write_tensor(sink.out(), reduced);
  }
  if (!o.check) return 0;
  const cd::MeasurableSet a = o.set_file.empty()
                                  ? pm.cell_set(0)
                                  : load(o.set_file, [&](std::istream& in) {
                                      return cd::io::read_set(in, pm.grid_size());
                                    });
  std::mt19937_64 rng(o.seed);
  double cells_residual = 0.0, set_residual = 0.0;
  for (std::size_t sample = 0; sample < o.samples; ++sample) {
    cd::StateMeasure direct(cd::random_simplex_coords(pm.grid_size(), rng));
    const auto seq = cd::iterate_measure(pm, direct, o.n, a);
    cd::SimplexPoint cells(direct.cell_masses(pm));
    for (std::size_t step = 0; step <= o.n; ++step) {
      const auto dm = direct.cell_masses(pm);
      for (std::size_t i = 0; i < pm.m(); ++i)
        cells_residual = std::max(cells_residual, std::abs(dm[i] - cells[i]));
      set_residual = std::max(set_residual, std::abs(seq[step] - direct.measure_of(a)));
      if (step == o.n) break;
      direct = cd::step_measure(pm, direct);
      cells = cd::apply_cso(reduced, cells);
    }
  }
  std::ostream& out = o.output.empty() ? std::cerr : std::cout;
  out << "volterra: " << yes(cd::is_volterra(reduced)) << "\nsymmetric: " << yes(reduced.symmetric())
      << "\ncell_residual: " << cd::io::format_csv(cells_residual)
      << "\nset_residual: " << cd::io::format_csv(set_residual) << '\n';
  if (!cd::is_volterra(reduced) || !reduced.symmetric()) return 1;
  if (cells_residual > o.tol) throw ThresholdExceeded("reduction", cells_residual);
  if (set_residual > o.tol) throw ThresholdExceeded("set measure", set_residual);
  return 0;
}

int run_csp_build(const Options& o) {
  const auto sc = load(o.input, cd::io::read_scenario);
  const auto fam = sc.family();
  const auto rep = cd::verify_csp_conditions(fam, sc.horizon, o.tol);
  Sink sink(o.output);
  auto& out = sink.out();
  out << "m: " << sc.m << "\nT: " << sc.horizon << "\n(I) stationary: " << yes(rep.stationary)
      << "\n(II) symmetric: " << yes(rep.symmetric) << "\n(III) stochastic: " << yes(rep.stochastic)
      << " (worst defect " << cd::io::format_csv(rep.worst_stochastic_defect) << ")"
      << "\n(IV) measurable: " << yes(rep.measurable)
      << "\n(V) chapman-kolmogorov: " << yes(rep.chapman_kolmogorov) << " (worst residual "
      << cd::io::format_csv(rep.worst_ck_residual) << ")\n";
  if (sc.closed_form) {
    double gap = 0.0;
    for (int s = 0; s < sc.horizon; ++s)
      for (int t = s + 1; t <= sc.horizon; ++t)
        gap = std::max(gap, fam.kernel(s, t).sup_distance(sc.closed_form->kernel(s, t)));
    out << "closed form vs recursive: " << cd::io::format_csv(gap) << '\n';
  }
  for (const auto& n : rep.notes) out << "note: " << n << '\n';
  return rep.all_ok() ? 0 : 1;
}

template <class F>
bool ck_table(const F& fam, int horizon, const Options& o, std::ostream& out) {
  bool ok = true;
  cd::io::write_ck_header(out);
  for (int s = 0; s < horizon; ++s)
    for (int t = s + 2; t <= horizon; ++t) {
      const auto r = cd::ck_check_A(fam, s, t, cd::all_splits(s, t), o.tol);
      ok = ok && r.consistent;
      cd::io::write_ck_rows(out, r);
    }
  for (int s = 0; s < horizon; ++s)
    for (int t = s + 2; t <= horizon; ++t)
      for (int tau = s + 1; tau < t; ++tau) cd::io::write_ck_row(out, cd::ck_check_B(fam, s, tau, t));
  return ok;
}

int run_ck_check(const Options& o) {
  const auto sc = load(o.input, cd::io::read_scenario);
  Sink sink(o.output);
  bool ok;
  if (o.closed_form) {
    if (!sc.closed_form) throw cd::ParseError(3, "--closed-form needs an 'example' scenario");
    ok = ck_table(*sc.closed_form, sc.horizon, o, sink.out());
  } else {
    ok = ck_table(sc.family(), sc.horizon, o, sink.out());
  }
  return ok ? 0 : 1;
}

int run_qsp(const Options& o) {
  const auto sc = load(o.input, cd::io::read_scenario);
  const auto fam = sc.family();
  const auto q = cd::marginalize_to_qsp(fam, o.s, o.t);
  Sink sink(o.output);
  auto& out = sink.out();
  out << "i,j,l,q\n";
  for (std::size_t i = 0; i < q.m(); ++i)
    for (std::size_t j = 0; j < q.m(); ++j)
      for (std::size_t l = 0; l < q.m(); ++l)
        out << i + 1 << ',' << j + 1 << ',' << l + 1 << ',' << cd::io::format_csv(q(i, j, l)) << '\n';
  return 0;
}

int run_gaussian_demo(const Options& o) {
  const auto q = quad_spec(o);
  const auto params = o.control ? cd::GaussianCspParams::custom(
                                      [](double s, double t) { return t - s; },
                                      [](double) { return 0.1; })
                                : cd::GaussianCspParams::builtin(o.epsilon);
  const cd::DensityKernel k(params);
  std::vector<cd::CompositionProbe> probes;
  for (double sum : {-1.0, 0.0, 1.0})
    for (double off : {-1.2, 0.3, 1.1}) probes.push_back({sum / 2, sum / 4, sum / 4, sum + off});
  const double s = 0.0, tau = 1.0, t = 2.0;
  const auto rep = cd::verify_composition(k, q, s, tau, t, probes);
  Sink sink(o.output);
  auto& out = sink.out();
  cd::io::write_probe_header(out);
  out << "ab_relation,0,,," << cd::io::format_csv(cd::check_ab_relation(params, s, tau, t)) << ",\n";
  for (const auto& p : rep.probes)
    cd::io::write_probe_row(out, "composition", p.probe_id, p.lhs, p.rhs, p.rel_residual, "relative");
  for (std::size_t n = 0; n < probes.size(); ++n) {
    const auto& p = probes[n];
    const double norm = cd::normalization(k, q, s, p.x, p.y, p.z, t);
    cd::io::write_probe_row(out, "normalization", n, norm, 1.0, norm - 1.0, "");
  }
  const double limit = o.threshold.value_or(1e-6);
  if (!o.control && rep.max_rel > limit) throw ThresholdExceeded("composition", rep.max_rel);
  return 0;
}

std::vector<cd::ContinuumProbe> probes_of(const Options& o) {
  if (o.probes.empty()) throw IoError("--probes is required");
  return load(o.probes, cd::io::read_probes);
}

int run_coeffs(const Options& o) {
  const cd::DensityKernel k(cd::GaussianCspParams::builtin(o.epsilon));
  std::vector<cd::CoefficientProbe> cp;
  for (const auto& p : probes_of(o)) cp.push_back({p.s, p.x, p.y, p.z});
  const auto est = cd::estimate_coefficients(k, quad_spec(o), cp, deltas_of(o));
  Sink sink(o.output);
  auto& out = sink.out();
  out << "probe_id,coefficient,value,error_estimate,converged,notes\n";
  for (std::size_t n = 0; n < est.probes.size(); ++n) {
    const auto& p = est.probes[n];
    const std::pair<const char*, const cd::LimitEstimate*> rows[] = {
        {"A", &p.A}, {"B2", &p.B2}, {"D(y)", &p.D_y}, {"D(z)", &p.D_z}, {"D2(y)", &p.D2_y}, {"D2(z)", &p.D2_z}};
    for (const auto& [name, e] : rows)
      out << n << ',' << name << ',' << cd::io::format_csv(e->value) << ','
          << cd::io::format_csv(e->error_estimate) << ',' << (e->converged ? 1 : 0) << ','
          << cd::io::csv_note(e->note) << '\n';
  }
  return 0;
}

int run_residuals(const Options& o) {
  const cd::DensityKernel k(cd::GaussianCspParams::builtin(o.epsilon));
  const auto q = quad_spec(o);
  const auto probes = probes_of(o);
  if (o.policy != "skip" && o.policy != "drop") throw IoError("--policy must be skip or drop");
  Sink sink(o.output);
  auto& out = sink.out();
  cd::io::write_probe_header(out);
  double worst = 0.0;
  auto generator = [&](const char* name, cd::GeneratorEquation eq, cd::GeneratorMode mode) {
    const auto rep = cd::residual_generator(k, q, eq, mode, probes);
    for (const auto& p : rep.probes) {
      std::string note = "h=" + cd::io::format_shortest(p.levels.back().h);
      for (double r : p.ratios) note += " ratio=" + cd::io::format_shortest(r);
      if (!p.note.empty()) note += " " + p.note;
      cd::io::write_probe_row(out, name, p.probe_id, p.levels.back().lhs, p.rhs,
                              p.finest_residual(), note);
      worst = std::max(worst, std::abs(p.finest_residual()));
    }
  };
  const auto& e = o.equation;
  const bool all = e == "all";
  if (!all && e != "forward" && e != "backward" && e != "density-forward" &&
      e != "density-backward" && e != "diffusion")
    throw IoError("--equation must be forward, backward, density-forward, density-backward, diffusion or all");
  using Eq = cd::GeneratorEquation;
  using Mode = cd::GeneratorMode;
  if (all || e == "forward") generator("forward", Eq::forward, Mode::distribution);
  if (all || e == "backward") generator("backward", Eq::backward, Mode::distribution);
  if (all || e == "density-forward") generator("density_forward", Eq::forward, Mode::density);
  if (all || e == "density-backward") generator("density_backward", Eq::backward, Mode::density);
  if (all || e == "diffusion") {
    std::vector<cd::CoefficientProbe> cp;
    for (const auto& p : probes) cp.push_back({p.s, p.x, p.y, p.z});
    const auto est = cd::estimate_coefficients(k, q, cp, deltas_of(o));
    const auto res = cd::residual_diffusion(k, est, probes,
                                      o.policy == "drop" ? cd::NonConvergentPolicy::drop_terms
                                                         : cd::NonConvergentPolicy::skip_probe);
    for (const auto& r : res) {
      if (r.skipped) {
        out << "diffusion," << r.probe_id << ",,,," << cd::io::csv_note(r.note) << '\n';
        continue;
      }
      cd::io::write_probe_row(out, "diffusion", r.probe_id, r.lhs, r.rhs_asymmetric, r.residual_asymmetric, r.note);
      cd::io::write_probe_row(out, "diffusion_symmetric", r.probe_id, r.lhs, r.rhs_symmetric,
                              r.residual_symmetric, r.note);
    }
  }
  if (o.threshold && worst > *o.threshold) throw ThresholdExceeded("generator", worst);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cubic stochastic operators and processes"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool with_input) {
    if (with_input) sub->add_option("input", o.input, "Input file")->required();
    sub->add_option("--output,-o", o.output, "Output file (stdout when omitted)");
    sub->add_option("--format", o.format, "Report format")
        ->check(CLI::IsMember({"csv", "text"}))
        ->capture_default_str();
    sub->add_option("--tol", o.tol, "Consistency tolerance")->capture_default_str();
    sub->add_option("--seed", o.seed, "Seed for randomised checks")->capture_default_str();
  };
  auto gaussian = [&](CLI::App* sub) {
    sub->add_option("--epsilon", o.epsilon, "Gaussian family parameter in (0,1)")->capture_default_str();
    sub->add_option("--quad-nodes", o.quad_nodes, "Quadrature nodes per dimension")->capture_default_str();
    sub->add_option("--quad-halfwidth", o.quad_halfwidth, "Truncation half-width in sigmas")
        ->capture_default_str();
    sub->add_option("--threshold", o.threshold, "Fail when the residual exceeds this");
  };

  auto* validate = app.add_subcommand("validate", "Check a tensor file");
  common(validate, true);
  auto* apply = app.add_subcommand("apply", "Apply the CSO once");
  common(apply, true);
  apply->add_option("--x0", o.x0, "Comma-separated starting point (default barycentre)");
  auto* iter = app.add_subcommand("iterate", "Iterate the CSO and write the trajectory CSV");
  common(iter, true);
  iter->add_option("--x0", o.x0, "Comma-separated starting point (default barycentre)");
  iter->add_option("--n", o.n, "Number of steps")->capture_default_str();
  iter->add_option("--stop-tol", o.stop_tol, "Stop once the sup-norm step is below this");
  auto* reduce = app.add_subcommand("reduce", "Reduce a partition measure to a Volterra tensor");
  common(reduce, true);
  reduce->add_flag("--check", o.check, "Compare reduced and direct iteration");
  reduce->add_option("--set", o.set_file, "Set file for the measure check (default cell 1)");
  reduce->add_option("--n", o.n, "Steps for --check")->default_val(50);
  reduce->add_option("--samples", o.samples, "Random initial measures for --check")->capture_default_str();
  auto* build = app.add_subcommand("csp-build", "Build a CSP and check its defining conditions");
  common(build, true);
  auto* ck = app.add_subcommand("ck-check", "Chapman-Kolmogorov residual table");
  common(ck, true);
  ck->add_flag("--closed-form", o.closed_form, "Check the closed-form kernels instead");
  auto* qsp = app.add_subcommand("qsp-marginal", "Marginalise a CSP kernel to a QSP");
  common(qsp, true);
  qsp->add_option("--s", o.s, "Start time")->capture_default_str();
  qsp->add_option("--t", o.t, "End time")->capture_default_str();
  auto* demo = app.add_subcommand("gaussian-demo", "Composition and normalisation of the Gaussian family");
  common(demo, false);
  gaussian(demo);
  demo->add_flag("--control", o.control, "Use the control family a=t-s, b=0.1");
  auto* coeffs = app.add_subcommand("coeffs", "Estimate the coefficient limits");
  common(coeffs, false);
  gaussian(coeffs);
  coeffs->add_option("--deltas", o.deltas, "Comma-separated decreasing Delta sequence");
  coeffs->add_option("--probes", o.probes, "Probe file with lines 's x y z t w'")->required();
  auto* resid = app.add_subcommand("residuals", "Residuals of the evolution equations");
  common(resid, false);
  gaussian(resid);
  resid->add_option("--deltas", o.deltas, "Comma-separated decreasing Delta sequence");
  resid->add_option("--probes", o.probes, "Probe file with lines 's x y z t w'")->required();
  resid->add_option("--equation", o.equation, "forward, backward, density-forward, density-backward, diffusion or all")->capture_default_str();
  resid->add_option("--policy", o.policy, "Non-convergent coefficients: skip or drop")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return run_validate(o);
    if (*apply) return run_apply(o);
    if (*iter) return run_iterate(o);
    if (*reduce) return run_reduce(o);
    if (*build) return run_csp_build(o);
    if (*ck) return run_ck_check(o);
    if (*qsp) return run_qsp(o);
    if (*demo) return run_gaussian_demo(o);
    if (*coeffs) return run_coeffs(o);
    if (*resid) return run_residuals(o);
  } catch (const cd::ValidationError& e) {
    std::cerr << e.what();
    return 1;
  } catch (const ThresholdExceeded& e) {
    std::cerr << "ThresholdExceeded: " << e.what() << '\n';
    return 1;
  } catch (const cd::ParseError& e) {
    std::cerr << "ParseError: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "IoError: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
