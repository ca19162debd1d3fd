#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cubicdyn/csp_discrete.hpp"
#include "cubicdyn/cso.hpp"
#include "cubicdyn/error.hpp"
#include "cubicdyn/gaussian.hpp"
#include "cubicdyn/generator_residuals.hpp"
#include "cubicdyn/kernel_family.hpp"
#include "cubicdyn/partition.hpp"
#include "cubicdyn/tensor.hpp"

namespace cubicdyn::io {

inline constexpr double kPmeasureSumTolerance = 1e-9;
inline constexpr double kPmeasureRenormalize = 1e-14;

/// Shortest decimal that reads back to the same double.
inline std::string format_shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// 17 significant digits, the fixed CSV width.
inline std::string format_csv(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

struct Line {
  std::size_t number;
  std::vector<std::string_view> fields;
  std::string text;
};

/// Non-blank, non-comment lines split on whitespace.
inline std::vector<Line> read_lines(std::istream& in) {
  std::vector<Line> out;
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const auto first = raw.find_first_not_of(" \t");
    if (first == std::string::npos || raw[first] == '#') continue;
    out.push_back({number, {}, raw});
  }
  for (auto& l : out) {
    std::string_view sv(l.text);
    std::size_t pos = 0;
    while (pos < sv.size()) {
      const auto start = sv.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      const auto end = sv.find_first_of(" \t", start);
      l.fields.push_back(sv.substr(start, end == std::string_view::npos ? sv.npos : end - start));
      pos = end == std::string_view::npos ? sv.size() : end;
    }
  }
  return out;
}

inline double to_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  if (!s.empty() && s.front() == '+') ++b;
  auto res = std::from_chars(b, s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(line, "bad number '" + std::string(s) + "'");
  return v;
}

inline std::size_t to_count(std::string_view s, std::size_t line) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(line, "bad integer '" + std::string(s) + "'");
  return v;
}

/// One-based index in 1..n, returned zero-based.
inline std::size_t to_index(std::string_view s, std::size_t n, std::size_t line) {
  const std::size_t v = to_count(s, line);
  if (v < 1 || v > n)
    throw ParseError(line, "index " + std::string(s) + " outside 1.." + std::to_string(n));
  return v - 1;
}

/// Value of `key=` in a header field.
inline std::string_view keyed(std::string_view field, std::string_view key, std::size_t line) {
  if (field.substr(0, key.size()) != key || field.size() <= key.size())
    throw ParseError(line, "expected " + std::string(key) + "<value>");
  return field.substr(key.size());
}

inline const Line& header(const std::vector<Line>& lines, std::string_view tag,
                          std::size_t fields) {
  if (lines.empty()) throw ParseError(1, "missing '" + std::string(tag) + "' header");
  const Line& h = lines.front();
  if (h.fields.size() != fields || h.fields[0] != tag)
    throw ParseError(h.number, "header must read '" + std::string(tag) + " ...'");
  return h;
}

inline RawEntries read_entries(const std::vector<Line>& lines, std::size_t begin,
                               std::size_t end, std::size_t m) {
  RawEntries entries;
  std::set<TensorIndex> seen;
  for (std::size_t n = begin; n < end; ++n) {
    const Line& l = lines[n];
    if (l.fields.size() != 5) throw ParseError(l.number, "expected 'i j k l p'");
    TensorIndex idx{};
    for (std::size_t c = 0; c < 4; ++c) idx[c] = to_index(l.fields[c], m, l.number);
    if (!seen.insert(idx).second) throw ParseError(l.number, "duplicate entry");
    entries.emplace_back(idx, to_double(l.fields[4], l.number));
  }
  return entries;
}

}  // namespace detail

// ---- tensors ----

struct TensorFile {
  std::size_t m = 0;
  bool declared_symmetric = false;
  RawEntries entries;
};

inline TensorFile parse_tensor_file(std::istream& in) {
  const auto lines = detail::read_lines(in);
  const auto& h = detail::header(lines, "cso", 3);
  TensorFile out;
  out.m = detail::to_count(detail::keyed(h.fields[1], "m=", h.number), h.number);
  if (out.m < 1) throw ParseError(h.number, "m must be positive");
  const auto sym = detail::keyed(h.fields[2], "symmetric=", h.number);
  if (sym != "0" && sym != "1") throw ParseError(h.number, "symmetric must be 0 or 1");
  out.declared_symmetric = sym == "1";
  out.entries = detail::read_entries(lines, 1, lines.size(), out.m);
  return out;
}

/// Parses and validates. Throws ValidationError for a non-stochastic tensor
/// and ParseError if the header claims a symmetry the entries lack.
inline CubicTensor read_tensor(std::istream& in) {
  const TensorFile f = parse_tensor_file(in);
  CubicTensor t = make_tensor(f.entries, f.m);
  if (f.declared_symmetric && !t.symmetric())
    throw ParseError(1, "header declares symmetric=1 but entries are not symmetric");
  return t;
}

inline void write_tensor(std::ostream& out, const CubicTensor& t) {
  out << "cso m=" << t.m() << " symmetric=" << (t.symmetric() ? 1 : 0) << '\n';
  t.for_each_nonzero([&](std::size_t i, std::size_t j, std::size_t k, std::size_t l, double v) {
    out << i + 1 << ' ' << j + 1 << ' ' << k + 1 << ' ' << l + 1 << ' ' << format_shortest(v)
        << '\n';
  });
}

// ---- partition measures ----

inline PartitionMeasure read_pmeasure(std::istream& in) {
  const auto lines = detail::read_lines(in);
  const auto& h = detail::header(lines, "pmeasure", 3);
  const std::size_t n = detail::to_count(detail::keyed(h.fields[1], "N=", h.number), h.number);
  const std::size_t m = detail::to_count(detail::keyed(h.fields[2], "m=", h.number), h.number);
  if (n < 1 || m < 1) throw ParseError(h.number, "N and m must be positive");
  if (lines.size() - 1 != n)
    throw ParseError(h.number, "expected " + std::to_string(n) + " atom lines, found " +
                                   std::to_string(lines.size() - 1));
  std::vector<std::size_t> cell(n);
  std::vector<double> mass(n);
  std::vector<bool> seen(n, false);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& l = lines[r];
    if (l.fields.size() != 3) throw ParseError(l.number, "expected 'atom cell mass'");
    const std::size_t a = detail::to_index(l.fields[0], n, l.number);
    if (seen[a]) throw ParseError(l.number, "atom listed twice");
    seen[a] = true;
    cell[a] = detail::to_index(l.fields[1], m, l.number);
    mass[a] = detail::to_double(l.fields[2], l.number);
    if (!(mass[a] > 0.0)) throw ParseError(l.number, "mass must be positive");
  }
  const double total = compensated_sum(mass);
  if (std::abs(total - 1.0) > kPmeasureSumTolerance)
    throw ParseError(h.number, "masses sum to " + format_shortest(total));
  if (std::abs(total - 1.0) > kPmeasureRenormalize)
    for (double& v : mass) v /= total;
  try {
    return PartitionMeasure(m, std::move(cell), std::move(mass));
  } catch (const InvalidPartition& e) {
    throw ParseError(h.number, e.what());
  }
}

inline void write_pmeasure(std::ostream& out, const PartitionMeasure& pm) {
  out << "pmeasure N=" << pm.grid_size() << " m=" << pm.m() << '\n';
  for (std::size_t p = 0; p < pm.grid_size(); ++p)
    out << p + 1 << ' ' << pm.cell_of(p) + 1 << ' ' << format_shortest(pm.atom_mass(p)) << '\n';
}

/// `set <atom indices>`; several lines are united.
inline MeasurableSet read_set(std::istream& in, std::size_t grid_size) {
  const auto lines = detail::read_lines(in);
  if (lines.empty()) throw ParseError(1, "missing 'set' line");
  std::vector<std::size_t> atoms;
  for (const auto& l : lines) {
    if (l.fields.front() != "set") throw ParseError(l.number, "expected 'set ...'");
    for (std::size_t c = 1; c < l.fields.size(); ++c)
      atoms.push_back(detail::to_index(l.fields[c], grid_size, l.number));
  }
  return MeasurableSet(grid_size, std::move(atoms));
}

// ---- CSP scenarios ----

struct Scenario {
  std::size_t m = 0;
  int horizon = 0;
  std::vector<double> x0;
  std::optional<KernelArray> base;            // `base` section, unvalidated
  std::optional<ClosedFormKernel> closed_form;  // `example` line

  /// Family built by recursive composition from the one-step kernel.
  CspKernelFamily family() const {
    if (base) return CspKernelFamily(*base, x0, horizon);
    return CspKernelFamily(KernelArray::from_tensor(closed_form->base_tensor()), x0, horizon);
  }
};

/// Example lines:
///   example 1                       x = first coordinate of x0, m = 2
///   example 2 const a_1 .. a_m      a(t) constant
///   example 2 relax r b_1..b_m c_1..c_m   a(t) = b + (c - b) e^{-r t}
///   example 3                       m0 = x0
inline ClosedFormKernel parse_example(const detail::Line& l, std::size_t m,
                                      const std::vector<double>& x0) {
  if (l.fields.size() < 2) throw ParseError(l.number, "example needs a number");
  const auto kind = l.fields[1];
  auto numbers = [&](std::size_t from) {
    std::vector<double> v;
    for (std::size_t c = from; c < l.fields.size(); ++c)
      v.push_back(detail::to_double(l.fields[c], l.number));
    return v;
  };
  try {
    if (kind == "1") {
      if (m != 2 || l.fields.size() != 2) throw ParseError(l.number, "example 1 needs m=2");
      return ClosedFormKernel::example1(x0[0]);
    }
    if (kind == "3") {
      if (l.fields.size() != 2) throw ParseError(l.number, "example 3 takes no parameters");
      return ClosedFormKernel::example3(x0);
    }
    if (kind == "2" && l.fields.size() >= 3 && l.fields[2] == "const") {
      auto a = numbers(3);
      if (a.size() != m) throw ParseError(l.number, "example 2 const needs m values");
      SimplexPoint check(a);
      return ClosedFormKernel::example2(m, [a](double) { return a; });
    }
    if (kind == "2" && l.fields.size() >= 3 && l.fields[2] == "relax") {
      auto v = numbers(3);
      if (v.size() != 2 * m + 1) throw ParseError(l.number, "example 2 relax needs 2m+1 values");
      const double rate = v[0];
      std::vector<double> inf(v.begin() + 1, v.begin() + 1 + static_cast<long>(m));
      std::vector<double> zero(v.begin() + 1 + static_cast<long>(m), v.end());
      SimplexPoint c1(inf), c2(zero);
      return ClosedFormKernel::example2(m, [rate, inf, zero](double t) {
        std::vector<double> a(inf.size());
        const double e = std::exp(-rate * t);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = inf[i] + (zero[i] - inf[i]) * e;
        return a;
      });
    }
  } catch (const InvalidSimplexPoint& e) {
    throw ParseError(l.number, e.what());
  }
  throw ParseError(l.number, "unknown example '" + std::string(l.text) + "'");
}

inline Scenario read_scenario(std::istream& in) {
  const auto lines = detail::read_lines(in);
  const auto& h = detail::header(lines, "csp", 3);
  Scenario sc;
  sc.m = detail::to_count(detail::keyed(h.fields[1], "m=", h.number), h.number);
  const std::size_t T = detail::to_count(detail::keyed(h.fields[2], "T=", h.number), h.number);
  if (sc.m < 1) throw ParseError(h.number, "m must be positive");
  if (T < 1 || T > static_cast<std::size_t>(kMaxHorizon))
    throw ParseError(h.number, "T must be in 1..64");
  sc.horizon = static_cast<int>(T);
  if (lines.size() < 3) throw ParseError(h.number, "scenario needs x0 and a kernel section");
  const auto& xl = lines[1];
  if (xl.fields.front() != "x0" || xl.fields.size() != sc.m + 1)
    throw ParseError(xl.number, "expected 'x0' with m values");
  for (std::size_t c = 1; c < xl.fields.size(); ++c)
    sc.x0.push_back(detail::to_double(xl.fields[c], xl.number));
  try {
    SimplexPoint check(sc.x0);
    sc.x0 = check.vector();
  } catch (const InvalidSimplexPoint& e) {
    throw ParseError(xl.number, e.what());
  }
  const auto& kl = lines[2];
  if (kl.fields.front() == "base") {
    if (kl.fields.size() != 1) throw ParseError(kl.number, "'base' stands alone");
    KernelArray k(sc.m);
    for (const auto& [idx, v] : detail::read_entries(lines, 3, lines.size(), sc.m))
      k(idx[0], idx[1], idx[2], idx[3]) = v;
    sc.base = std::move(k);
  } else if (kl.fields.front() == "example") {
    if (lines.size() != 3) throw ParseError(lines[3].number, "unexpected line after example");
    sc.closed_form = parse_example(kl, sc.m, sc.x0);
  } else {
    throw ParseError(kl.number, "expected 'base' or 'example'");
  }
  return sc;
}

// ---- probes ----

inline std::vector<ContinuumProbe> read_probes(std::istream& in) {
  std::vector<ContinuumProbe> out;
  for (const auto& l : detail::read_lines(in)) {
    if (l.fields.size() != 6) throw ParseError(l.number, "expected 's x y z t w'");
    double v[6];
    for (std::size_t c = 0; c < 6; ++c) v[c] = detail::to_double(l.fields[c], l.number);
    out.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  if (out.empty()) throw ParseError(1, "no probes");
  return out;
}

inline std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find(',', pos), text.size());
    out.push_back(detail::to_double(text.substr(pos, end - pos), 0));
    pos = end + 1;
  }
  return out;
}

// ---- CSV ----

inline void write_trajectory_csv(std::ostream& out, const Orbit& orbit) {
  if (orbit.points.empty()) throw std::invalid_argument("empty orbit");
  const std::size_t m = orbit.points.front().dim();
  out << 'n';
  for (std::size_t i = 1; i <= m; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t n = 0; n < orbit.points.size(); ++n) {
    out << n;
    for (double v : orbit.points[n].coords()) out << ',' << format_csv(v);
    out << '\n';
  }
}

inline std::string emit_trajectory_csv(const Orbit& orbit) {
  std::ostringstream s;
  write_trajectory_csv(s, orbit);
  return s.str();
}

inline void write_ck_header(std::ostream& out) { out << "check,s,t,tau,residual\n"; }

inline void write_ck_rows(std::ostream& out, const CkReport& r) {
  for (const auto& sp : r.splits)
    out << "ck_A," << r.s << ',' << r.t << ',' << sp.tau << ',' << format_csv(sp.residual)
        << '\n';
}

inline void write_ck_row(std::ostream& out, const CkBReport& r) {
  out << "ck_B," << r.s << ',' << r.t << ',' << r.tau << ',' << format_csv(r.residual) << '\n';
}

inline void write_probe_header(std::ostream& out) {
  out << "check,probe_id,lhs,rhs,residual,notes\n";
}

inline std::string csv_note(std::string note) {
  for (char& c : note)
    if (c == ',' || c == '\n') c = ';';
  return note;
}

inline void write_probe_row(std::ostream& out, std::string_view check, std::size_t id,
                            double lhs, double rhs, double residual, const std::string& note) {
  out << check << ',' << id << ',' << format_csv(lhs) << ',' << format_csv(rhs) << ','
      << format_csv(residual) << ',' << csv_note(note) << '\n';
}

}  // namespace cubicdyn::io
