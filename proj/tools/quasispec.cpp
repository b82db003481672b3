// quasispec: command-line experiments for one-frequency quasiperiodic
// Schrodinger operators. Every run writes a data file (CSV or JSON) and a
// manifest next to it (h.csv -> h.manifest.json) echoing the resolved parameters.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "quasispec/arithmetic.hpp"
#include "quasispec/cocycle.hpp"
#include "quasispec/conjugation.hpp"
#include "quasispec/errors.hpp"
#include "quasispec/io.hpp"
#include "quasispec/potential.hpp"
#include "quasispec/spectral.hpp"
#include "quasispec/subordinacy.hpp"
#include "quasispec/weyl.hpp"

namespace qs = quasispec;
using qs::format_real;
using qs::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Common {
  std::string potential = "amo";
  double lambda = 0.5;
  std::string coeffs;          // trigpoly: "k:re:im,..."
  std::string potential_json;  // path, overrides the above
  std::string alpha = "golden";
  int cf_depth = 30;
  std::string theta = "0";
  std::string out;
  std::string format = "csv";
  int threads = 1;
  bool gnuplot_stub = false;
  double tol = 1e-10;
};

struct Resolved {
  qs::Frequency freq;
  qs::Potential v = qs::Potential::zero();
  long double theta = 0;
  std::string precision = "double";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--potential", c.potential, "amo | zero | trigpoly")->capture_default_str();
  sub->add_option("--lambda", c.lambda, "AMO coupling: v(x) = 2 lambda cos(2 pi x)")->capture_default_str();
  sub->add_option("--coeffs", c.coeffs, "trigpoly modes k:re:im,... (k >= 0; negative modes by symmetry)");
  sub->add_option("--potential-json", c.potential_json, "potential JSON file ({\"variant\": ...})");
  sub->add_option("--alpha", c.alpha, "golden | silver | cf:a1,a2,... | decimal")->capture_default_str();
  sub->add_option("--cf-depth", c.cf_depth, "continued-fraction depth")->capture_default_str();
  sub->add_option("--theta", c.theta, "phase theta")->capture_default_str();
  sub->add_option("--out", c.out,
                  "output data file (default <command>.csv or .json); the manifest is written beside it "
                  "(h.csv -> h.manifest.json)");
  sub->add_option("--format", c.format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  sub->add_option("--threads", c.threads, "worker cap for grid sweeps; output order does not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_flag("--gnuplot-stub", c.gnuplot_stub, "also write a gnuplot script beside the data file (h.csv -> h.gp)");
  sub->add_option("--tol", c.tol, "m-function tolerance")->capture_default_str();
}

qs::Potential build_potential(const Common& c) {
  if (!c.potential_json.empty()) {
    std::ifstream f(c.potential_json);
    qs::require(bool(f), "cannot read potential JSON: " + c.potential_json);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw qs::PreconditionError(std::string("bad potential JSON: ") + e.what());
    }
    return qs::potential_from_json(j);
  }
  if (c.potential == "amo") return qs::Potential::amo(c.lambda);
  if (c.potential == "zero") return qs::Potential::zero();
  qs::require(c.potential == "trigpoly", "unknown potential: " + c.potential);
  qs::Potential::Coefficients m;
  std::stringstream ss(c.coeffs);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream is(item);
    std::string k, re, im = "0";
    std::getline(is, k, ':');
    std::getline(is, re, ':');
    std::getline(is, im, ':');
    try {
      m[std::stoi(k)] = {std::stod(re), std::stod(im)};
    } catch (const std::exception&) {
      throw qs::PreconditionError("bad trigpoly mode: " + item);
    }
  }
  return qs::Potential::trig_poly(m);
}

long double parse_real(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const long double x = std::strtold(s.c_str(), &end);
  qs::require(!s.empty() && end && *end == '\0' && std::isfinite(x), "bad " + what + ": " + s);
  return x;
}

Resolved resolve(const Common& c) {
  Resolved r;
  const char* env = std::getenv("QUASISPEC_PRECISION");
  r.precision = env ? env : "double";
  qs::require(r.precision == "double" || r.precision == "extended", "QUASISPEC_PRECISION must be double or extended");
  r.freq = qs::parse_frequency(c.alpha, c.cf_depth);
  r.v = build_potential(c);
  r.theta = parse_real(c.theta, "theta");
  return r;
}

/// Calls f.template operator()<Real>() for the selected precision.
template <typename F>
int with_precision(const Resolved& r, F&& f) {
  if (r.precision == "extended") return f.template operator()<long double>();
  return f.template operator()<double>();
}

/// Deterministic parallel loop: contiguous index blocks, results written in
/// place, so the output is independent of the thread count.
template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::size_t(threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w * n / workers; i < (w + 1) * n / workers; ++i) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// "a:b:n" -> n equally spaced points, or a single value.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() == 1) return {double(parse_real(parts[0], "energy"))};
  qs::require(parts.size() == 3, "grid spec must be a:b:n");
  const double a = double(parse_real(parts[0], "grid start")), b = double(parse_real(parts[1], "grid end"));
  const int n = int(parse_real(parts[2], "grid count"));
  qs::require(n >= 2 && b > a, "grid needs n >= 2 and b > a");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = a + (b - a) * double(i) / double(n - 1);
  return out;
}

/// h.csv -> h.manifest.json, h.csv -> h.gp
std::string sibling(const std::string& out, const std::string& ext) {
  return std::filesystem::path(out).replace_extension(ext).string();
}

std::string fmt(double x) { return format_real(x); }
std::string fmt(long double x) { return format_real(double(x)); }
std::string fmt_int(std::int64_t x) { return std::to_string(x); }

struct Run {
  Common common;
  Resolved resolved;
  std::string command;
  std::vector<std::string> header;  // known before any numerics, for header-only failure output
  json parameters = json::object();
  json summary = json::object();
  std::string gnuplot_using = "1:2";
  bool gnuplot_logscale = false;
};

json base_manifest(const Run& run) {
  json m;
  m["tool"] = "quasispec";
  m["version"] = kVersion;
  m["command"] = run.command;
  m["precision"] = run.resolved.precision;
  m["threads"] = run.common.threads;
  m["frequency"] = qs::to_json(run.resolved.freq);
  m["potential"] = qs::to_json(run.resolved.v);
  m["theta"] = format_real(run.resolved.theta);
  m["tol"] = run.common.tol;
  m["parameters"] = run.parameters;
  m["data_file"] = run.common.out;
  m["format"] = run.common.format;
  return m;
}

void write_outputs(Run& run, const qs::CsvTable& table) {
  const auto& c = run.common;
  qs::write_file(c.out, c.format == "csv" ? table.str() : table.to_json().dump(2) + "\n");
  json m = base_manifest(run);
  m["columns"] = table.header();
  m["rows"] = table.rows().size();
  m["summary"] = run.summary;
  m["status"] = "ok";
  qs::write_file(sibling(c.out, ".manifest.json"), m.dump(2) + "\n");
  if (c.gnuplot_stub) {
    std::string gp = "# gnuplot script for " + c.out + "\nset datafile separator ','\nset key autotitle columnhead\n";
    if (run.gnuplot_logscale) gp += "set logscale xy\n";
    gp += "plot '" + c.out + "' using " + run.gnuplot_using + " with linespoints\n";
    qs::write_file(sibling(c.out, ".gp"), gp);
  }
}

void write_failure(const Run& run, const qs::Error& e) {
  if (run.common.out.empty()) return;
  try {
    if (!run.header.empty()) {
      const qs::CsvTable empty(run.header);
      qs::write_file(run.common.out, run.common.format == "csv" ? empty.str() : empty.to_json().dump(2) + "\n");
    }
    json m = base_manifest(run);
    if (!run.header.empty()) m["columns"] = run.header;
    m["rows"] = 0;
    m["status"] = "error";
    m["error"] = {{"code", qs::to_string(e.code())}, {"message", e.what()}};
    qs::write_file(sibling(run.common.out, ".manifest.json"), m.dump(2) + "\n");
  } catch (...) {
  }
}

// ------------------------------------------------------------------ commands

struct ResonanceArgs {
  double eps0 = 0.1;
  std::int64_t K = 100000;
};

int cmd_resonances(Run& run, const ResonanceArgs& a) {
  run.header = {"j", "k", "distance", "next_abs", "exponent", "censored"};
  run.parameters = {{"eps0", a.eps0}, {"K", a.K}};
  const auto rs = qs::resonances(run.resolved.freq, run.resolved.theta, a.eps0, a.K);
  const auto rows = qs::resonance_repulsion_check(rs, run.resolved.freq);
  qs::CsvTable t(run.header);
  for (std::size_t j = 0; j < rs.indices.size(); ++j) {
    const long double d = qs::torus_norm<long double>(2.0L * run.resolved.theta -
                                                      (long double)rs.indices[j] * run.resolved.freq.value);
    std::string next = "", expo = "", cens = "";
    if (j < rows.size()) {
      next = fmt_int(rows[j].next_abs);
      expo = fmt(rows[j].exponent);
      cens = rows[j].censored ? "1" : "0";
    }
    t.row({fmt_int(std::int64_t(j)), fmt_int(rs.indices[j]), fmt(d), next, expo, cens});
  }
  run.summary = {{"count", rs.indices.size()}, {"repulsion_exponent", qs::fit_repulsion_exponent(rows)},
                 {"diophantine_score", qs::diophantine_score(run.resolved.freq)}};
  run.gnuplot_using = "2:3";
  write_outputs(run, t);
  return 0;
}

struct LyapunovArgs {
  std::string e_grid = "-3:3:61";
  std::int64_t n = 10000;
  int phases = 16;
  std::string grid = "orbit";
};

int cmd_lyapunov(Run& run, const LyapunovArgs& a) {
  run.header = {"E", "L"};
  run.parameters = {{"e_grid", a.e_grid}, {"n", a.n}, {"phases", a.phases}, {"phase_grid", a.grid}};
  const auto Es = parse_grid(a.e_grid);
  const auto pg = a.grid == "uniform" ? qs::PhaseGrid::Uniform : qs::PhaseGrid::Orbit;
  std::vector<double> L(Es.size());
  with_precision(run.resolved, [&]<typename Real>() {
    parallel_for(Es.size(), run.common.threads, [&](std::size_t i) {
      L[i] = double(qs::lyapunov<Real>(Real(Es[i]), run.resolved.v, Real(run.resolved.freq.value), a.n, a.phases, pg,
                                       Real(run.resolved.theta)));
    });
    return 0;
  });
  qs::CsvTable t(run.header);
  for (std::size_t i = 0; i < Es.size(); ++i) t.row({fmt(Es[i]), fmt(L[i])});
  write_outputs(run, t);
  return 0;
}

struct MArgs {
  double E = 0;
  double eps_min = 1e-3, eps_max = 1e-1;
  int points = 8;
};

int cmd_mfunction(Run& run, const MArgs& a) {
  run.header = {"E", "eps", "m_plus_re", "m_plus_im", "m_minus_re", "m_minus_im", "M_re", "M_im", "depth",
                  "est_error"};
  run.parameters = {{"E", a.E}, {"eps_min", a.eps_min}, {"eps_max", a.eps_max}, {"points", a.points}};
  const auto ladder = a.points == 1 ? std::vector<double>{a.eps_min} : qs::geometric_ladder(a.eps_min, a.eps_max, a.points);
  qs::MOptions opt;
  opt.tol = run.common.tol;
  std::vector<std::vector<std::string>> rows(ladder.size());
  with_precision(run.resolved, [&]<typename Real>() {
    parallel_for(ladder.size(), run.common.threads, [&](std::size_t i) {
      const auto tr = qs::m_triple<Real>(qs::Complex<Real>(Real(a.E), Real(ladder[i])), run.resolved.v,
                                         Real(run.resolved.freq.value), Real(run.resolved.theta), opt);
      rows[i] = {fmt(a.E), fmt(ladder[i]), fmt(tr.m_plus.value().real()), fmt(tr.m_plus.imag()),
                 fmt(tr.m_minus.value().real()), fmt(tr.m_minus.imag()), fmt(tr.M.value().real()), fmt(tr.M.imag()),
                 fmt_int(tr.truncation_depth), fmt(tr.est_error)};
    });
    return 0;
  });
  qs::CsvTable t(run.header);
  for (auto& r : rows) t.row(r);
  run.gnuplot_using = "2:8";
  run.gnuplot_logscale = true;
  write_outputs(run, t);
  return 0;
}

struct SubArgs {
  double E = 0;
  std::int64_t k_max = 1000;
  double k_ratio = 1.3;
  double eps_floor = 1e-6;
};

int cmd_subordinacy(Run& run, const SubArgs& a) {
  run.header = {"k", "norm_P", "det_P", "eps_k", "psi_mplus", "ratio_jl", "ratio_blabl", "in_bracket"};
  run.parameters = {{"E", a.E}, {"k_max", a.k_max}, {"k_ratio", a.k_ratio}, {"eps_floor", a.eps_floor}};
  qs::MOptions opt;
  opt.tol = run.common.tol;
  qs::SubordinacyProfile prof;
  with_precision(run.resolved, [&]<typename Real>() {
    prof = qs::profile<Real>(Real(a.E), run.resolved.v, Real(run.resolved.freq.value), Real(run.resolved.theta),
                             qs::geometric_k_list(a.k_max, a.k_ratio), opt, a.eps_floor);
    return 0;
  });
  const double lo = 0.101 * 0.95, hi = 9.899 * 1.05;
  qs::CsvTable t(run.header);
  double rmin = INFINITY, rmax = 0;
  bool all = true;
  for (const auto& r : prof.rows) {
    const bool in = r.ratio_jl >= lo && r.ratio_jl <= hi;
    all = all && in;
    rmin = std::min(rmin, r.ratio_jl);
    rmax = std::max(rmax, r.ratio_jl);
    t.row({fmt_int(r.k), fmt(r.norm_P), fmt(r.det_P), fmt(r.eps_k), fmt(r.psi_mplus), fmt(r.ratio_jl),
           fmt(r.ratio_blabl), in ? "1" : "0"});
  }
  run.summary = {{"rows", prof.rows.size()}, {"ratio_jl_min", rmin}, {"ratio_jl_max", rmax},
                 {"bracket", {lo, hi}}, {"all_in_bracket", all}};
  run.gnuplot_using = "1:6";
  run.gnuplot_logscale = true;
  write_outputs(run, t);
  return 0;
}

struct HolderArgs {
  double E = 0;
  double eps_min = 1e-4, eps_max = 1e-1;
  int points = 16;
};

int cmd_holder(Run& run, const HolderArgs& a) {
  run.header = {"E", "eps", "w", "ImM"};
  run.parameters = {{"E", a.E}, {"eps_min", a.eps_min}, {"eps_max", a.eps_max}, {"points", a.points}};
  qs::MOptions opt;
  opt.tol = run.common.tol;
  qs::HolderFit fit;
  with_precision(run.resolved, [&]<typename Real>() {
    fit = qs::holder_fit<Real>(Real(a.E), run.resolved.v, Real(run.resolved.freq.value), Real(run.resolved.theta),
                               {a.eps_min, a.eps_max}, a.points, opt);
    return 0;
  });
  qs::CsvTable t(run.header);
  for (const auto& p : fit.ladder) t.row({fmt(fit.E), fmt(p.eps), fmt(p.w), fmt(p.im_M)});
  run.summary = {{"slope", fit.slope}, {"residual", fit.residual}, {"min_ImM_over_sqrt_eps", fit.min_lower},
                 {"max_ImM_times_sqrt_eps", fit.max_upper}};
  run.gnuplot_using = "2:3";
  run.gnuplot_logscale = true;
  write_outputs(run, t);
  return 0;
}

struct IdsArgs {
  double step = 1e-2;
  std::string e_grid;
  std::string method = "finite_box";
  int size = 5000;
  int phase_box = 256;
};

std::vector<double> ids_grid(const Run& run, const std::string& e_grid, double step) {
  return e_grid.empty() ? qs::spectrum_grid(run.resolved.v, step) : parse_grid(e_grid);
}

int cmd_ids(Run& run, const IdsArgs& a) {
  run.header = {"E", "N"};
  run.parameters = {{"step", a.step}, {"e_grid", a.e_grid}, {"method", a.method}, {"size", a.size},
                    {"phase_box", a.phase_box}};
  const auto method = a.method == "phase_average" ? qs::IdsMethod::PhaseAverage : qs::IdsMethod::FiniteBox;
  const auto tab = qs::ids(run.resolved.v, double(run.resolved.freq.value), ids_grid(run, a.e_grid, a.step), method,
                           a.size, {double(run.resolved.theta), a.phase_box});
  qs::CsvTable t(run.header);
  for (std::size_t i = 0; i < tab.energies.size(); ++i) t.row({fmt(tab.energies[i]), fmt(tab.N_values[i])});
  write_outputs(run, t);
  return 0;
}

struct ThoulessArgs {
  std::string e_grid = "-4:4:20";
  double step = 1e-3;
  int size = 5000;
  std::int64_t n = 20000;
  int phases = 4;
};

int cmd_thouless(Run& run, const ThoulessArgs& a) {
  run.header = {"E", "integral", "lyapunov", "residual"};
  run.parameters = {{"e_grid", a.e_grid}, {"ids_step", a.step}, {"size", a.size}, {"n", a.n}, {"phases", a.phases}};
  const double alpha = double(run.resolved.freq.value);
  const auto tab = qs::ids(run.resolved.v, alpha, qs::spectrum_grid(run.resolved.v, a.step), qs::IdsMethod::FiniteBox,
                           a.size, {double(run.resolved.theta)});
  const auto Es = parse_grid(a.e_grid);
  std::vector<double> L(Es.size());
  with_precision(run.resolved, [&]<typename Real>() {
    parallel_for(Es.size(), run.common.threads, [&](std::size_t i) {
      L[i] = double(qs::lyapunov<Real>(Real(Es[i]), run.resolved.v, Real(alpha), a.n, a.phases));
    });
    return 0;
  });
  qs::CsvTable t(run.header);
  double worst = 0;
  for (std::size_t i = 0; i < Es.size(); ++i) {
    const auto r = qs::thouless_check(Es[i], tab, L[i]);
    worst = std::max(worst, r.residual);
    t.row({fmt(Es[i]), fmt(r.integral), fmt(L[i]), fmt(r.residual)});
  }
  run.summary = {{"max_residual", worst}};
  run.gnuplot_using = "1:2";
  write_outputs(run, t);
  return 0;
}

struct GapArgs {
  double step = 1e-3;
  int size = 5000;
  double plateau_tol = 0;  // 0: 1/(2 size)
  int refine_box = 20000;
  int label_max = 30;
};

int cmd_gaps(Run& run, const GapArgs& a) {
  run.header = {"E_left", "E_right", "N_plateau", "label", "label_distance", "refined_left", "refined_right"};
  const double tol = a.plateau_tol > 0 ? a.plateau_tol : 0.5 / a.size;
  run.parameters = {{"step", a.step}, {"size", a.size}, {"plateau_tol", tol}, {"refine_box", a.refine_box},
                    {"label_max", a.label_max}};
  const double alpha = double(run.resolved.freq.value);
  const double theta = double(run.resolved.theta);
  const auto tab = qs::ids(run.resolved.v, alpha, qs::spectrum_grid(run.resolved.v, a.step), qs::IdsMethod::FiniteBox,
                           a.size, {theta});
  const auto gaps = qs::gap_edges(tab, tol);
  qs::CsvTable t(run.header);
  std::vector<qs::Gap> refined(gaps.size());
  parallel_for(gaps.size(), run.common.threads,
               [&](std::size_t i) { refined[i] = qs::refine_gap(run.resolved.v, alpha, theta, gaps[i], a.refine_box); });
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const auto [label, dist] = qs::nearest_gap_label(gaps[i].N_plateau, alpha, a.label_max);
    t.row({fmt(gaps[i].E_left), fmt(gaps[i].E_right), fmt(gaps[i].N_plateau), fmt_int(label), fmt(dist),
           fmt(refined[i].E_left), fmt(refined[i].E_right)});
  }
  run.summary = {{"gaps", gaps.size()}};
  write_outputs(run, t);
  return 0;
}

struct TxArgs {
  std::int64_t k = 200;
  int r = 3;
  double t_re = 0.7, t_im = 0;
  double x = 0;
};

int cmd_tx(Run& run, const TxArgs& a) {
  run.header = {"quantity", "closed_form", "brute_force", "rel_error"};
  run.parameters = {{"k", a.k}, {"r", a.r}, {"t_hat", {a.t_re, a.t_im}}, {"x", a.x}};
  const qs::TriangularCocycle tc{double(run.resolved.theta), double(run.resolved.freq.value), a.r, {a.t_re, a.t_im},
                                 a.k};
  const auto c = qs::tx_closed_form(tc, a.x);
  const auto b = qs::tx_bruteforce(tc, a.x);
  qs::CsvTable t(run.header);
  double worst = 0;
  auto add = [&](const std::string& name, double cf, double bf, double scale) {
    const double e = std::abs(cf - bf) / scale;
    worst = std::max(worst, e);
    t.row({name, fmt(cf), fmt(bf), fmt(e)});
  };
  const double x1scale = std::max({std::abs(b.x1), 1e-300, std::sqrt(b.x11 * b.x2)});
  add("x1_re", c.x1.real(), b.x1.real(), x1scale);
  add("x1_im", c.x1.imag(), b.x1.imag(), x1scale);
  add("x2", c.x2, b.x2, b.x2);
  add("detX", c.detX, b.detX, b.detX);
  add("normX", c.normX, b.normX, b.normX);
  add("invnormX", c.invnormX, b.invnormX, b.invnormX);
  run.summary = {{"max_rel_error", worst}, {"delta", tc.delta()}};
  if (a.k >= 2) {
    const auto as = qs::tx_asymptotics_check(tc, a.x);
    run.summary["norm_ratio"] = as.norm_ratio;
    run.summary["inv_ratio"] = as.inv_ratio;
  }
  std::cout << "max relative error " << format_real(worst) << "\n";
  write_outputs(run, t);
  return 0;
}

struct ReduceArgs {
  std::string input;  // MatFunction JSON
  double E = 3;
  double band = 0.05;
  std::uint64_t seed = 1;
  double w_norm = 1e-3;
  int degree = 3;
  int max_iter = 8;
  double tol = 1e-11;
};

int cmd_reduce(Run& run, const ReduceArgs& a) {
  run.header = {"iter", "w_norm", "residual", "quad_ratio"};
  run.parameters = {{"input", a.input}, {"E", a.E},           {"band", a.band},         {"seed", a.seed},
                    {"w_norm", a.w_norm}, {"degree", a.degree}, {"max_iter", a.max_iter}, {"tol", a.tol}};
  // v = E - V(x), the diagonal entry of the Schrodinger cocycle
  qs::BandFunction v = qs::BandFunction::constant(a.E, a.band) - qs::BandFunction::from_potential(run.resolved.v, a.band);
  qs::MatFunction A;
  if (!a.input.empty()) {
    std::ifstream f(a.input);
    qs::require(bool(f), "cannot read cocycle JSON: " + a.input);
    json j;
    try {
      j = json::parse(f);
    } catch (const json::exception& e) {
      throw qs::PreconditionError(std::string("bad cocycle JSON: ") + e.what());
    }
    A = qs::mat_function_from_json(j);
  } else {
    std::mt19937_64 rng(a.seed);
    A = qs::perturbed_schrodinger(v, qs::random_sl2_perturbation(rng, a.degree, a.w_norm, a.band));
  }
  qs::ReductionOptions opt;
  opt.max_iter = a.max_iter;
  opt.tol = a.tol;
  const auto r = qs::schrodinger_reduction(A, v, double(run.resolved.freq.value), a.band, opt);
  qs::CsvTable t(run.header);
  for (const auto& s : r.history)
    t.row({fmt_int(s.iter), fmt(s.w_norm), fmt(s.residual), std::isnan(s.quad_ratio) ? "" : fmt(s.quad_ratio)});
  run.summary = {{"iterations", r.iterations},
                 {"residual", r.residual},
                 {"max_quad_ratio", r.max_quad_ratio},
                 {"inverse_bound", r.inverse_bound},
                 {"v_out", {{"band", a.band}, {"coeffs", qs::to_json(r.v_out)}}},
                 {"v_out_reality_defect", r.v_out.reality_defect()},
                 {"B", qs::to_json(r.B)}};
  run.gnuplot_using = "1:2";
  write_outputs(run, t);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasispec: spectral diagnostics for quasiperiodic Schrodinger operators "
               "(Hu)_n = u_{n+1} + u_{n-1} + v(theta + n alpha) u_n"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer(
      "Outputs: <out> (CSV with header row, or JSON rows) and a manifest beside it (h.csv -> h.manifest.json).\n"
      "Measures: M is the Borel transform of mu^{e_0} + mu^{e_1} at phase theta (equivalently\n"
      "mu^{e_-1} + mu^{e_0} at theta + alpha); per-vector measures mu^{e_k} are bounded through\n"
      "the shift identity mu^{e_k}_theta = mu^{e_0}_{theta + k alpha}, never computed independently.\n"
      "Environment: QUASISPEC_PRECISION=double|extended selects the floating model.\n"
      "Exit status: 0 success, 2 invalid input, 3 numerical non-convergence.");

  Run run;
  Common& c = run.common;

  auto* res = app.add_subcommand("resonances", "eps0-resonances of 2 theta; CSV: j,k,distance,next_abs,exponent,censored");
  ResonanceArgs ra;
  add_common(res, c);
  res->add_option("--eps0", ra.eps0, "resonance exponent eps0")->capture_default_str();
  res->add_option("--K", ra.K, "scan |k| <= K")->capture_default_str();

  auto* lya = app.add_subcommand("lyapunov", "Lyapunov exponent on an energy grid; CSV: E,L");
  LyapunovArgs la;
  add_common(lya, c);
  lya->add_option("--e-grid", la.e_grid, "energies a:b:n or a single value")->capture_default_str();
  lya->add_option("--n", la.n, "iterate length")->capture_default_str();
  lya->add_option("--phases", la.phases, "number of phases averaged")->capture_default_str();
  lya->add_option("--phase-grid", la.grid, "orbit | uniform")->check(CLI::IsMember({"orbit", "uniform"}));

  auto* mf = app.add_subcommand(
      "mfunction", "m+, m-, M on an eps ladder; CSV: E,eps,m_plus_re,m_plus_im,m_minus_re,m_minus_im,M_re,M_im,depth,est_error");
  MArgs ma;
  add_common(mf, c);
  mf->add_option("--e", ma.E, "energy")->capture_default_str();
  mf->add_option("--eps-min", ma.eps_min, "smallest eps")->capture_default_str();
  mf->add_option("--eps-max", ma.eps_max, "largest eps")->capture_default_str();
  mf->add_option("--points", ma.points, "ladder points")->capture_default_str();

  auto* sub = app.add_subcommand(
      "subordinacy", "P_(k) ladder; CSV: k,norm_P,det_P,eps_k,psi_mplus,ratio_jl,ratio_blabl,in_bracket");
  SubArgs sa;
  add_common(sub, c);
  sub->add_option("--e", sa.E, "energy")->capture_default_str();
  sub->add_option("--k-max", sa.k_max, "largest k")->capture_default_str();
  sub->add_option("--k-ratio", sa.k_ratio, "geometric ratio of the k list")->capture_default_str();
  sub->add_option("--eps-floor", sa.eps_floor, "stop once eps_k falls below this")->capture_default_str();

  auto* hol = app.add_subcommand("holder", "window ladder w = 2 eps Im M(E + i eps); CSV: E,eps,w,ImM");
  HolderArgs ha;
  add_common(hol, c);
  hol->add_option("--e", ha.E, "energy")->capture_default_str();
  hol->add_option("--eps-min", ha.eps_min, "smallest eps")->capture_default_str();
  hol->add_option("--eps-max", ha.eps_max, "largest eps")->capture_default_str();
  hol->add_option("--points", ha.points, "ladder points (>= 4)")->capture_default_str();

  auto* idc = app.add_subcommand("ids", "integrated density of states; CSV: E,N");
  IdsArgs ia;
  add_common(idc, c);
  idc->add_option("--step", ia.step, "grid step over the spectrum with margin")->capture_default_str();
  idc->add_option("--e-grid", ia.e_grid, "explicit grid a:b:n (overrides --step)");
  idc->add_option("--method", ia.method, "finite_box | phase_average")
      ->check(CLI::IsMember({"finite_box", "phase_average"}))
      ->capture_default_str();
  idc->add_option("--size", ia.size, "box size (finite_box) or phase count (phase_average)")->capture_default_str();
  idc->add_option("--phase-box", ia.phase_box, "box per phase for phase_average")->capture_default_str();

  auto* tho = app.add_subcommand("thouless", "Thouless formula residuals; CSV: E,integral,lyapunov,residual");
  ThoulessArgs ta;
  add_common(tho, c);
  tho->add_option("--e-grid", ta.e_grid, "energies a:b:n")->capture_default_str();
  tho->add_option("--step", ta.step, "IDS grid step")->capture_default_str();
  tho->add_option("--size", ta.size, "IDS box size")->capture_default_str();
  tho->add_option("--n", ta.n, "Lyapunov iterate length")->capture_default_str();
  tho->add_option("--phases", ta.phases, "Lyapunov phases")->capture_default_str();

  auto* gap = app.add_subcommand(
      "gaps", "IDS plateaus; CSV: E_left,E_right,N_plateau,label,label_distance,refined_left,refined_right");
  GapArgs ga;
  add_common(gap, c);
  gap->add_option("--step", ga.step, "IDS grid step")->capture_default_str();
  gap->add_option("--size", ga.size, "IDS box size")->capture_default_str();
  gap->add_option("--plateau-tol", ga.plateau_tol, "plateau tolerance (default 1/(2 size))");
  gap->add_option("--refine-box", ga.refine_box, "box size for edge refinement")->capture_default_str();
  gap->add_option("--label-max", ga.label_max, "largest |k| in the gap-label search")->capture_default_str();

  auto* tx = app.add_subcommand("tx-oracle", "triangular-cocycle closed form vs brute force; CSV: "
                                             "quantity,closed_form,brute_force,rel_error");
  TxArgs xa;
  add_common(tx, c);
  tx->add_option("--k", xa.k, "horizon k")->capture_default_str();
  tx->add_option("--r", xa.r, "Fourier mode r")->capture_default_str();
  tx->add_option("--t-hat", xa.t_re, "real part of t_hat")->capture_default_str();
  tx->add_option("--t-hat-im", xa.t_im, "imaginary part of t_hat")->capture_default_str();
  tx->add_option("--x", xa.x, "base point x")->capture_default_str();

  auto* red = app.add_subcommand("reduce", "Schrodinger-form reduction; CSV: iter,w_norm,residual,quad_ratio");
  ReduceArgs rda;
  add_common(red, c);
  red->add_option("--input", rda.input, "cocycle JSON {\"band\", \"entries\"}; default: random perturbation");
  red->add_option("--e", rda.E, "energy: the cocycle diagonal is E - V(x)")->capture_default_str();
  red->add_option("--band", rda.band, "analyticity band")->capture_default_str();
  red->add_option("--seed", rda.seed, "seed of the random perturbation")->capture_default_str();
  red->add_option("--w-norm", rda.w_norm, "band norm of the random perturbation")->capture_default_str();
  red->add_option("--degree", rda.degree, "degree of the random perturbation")->capture_default_str();
  red->add_option("--max-iter", rda.max_iter, "iteration cap")->capture_default_str();
  red->add_option("--stop-tol", rda.tol, "stop once |w| falls below this")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  run.command = chosen->get_name();
  if (c.out.empty()) c.out = run.command + (c.format == "csv" ? ".csv" : ".json");
  try {
    qs::write_file(c.out, "");  // writability is checked before any numerics
    run.resolved = resolve(c);
    if (run.command == "resonances") return cmd_resonances(run, ra);
    if (run.command == "lyapunov") return cmd_lyapunov(run, la);
    if (run.command == "mfunction") return cmd_mfunction(run, ma);
    if (run.command == "subordinacy") return cmd_subordinacy(run, sa);
    if (run.command == "holder") return cmd_holder(run, ha);
    if (run.command == "ids") return cmd_ids(run, ia);
    if (run.command == "thouless") return cmd_thouless(run, ta);
    if (run.command == "gaps") return cmd_gaps(run, ga);
    if (run.command == "tx-oracle") return cmd_tx(run, xa);
    if (run.command == "reduce") return cmd_reduce(run, rda);
  } catch (const qs::Error& e) {
    std::cerr << "error [" << qs::to_string(e.code()) << "]: " << e.what() << "\n";
    write_failure(run, e);
    return e.numerical() ? 3 : 2;
  }
  return 2;
}
