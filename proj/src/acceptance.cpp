#include "wavestab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "wavestab/commands.hpp"
#include "wavestab/config.hpp"
#include "wavestab/geometry.hpp"
#include "wavestab/identity.hpp"
#include "wavestab/norms.hpp"
#include "wavestab/pat.hpp"
#include "wavestab/recon.hpp"
#include "wavestab/source.hpp"
#include "wavestab/stability.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double v) { return fmt::format("{:.4g}", v); }

ExperimentConfig config_with_n(int n) {
  ExperimentConfig c = parse_config(json::object());
  c.grid.n = n;
  return c;
}

PerturbationSpec default_spec(const ExperimentConfig& c, std::uint64_t seed, double amplitude) {
  PerturbationSpec p;
  p.seed = seed;
  p.amplitude = amplitude;
  p.bump_count = c.stability.bump_count;
  p.bump_radius = c.stability.bump_radius;
  p.region = *c.grid.k_box;
  return p;
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / fmt::format("wavestab-acceptance-{:016x}", (std::uint64_t{rd()} << 32) | rd());
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& command, const json& config, const fs::path& dir, const fs::path& out_dir,
            int threads = 1) {
  const fs::path cfg = dir / (command + "-config.json");
  std::ofstream(cfg, std::ios::binary) << config.dump(2);
  CommandOptions o;
  o.command = command;
  o.config_path = cfg;
  o.out_dir = out_dir;
  o.threads = threads;
  std::ostringstream out, err;
  return run_command(o, out, err);
}

// 1 ------------------------------------------------------------------------
Outcome manufactured_convergence(const AcceptanceOptions&) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<int> sizes{51, 101, 201};
  std::vector<double> errors;
  for (int n : sizes) {
    const GridPtr g = build_grid({0.0, 1.0, 0.0, 1.0}, n);
    const auto mode = [](double x, double y) { return std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y); };
    ScalarField f = ScalarField::from_function(g, mode);
    for (int node : g->boundary_nodes()) f[static_cast<std::size_t>(node)] = 0.0;
    const InteriorProblem problem{ScalarField(g, 1.0), f, std::nullopt, std::nullopt};
    SolverConfig cfg;
    cfg.horizon = 1.0;
    ScalarField last;
    march_interior(problem, {}, cfg, [&](int, const ScalarField& u) { last = u; });
    const double phase = std::cos(std::sqrt(2.0) * std::numbers::pi * 1.0);
    double err = 0.0;
    for (std::size_t node = 0; node < last.size(); ++node) {
      const Point p = g->point(static_cast<int>(node));
      err = std::max(err, std::abs(last[node] - phase * mode(p.x, p.y)));
    }
    errors.push_back(err);
  }
  const double o1 = std::log2(errors[0] / errors[1]);
  const double o2 = std::log2(errors[1] / errors[2]);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = o1 >= 1.7 && o1 <= 2.3 && o2 >= 1.7 && o2 <= 2.3 && seconds < 30.0;
  return {ok, fmt::format("errors {} {} {}, orders {} {}, {} s", num(errors[0]), num(errors[1]), num(errors[2]),
                          num(o1), num(o2), num(seconds))};
}

// 2 ------------------------------------------------------------------------
Outcome reduction_exactness(const AcceptanceOptions&) {
  const ExperimentConfig c = config_with_n(101);
  const Scenario s = make_scenario(c);
  const ScalarField F = sample_perturbation(s.grid, default_spec(c, 1, 0.05));
  const ScalarField D2 = s.D1 - F;
  SolverConfig cfg = s.solver;
  cfg.horizon = s.T;
  cfg.max_coefficient = s.c0;
  const InteriorProblem p1{s.D1, s.f, std::nullopt, std::nullopt};
  const InteriorProblem p2{D2, s.f, std::nullopt, std::nullopt};
  const TimeGrid tg = make_time_grid(s.grid->h, s.c0, cfg);
  InteriorStepper u1(p1, tg.dt);
  double max_gap = 0.0;
  double max_diff = 0.0;
  march_reduction(s.D1, F, p2, cfg, 0, [&](int k, const ScalarField& w, const ScalarField& u2) {
    if (k > 0) u1.advance();
    const ScalarField& a = u1.current();
    for (std::size_t n = 0; n < w.size(); ++n) {
      const double diff = a[n] - u2[n];
      max_diff = std::max(max_diff, std::abs(diff));
      max_gap = std::max(max_gap, std::abs(w[n] - diff));
    }
  });
  const double rel = max_diff > 0.0 ? max_gap / max_diff : max_gap;
  return {max_diff > 0.0 && rel <= 1e-10,
          fmt::format("max|w-(u1-u2)| / max|u1-u2| = {} over {} steps", num(rel), tg.steps)};
}

// 3 ------------------------------------------------------------------------
Outcome zero_perturbation(const AcceptanceOptions&) {
  const ExperimentConfig c = config_with_n(51);
  const Scenario s = make_scenario(c);
  StabilityBase base;
  base.D1 = s.D1;
  base.f = s.f;
  base.c0 = s.c0;
  base.r0 = c.stability.r0;
  base.T0 = s.T0;
  base.solver = s.solver;
  const std::vector<PerturbationSpec> specs{default_spec(c, 1, 0.0)};
  const StabilityReport r = run_stability_experiment(base, specs, s.T);
  const bool ok = r.rows.size() == 1 && r.rows[0].misfit <= 1e-12 && r.rows[0].undefined;
  return {ok, fmt::format("misfit = {}", r.rows.empty() ? std::string("missing") : num(r.rows[0].misfit))};
}

// 4 ------------------------------------------------------------------------
Outcome geometry(const AcceptanceOptions&) {
  const GridPtr g = build_grid({0.0, 1.0, 0.0, 1.0}, 101, Extents{0.3, 0.7, 0.3, 0.7});
  const ScalarField d = build_quadratic_d(g, {-0.5, -0.5}, 1.2);
  const GeometryReport r = verify_assumptions(d, ScalarField(g, 1.0));
  const double T0 = compute_T0(d);
  const double T0_exact = 2.0 * std::sqrt(5.4);

  TempDir tmp;
  const json cfg = {{"coefficient", {{"bumps", json::array()}}}};
  const int code = run_cli("verify-geometry", cfg, tmp.path(), tmp.path() / "out");

  const bool ok = std::abs(r.min_hessian_eig - 2.4) <= 1e-6 && std::abs(r.min_grad_ratio - 4.8) <= 1e-6 &&
                  std::abs(T0 - T0_exact) <= 1e-12 * T0_exact && r.passes_A1 && r.passes_A2 && code == 0;
  return {ok, fmt::format("min_hessian_eig {}, min_grad_ratio {}, T0 error {}, verify-geometry exit {}",
                          format_real(r.min_hessian_eig), format_real(r.min_grad_ratio),
                          num(std::abs(T0 - T0_exact)), code)};
}

// 5 ------------------------------------------------------------------------
Outcome weight(const AcceptanceOptions&) {
  const GridPtr g = build_grid({0.0, 1.0, 0.0, 1.0}, 101, Extents{0.3, 0.7, 0.3, 0.7});
  const ScalarField d = build_quadratic_d(g, {-0.5, -0.5}, 1.2);
  const ConvexWeight w = build_weight(d, 5.0);
  check_weight_invariants(w);
  const bool ok = std::abs(w.delta - 0.425) <= 1e-12 && std::abs(w.c - 0.949) <= 1e-12 &&
                  std::abs(w.sigma - 0.3) <= 1e-12;
  return {ok, fmt::format("delta {}, c {}, sigma {}", format_real(w.delta), format_real(w.c), format_real(w.sigma))};
}

// 6 ------------------------------------------------------------------------
double wtt0_residual(int n) {
  const ExperimentConfig c = config_with_n(n);
  const Scenario s = make_scenario(c);
  const ScalarField F = sample_perturbation(s.grid, default_spec(c, 1, 0.05));
  const InteriorProblem reference{s.D1 - F, s.f, std::nullopt, std::nullopt};
  SolverConfig cfg = s.solver;
  cfg.max_coefficient = s.c0;
  cfg.horizon = 0.05;
  SpaceTimeField w, R;
  w.grid = R.grid = s.grid;
  const TimeGrid tg = march_reduction(s.D1, F, reference, cfg, 0, [&](int k, const ScalarField& wk, const ScalarField& rk) {
    if (k < 2) {
      w.snapshots.push_back(wk);
      R.snapshots.push_back(rk);
    }
  });
  w.dt = R.dt = tg.dt;
  return check_wtt0(w, F, R).residual;
}

Outcome initial_acceleration(const AcceptanceOptions&) {
  const double r101 = wtt0_residual(101);
  const double r201 = wtt0_residual(201);
  return {r201 <= 0.05 && r201 < r101, fmt::format("residual n=101 {}, n=201 {}", num(r101), num(r201))};
}

// 7 ------------------------------------------------------------------------
// The vantage point sits just below the square so that the weight on K is
// comparable to its maximum over the domain; a resolved smooth perturbation
// fills K.
std::vector<L1Terms> l1_terms(int n, const std::vector<double>& taus) {
  ExperimentConfig c = config_with_n(n);
  c.geometry.x0 = {0.5, -0.1};
  c.coefficient.bumps = {BumpConfig{{0.5, 0.5}, 0.15, 0.2}};
  const Scenario s = make_scenario(c);
  ScalarField F = bump_field(s.grid, {0.5, 0.5}, 0.2);
  F *= 0.05;
  const InteriorProblem reference{s.D1 - F, s.f, std::nullopt, std::nullopt};
  SolverConfig cfg = s.solver;
  cfg.max_coefficient = s.c0;
  return l1_identity_terms(s.D1, F, reference, build_weight(s.d, s.T), taus, cfg);
}

Outcome l1_identity(const AcceptanceOptions&) {
  const std::vector<double> taus{0.0, 2.0};
  const auto coarse = l1_terms(101, taus);
  const auto fine = l1_terms(201, taus);
  bool ok = true;
  std::string detail;
  for (std::size_t q = 0; q < taus.size(); ++q) {
    const double rc = coarse[q].residual();
    const double rf = fine[q].residual();
    ok = ok && rf <= 0.05 && rf <= 0.7 * rc;
    detail += fmt::format("tau {}: n=101 {}, n=201 {}; ", num(taus[q]), num(rc), num(rf));
  }
  return {ok, detail};
}

// 8 ------------------------------------------------------------------------
StabilityBase base_from(const ExperimentConfig& c, const Scenario& s, Formulation form) {
  StabilityBase base;
  base.D1 = s.D1;
  base.f = s.f;
  base.c0 = s.c0;
  base.r0 = c.stability.r0;
  base.T0 = s.T0;
  base.formulation = form;
  base.solver = s.solver;
  return base;
}

Outcome stability_ratios(const AcceptanceOptions& opt) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = config_with_n(101);
  const Scenario s = make_scenario(c);
  const double amplitude = 0.05;
  std::vector<PerturbationSpec> specs, doubled;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    specs.push_back(default_spec(c, seed, amplitude));
    doubled.push_back(default_spec(c, seed, 2.0 * amplitude));
  }
  const StabilityReport coef = run_stability_experiment(base_from(c, s, Formulation::coefficient), specs, s.T, opt.threads);
  bool finite = coef.rows.size() == specs.size();
  for (const auto& r : coef.rows) finite = finite && std::isfinite(r.ratio) && r.ratio > 0.0;
  const double spread = coef.summary.min_ratio > 0.0 ? coef.summary.max_ratio / coef.summary.min_ratio : INFINITY;

  const StabilityBase src = base_from(c, s, Formulation::source);
  const StabilityReport a1 = run_stability_experiment(src, specs, s.T, opt.threads);
  const StabilityReport a2 = run_stability_experiment(src, doubled, s.T, opt.threads);
  double worst = a1.rows.size() == specs.size() && a2.rows.size() == specs.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a1.rows.size(), a2.rows.size()); ++i) {
    worst = std::max(worst, std::abs(a2.rows[i].ratio - a1.rows[i].ratio) / std::abs(a1.rows[i].ratio));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool ok = finite && spread <= 100.0 && worst <= 1e-6 && seconds < 600.0;
  return {ok, fmt::format("rows {}, ratios in [{}, {}], max/min {}, doubling change {}, {} s", coef.rows.size(),
                          num(coef.summary.min_ratio), num(coef.summary.max_ratio), num(spread), num(worst),
                          num(seconds))};
}

// 9 ------------------------------------------------------------------------
Outcome horizon_sweep(const AcceptanceOptions&) {
  const ExperimentConfig c = config_with_n(51);
  const Scenario s = make_scenario(c);
  std::vector<double> horizons;
  for (double f : c.stability.T_factors) horizons.push_back(f * s.T0);
  const StabilityReport r =
      sweep_horizon(base_from(c, s, Formulation::coefficient), default_spec(c, 1, 0.05), horizons);
  bool ok = r.rows.size() == 5;
  std::string detail;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (i > 0) ok = ok && r.rows[i].misfit >= r.rows[i - 1].misfit && r.rows[i].ratio <= r.rows[i - 1].ratio;
    detail += fmt::format("T {} misfit {} ratio {}; ", num(r.rows[i].T), num(r.rows[i].misfit), num(r.rows[i].ratio));
  }
  return {ok, detail};
}

// 10 -----------------------------------------------------------------------
Outcome positivity_stress(const AcceptanceOptions& opt) {
  ExperimentConfig c = config_with_n(51);
  const Scenario good = make_scenario(c);
  c.data.f = InitialShape::sine_cutoff;
  const Scenario bad = make_scenario(c);
  std::vector<PerturbationSpec> specs;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) specs.push_back(default_spec(c, seed, 0.05));
  const StabilityReport rg = run_stability_experiment(base_from(c, good, Formulation::coefficient), specs, good.T, opt.threads);
  const StabilityReport rb = run_stability_experiment(base_from(c, bad, Formulation::coefficient), specs, bad.T, opt.threads);
  const bool ok = rg.positivity_ok && !rb.positivity_ok && rg.rows.size() == 10 && rb.rows.size() == 10 &&
                  rb.summary.median_ratio > rg.summary.median_ratio;
  return {ok, fmt::format("median ratio with positivity {}, with f = 0 on K {}", num(rg.summary.median_ratio),
                          num(rb.summary.median_ratio))};
}

// 11, 12 -------------------------------------------------------------------
ReconProblem recon_problem(int n, std::vector<Point> centers, double radius, const std::vector<double>& truth) {
  const ExperimentConfig c = config_with_n(n);
  const Scenario s = make_scenario(c);
  ReconProblem p;
  p.D_base = ScalarField(s.grid, 1.0);
  p.f = s.f;
  p.T = s.T;
  p.T0 = s.T0;
  p.basis = make_basis(s.grid, std::move(centers), radius);
  p.c0 = s.c0;
  p.solver = s.solver;
  p.data = synthesize_data(p, truth);
  return p;
}

const std::vector<Point> kThreeCenters{{0.4, 0.4}, {0.6, 0.45}, {0.48, 0.6}};

bool monotone(const ReconResult& r) {
  for (std::size_t i = 1; i < r.log.size(); ++i) {
    if (r.log[i].J > r.log[i - 1].J) return false;
  }
  return true;
}

Outcome reconstruction(const AcceptanceOptions& opt) {
  ReconOptions o;
  o.threads = opt.threads;
  const ReconProblem one = recon_problem(41, {{0.5, 0.5}}, 0.12, {0.1});
  const ReconResult r1 = reconstruct(one, {0.0}, o);
  const double e1 = std::abs(r1.a_hat[0] - 0.1) / 0.1;

  const std::vector<double> truth{0.1, -0.05, 0.08};
  const ReconProblem three = recon_problem(41, kThreeCenters, 0.08, truth);
  const ReconResult r3 = reconstruct(three, {0.0, 0.0, 0.0}, o);
  double e3 = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) e3 = std::max(e3, std::abs(r3.a_hat[i] - truth[i]) / std::abs(truth[i]));

  const int it1 = r1.log.empty() ? 0 : r1.log.back().iter;
  const int it3 = r3.log.empty() ? 0 : r3.log.back().iter;
  const bool ok = e1 <= 0.05 && e3 <= 0.05 && it1 <= 200 && it3 <= 200 && monotone(r1) && monotone(r3) &&
                  !r1.aborted && !r3.aborted;
  return {ok, fmt::format("single bump error {} in {} iterations; three bumps max error {} in {} iterations{}", num(e1),
                          it1, num(e3), it3, r3.diagnostic.empty() ? "" : " (" + r3.diagnostic + ")")};
}

Outcome gradient_consistency(const AcceptanceOptions& opt) {
  const ReconProblem p = recon_problem(41, kThreeCenters, 0.08, {0.1, -0.05, 0.08});
  const std::vector<double> a{0.03, -0.02, 0.05};
  const auto g3 = numeric_gradient(p, a, 1e-3, opt.threads);
  const auto g4 = numeric_gradient(p, a, 1e-4, opt.threads);
  double diff = 0.0, norm = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (g3[i] - g4[i]) * (g3[i] - g4[i]);
    norm += g4[i] * g4[i];
  }
  const double rel = std::sqrt(diff / norm);
  return {norm > 0.0 && rel <= 1e-3, fmt::format("relative difference {}", num(rel))};
}

// 13 -----------------------------------------------------------------------
Outcome pat_pipeline(const AcceptanceOptions& opt) {
  const ExperimentConfig c = config_with_n(161);
  const Scenario s = make_scenario(c);
  const PatConfig& pc = c.pat;
  GridConfig gc = c.grid;
  const GridPtr g = make_grid(gc);
  const BumpBasis basis = make_basis(g, pc.centers, pc.radius);
  const ScalarField D_true = ScalarField(g, 1.0) + basis.combine(pc.truth);
  ScalarField c_true(g);
  for (std::size_t n = 0; n < c_true.size(); ++n) c_true[n] = std::sqrt(D_true[n]);
  const ScalarField p0 = pc.p0_amplitude * plateau(g, pc.p0_inner, pc.p0_outer);

  PatScene scene;
  scene.c_speed = c_true;
  scene.p0 = p0;
  scene.T = s.T;
  scene.r0 = pc.r0;
  scene.c0 = s.c0;
  scene.solver = s.solver;
  const PatMeasurement m = synthesize_measurement(scene);
  const BoundaryTrace oracle = free_space_normal_trace(scene);
  const BoundaryTrace gap = subtract(m.nu_trace, oracle);
  const double trace_err = trace_l2(gap, gap.horizon()) / trace_l2(oracle, oracle.horizon());

  const ScalarField round = to_pressure(to_internal(p0, c_true), c_true);
  const double round_err = (round - p0).max_abs() / p0.max_abs();

  JointRecoveryInput in;
  in.f_known = to_initial(p0, c_true);
  in.h = m.h;
  in.nu_trace = m.nu_trace;
  in.basis = basis;
  in.T = scene.T;
  in.T0 = s.T0;
  in.r0 = pc.r0;
  in.c0 = scene.c0;
  in.solver = pat_solver_config(scene);
  in.options.threads = opt.threads;
  const JointRecovery rec = joint_recover(in);
  const double c_err = (rec.c_hat - c_true).max_abs() / (c_true - ScalarField(g, 1.0)).max_abs();
  const double product_gap = (rec.p0_hat - hadamard(in.f_known, hadamard(rec.c_hat, rec.c_hat))).max_abs();

  const bool ok = trace_err <= 0.02 && round_err <= 1e-15 && c_err <= 0.05 && product_gap == 0.0;
  return {ok, fmt::format("exterior vs free-space trace {}, round trip {}, c error {}, product gap {}", num(trace_err),
                          num(round_err), num(c_err), num(product_gap))};
}

// 14 -----------------------------------------------------------------------
Outcome determinism(const AcceptanceOptions&) {
  TempDir tmp;
  const json small = {{"grid", {{"n", 31}}},
                      {"stability", {{"seeds", {1, 2, 3}}}},
                      {"recon", {{"max_iter", 3}}},
                      {"simulate", {{"horizon", 0.5}}}};
  std::vector<std::string> mismatched;
  int files = 0;
  for (const auto& command : command_names()) {
    const fs::path a = tmp.path() / (command + "-a");
    const fs::path b = tmp.path() / (command + "-b");
    const int ca = run_cli(command, small, tmp.path(), a);
    const int cb = run_cli(command, small, tmp.path(), b);
    if (ca != 0 || cb != 0) {
      mismatched.push_back(fmt::format("{} exit {} / {}", command, ca, cb));
      continue;
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      ++files;
      const fs::path other = b / entry.path().filename();
      if (!fs::exists(other) || read_file(entry.path()) != read_file(other)) {
        mismatched.push_back(command + "/" + entry.path().filename().string());
      }
    }
  }
  std::string detail = fmt::format("{} CSV files compared", files);
  for (const auto& m : mismatched) detail += "; mismatch " + m;
  return {mismatched.empty() && files > 0, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const AcceptanceOptions&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "manufactured-solution convergence", manufactured_convergence},
      {2, "reduction exactness", reduction_exactness},
      {3, "zero-perturbation soundness", zero_perturbation},
      {4, "geometry verification", geometry},
      {5, "weight construction", weight},
      {6, "initial-acceleration identity", initial_acceleration},
      {7, "weighted energy identity", l1_identity},
      {8, "stability-ratio properties", stability_ratios},
      {9, "horizon sweep monotonicity", horizon_sweep},
      {10, "positivity stress ordering", positivity_stress},
      {11, "reconstruction", reconstruction},
      {12, "gradient consistency", gradient_consistency},
      {13, "PAT pipeline", pat_pipeline},
      {14, "determinism", determinism},
  };
  return all;
}

}  // namespace

int acceptance_criterion_count() { return static_cast<int>(criteria().size()); }

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options, std::ostream& log) {
  std::vector<CriterionResult> results;
  for (const auto& c : criteria()) {
    if (!options.only.empty() && !options.only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    try {
      const Outcome o = c.run(options);
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << fmt::format("{} criterion {:2d} {}: {} [{:.1f} s]\n", r.passed ? "PASS" : "FAIL", r.id, r.name, r.detail,
                       r.seconds)
        << std::flush;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace wavestab
