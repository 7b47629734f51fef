#include "wavestab/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "wavestab/config.hpp"
#include "wavestab/errors.hpp"
#include "wavestab/geometry.hpp"
#include "wavestab/identity.hpp"
#include "wavestab/norms.hpp"
#include "wavestab/pat.hpp"
#include "wavestab/recon.hpp"
#include "wavestab/stability.hpp"
#include "wavestab/wave.hpp"

#ifndef WAVESTAB_VERSION
#define WAVESTAB_VERSION "0.0.0"
#endif

namespace wavestab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Raised once the geometry report has been written and the assumptions fail.
struct GeometryFailure {};

struct Context {
  ExperimentConfig config;
  Scenario scenario;
  fs::path dir;
  int threads = 1;
  std::vector<double> taus;
  std::vector<std::string> artifacts;
  std::ostream* out = nullptr;

  fs::path file(const std::string& name) {
    artifacts.push_back(name);
    return dir / name;
  }
  void write_field(const std::string& stem, const ScalarField& field) {
    if (config.output.csv) wavestab::write_csv(field, file(stem + ".csv"));
    if (config.output.raw) write_raw(field, file(stem + ".raw"));
  }
  void write_json(const std::string& name, const json& doc) {
    std::ofstream os(file(name), std::ios::binary);
    ensure(static_cast<bool>(os), "cannot write " + name);
    os << doc.dump(2) << '\n';
  }
};

json real_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json weight_json(const ConvexWeight& w) {
  return {{"T", w.T},         {"T0", w.T0},   {"delta", w.delta}, {"c", w.c},
          {"sigma", w.sigma}, {"t0", w.t0},   {"t1", w.t1},       {"m0", w.m0},
          {"max_d", w.max_d}};
}

StabilityBase stability_base(const Context& ctx) {
  StabilityBase base;
  base.D1 = ctx.scenario.D1;
  base.f = ctx.scenario.f;
  base.c0 = ctx.scenario.c0;
  base.r0 = ctx.config.stability.r0;
  base.T0 = ctx.scenario.T0;
  base.formulation = ctx.config.stability.formulation;
  base.solver = ctx.scenario.solver;
  return base;
}

int cmd_verify_geometry(Context& ctx) {
  const Scenario& s = ctx.scenario;
  const GeometryReport report = verify_assumptions(s.d, s.D1);
  json doc = to_json(report);
  doc["T0"] = s.T0;
  doc["T"] = s.T;
  doc["T_gt_T0"] = s.T > s.T0;
  if (s.T > s.T0) doc["weight"] = weight_json(build_weight(s.d, s.T));
  ctx.write_json("geometry.json", doc);
  *ctx.out << fmt::format("passes_A1={} passes_A2={} T0={}\n", report.passes_A1, report.passes_A2,
                          format_real(s.T0));
  if (!report.passes_A1 || !report.passes_A2) throw GeometryFailure{};
  return exit_ok;
}

int cmd_simulate(Context& ctx) {
  const Scenario& s = ctx.scenario;
  SolverConfig cfg = s.solver;
  cfg.horizon = ctx.config.simulate.horizon.value_or(s.T);
  const InteriorProblem problem{s.D1, s.f, std::nullopt, std::nullopt};
  const auto& nodes = s.grid->gamma1;
  const int stride = ctx.config.simulate.trace_stride;
  std::vector<int> steps;
  std::vector<double> values;
  ScalarField last;
  const TimeGrid tg = march_interior(problem, {}, cfg, [&](int k, const ScalarField& u) {
    if (k % stride == 0) {
      steps.push_back(k);
      for (int node : nodes) values.push_back(normal_derivative(*s.grid, u.values(), node));
    }
    last = u;
  });
  std::ofstream trace(ctx.file("trace.csv"), std::ios::binary);
  ensure(static_cast<bool>(trace), "cannot write trace.csv");
  trace << "node_x,node_y,t,value\n";
  std::size_t q = 0;
  for (int k : steps) {
    const std::string t = format_real(k * tg.dt);
    for (int node : nodes) {
      const Point p = s.grid->point(node);
      trace << format_real(p.x) << ',' << format_real(p.y) << ',' << t << ',' << format_real(values[q++]) << '\n';
    }
  }
  ctx.write_field("u_final", last);
  *ctx.out << fmt::format("steps={} dt={} horizon={}\n", tg.steps, format_real(tg.dt), format_real(tg.steps * tg.dt));
  return exit_ok;
}

int cmd_stability(Context& ctx) {
  const StabilityBase base = stability_base(ctx);
  const auto specs = perturbation_specs(ctx.config);
  const StabilityReport report = run_stability_experiment(base, specs, ctx.scenario.T, ctx.threads);
  write_csv(report, ctx.file("stability.csv"));
  json skipped = json::array();
  for (const auto& s : report.skipped) skipped.push_back({{"seed", s.seed}, {"amplitude", s.amplitude}, {"reason", s.reason}});
  ctx.write_json("stability_summary.json",
                 {{"rows", report.rows.size()},
                  {"finite", report.summary.finite_count},
                  {"min_ratio", real_or_null(report.summary.min_ratio)},
                  {"max_ratio", real_or_null(report.summary.max_ratio)},
                  {"median_ratio", real_or_null(report.summary.median_ratio)},
                  {"positivity_ok", report.positivity_ok},
                  {"t_gt_t0", report.t_gt_t0},
                  {"T", ctx.scenario.T},
                  {"T0", ctx.scenario.T0},
                  {"skipped", skipped}});
  *ctx.out << fmt::format("rows={} skipped={} min_ratio={} max_ratio={} median_ratio={}\n", report.rows.size(),
                          report.skipped.size(), format_real(report.summary.min_ratio),
                          format_real(report.summary.max_ratio), format_real(report.summary.median_ratio));
  return exit_ok;
}

PerturbationSpec first_spec(const Context& ctx) {
  const auto specs = perturbation_specs(ctx.config);
  if (specs.empty()) throw ConfigError("this command needs at least one seed and one amplitude");
  return specs.front();
}

int cmd_sweep_horizon(Context& ctx) {
  const StabilityBase base = stability_base(ctx);
  std::vector<double> horizons;
  for (double f : ctx.config.stability.T_factors) horizons.push_back(f * ctx.scenario.T0);
  if (horizons.empty()) throw ConfigError("stability.T_factors must not be empty");
  const StabilityReport report = sweep_horizon(base, first_spec(ctx), horizons);
  write_csv(report, ctx.file("sweep.csv"));
  for (const auto& r : report.rows) {
    *ctx.out << fmt::format("T={} misfit={} ratio={}\n", format_real(r.T), format_real(r.misfit), format_real(r.ratio));
  }
  return exit_ok;
}

int cmd_identity(Context& ctx) {
  const Scenario& s = ctx.scenario;
  const std::vector<double> taus = ctx.taus.empty() ? ctx.config.stability.taus : ctx.taus;
  if (taus.empty()) throw ConfigError("identity needs at least one tau");
  for (double t : taus) {
    if (!(t >= 0.0)) throw ConfigError("tau must be nonnegative");
  }
  const ScalarField F = sample_perturbation(s.grid, first_spec(ctx));
  const ScalarField D2 = s.D1 - F;
  const ConvexWeight weight = build_weight(s.d, s.T);
  const InteriorProblem reference{D2, s.f, std::nullopt, std::nullopt};
  SolverConfig cfg = s.solver;
  cfg.max_coefficient = s.c0;
  const auto terms = l1_identity_terms(s.D1, F, reference, weight, taus, cfg);
  std::ofstream os(ctx.file("identity.csv"), std::ios::binary);
  ensure(static_cast<bool>(os), "cannot write identity.csv");
  os << "tau,lhs,rhs,residual,term1,term2,term3,term4,term5,term6\n";
  for (const auto& t : terms) {
    os << format_real(t.tau) << ',' << format_real(t.lhs) << ',' << format_real(t.rhs()) << ','
       << format_real(t.residual());
    for (double v : t.rhs_terms) os << ',' << format_real(v);
    os << '\n';
    *ctx.out << fmt::format("tau={} residual={}\n", format_real(t.tau), format_real(t.residual()));
  }
  return exit_ok;
}

ReconOptions recon_options(const Context& ctx) {
  ReconOptions o;
  o.max_iter = ctx.config.recon.max_iter;
  o.lower = ctx.config.recon.lower;
  o.upper = ctx.config.recon.upper;
  o.gradient_step = ctx.config.recon.gradient_step;
  o.threads = ctx.threads;
  return o;
}

BumpBasis basis_or_config_error(GridPtr grid, std::vector<Point> centers, double radius) {
  try {
    return make_basis(std::move(grid), std::move(centers), radius);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("basis: ") + e.what());
  }
}

int cmd_reconstruct(Context& ctx) {
  const Scenario& s = ctx.scenario;
  const ReconConfig& rc = ctx.config.recon;
  ReconProblem problem;
  problem.D_base = ScalarField(s.grid, ctx.config.coefficient.background);
  problem.f = s.f;
  problem.T = s.T;
  problem.T0 = s.T0;
  problem.basis = basis_or_config_error(s.grid, rc.centers, rc.radius);
  problem.lambda = rc.lambda;
  problem.c0 = s.c0;
  problem.solver = s.solver;
  if (!admissible(problem, rc.truth)) throw ConfigError("recon.truth gives an inadmissible coefficient");
  if (!admissible(problem, rc.init)) throw ConfigError("recon.init gives an inadmissible coefficient");
  problem.data = synthesize_data(problem, rc.truth);
  const ReconResult result = reconstruct(problem, rc.init, recon_options(ctx));
  write_log_csv(result, ctx.file("recon_log.csv"));
  const ScalarField D_hat = problem.D_base + problem.basis.combine(result.a_hat);
  ctx.write_field("D_hat", D_hat);
  json rel = json::array();
  for (std::size_t i = 0; i < rc.truth.size(); ++i) {
    rel.push_back(rc.truth[i] != 0.0 ? json(std::abs(result.a_hat[i] - rc.truth[i]) / std::abs(rc.truth[i]))
                                     : json(nullptr));
  }
  ctx.write_json("recon_summary.json", {{"a_hat", result.a_hat},
                                        {"truth", rc.truth},
                                        {"relative_error", rel},
                                        {"J_hat", result.J_hat},
                                        {"iterations", result.log.empty() ? 0 : result.log.back().iter},
                                        {"converged", result.converged},
                                        {"aborted", result.aborted},
                                        {"diagnostic", result.diagnostic}});
  for (std::size_t i = 0; i < result.a_hat.size(); ++i) {
    *ctx.out << fmt::format("a{}={} truth={}\n", i + 1, format_real(result.a_hat[i]), format_real(rc.truth[i]));
  }
  return exit_ok;
}

double relative_sup(const ScalarField& a, const ScalarField& b, double scale) {
  return scale > 0.0 ? (a - b).max_abs() / scale : 0.0;
}

int cmd_pat_demo(Context& ctx) {
  const PatConfig& pc = ctx.config.pat;
  GridConfig gc = ctx.config.grid;
  gc.gamma0.clear();
  const GridPtr grid = make_grid(gc);
  const BumpBasis basis = basis_or_config_error(grid, pc.centers, pc.radius);
  const ScalarField D_true = ScalarField(grid, 1.0) + basis.combine(pc.truth);
  ScalarField c_true(grid);
  for (std::size_t n = 0; n < c_true.size(); ++n) {
    if (!(D_true[n] > 0.0)) throw ConfigError("pat.truth gives a nonpositive coefficient");
    c_true[n] = std::sqrt(D_true[n]);
  }
  const ScalarField p0 = pc.p0_amplitude * plateau(grid, pc.p0_inner, pc.p0_outer);

  PatScene scene;
  scene.c_speed = c_true;
  scene.p0 = p0;
  scene.T = ctx.scenario.T;
  scene.r0 = pc.r0;
  scene.c0 = ctx.scenario.c0;
  scene.solver = ctx.scenario.solver;
  try {
    validate(scene);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("pat scene: ") + e.what());
  }
  const PatMeasurement m = synthesize_measurement(scene);

  JointRecoveryInput in;
  in.f_known = to_initial(p0, c_true);
  in.h = m.h;
  in.nu_trace = m.nu_trace;
  in.basis = basis;
  in.T = scene.T;
  in.T0 = ctx.scenario.T0;
  in.r0 = pc.r0;
  in.c0 = scene.c0;
  in.solver = pat_solver_config(scene);
  in.options = recon_options(ctx);
  const JointRecovery rec = joint_recover(in);

  ctx.write_field("c_true", c_true);
  ctx.write_field("c_hat", rec.c_hat);
  ctx.write_field("p0_true", p0);
  ctx.write_field("p0_hat", rec.p0_hat);
  write_log_csv(rec.recon, ctx.file("pat_log.csv"));

  const ScalarField one(grid, 1.0);
  const double c_scale = (c_true - one).max_abs();
  const double c_delta = delta_norm(c_true - one);
  const double product_gap = (rec.p0_hat - hadamard(in.f_known, hadamard(rec.c_hat, rec.c_hat))).max_abs();
  const json summary = {
      {"rel_inf_error_c", relative_sup(rec.c_hat, c_true, c_scale)},
      {"rel_delta_error_c", c_delta > 0.0 ? delta_norm(rec.c_hat - c_true) / c_delta : 0.0},
      {"rel_inf_error_p0", relative_sup(rec.p0_hat, p0, p0.max_abs())},
      {"rel_delta_error_p0", delta_norm(p0) > 0.0 ? delta_norm(rec.p0_hat - p0) / delta_norm(p0) : 0.0},
      {"product_formula_gap", product_gap},
      {"a_hat", rec.recon.a_hat},
      {"truth", pc.truth},
      {"converged", rec.recon.converged},
      {"aborted", rec.recon.aborted},
      {"diagnostic", rec.recon.diagnostic}};
  ctx.write_json("pat_summary.json", summary);
  *ctx.out << fmt::format("rel_inf_error_c={} rel_inf_error_p0={}\n", format_real(summary["rel_inf_error_c"].get<double>()),
                          format_real(summary["rel_inf_error_p0"].get<double>()));
  return exit_ok;
}

using Handler = int (*)(Context&);

Handler find_handler(const std::string& name) {
  if (name == "verify-geometry") return cmd_verify_geometry;
  if (name == "simulate") return cmd_simulate;
  if (name == "stability") return cmd_stability;
  if (name == "sweep-horizon") return cmd_sweep_horizon;
  if (name == "identity") return cmd_identity;
  if (name == "reconstruct") return cmd_reconstruct;
  if (name == "pat-demo") return cmd_pat_demo;
  return nullptr;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"verify-geometry", "simulate",    "stability", "sweep-horizon",
                                              "identity",        "reconstruct", "pat-demo"};
  return names;
}

fs::path resolve_output_dir(const std::optional<fs::path>& flag, const std::optional<std::string>& from_config) {
  if (flag) return *flag;
  if (from_config && !from_config->empty()) return *from_config;
  if (const char* env = std::getenv("WAVESTAB_OUT"); env && *env) return env;
  return "out";
}

int run_command(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const Handler handler = find_handler(options.command);
  if (!handler) {
    err << "error: unknown command '" << options.command << "'\n";
    return exit_config;
  }
  Context ctx;
  ctx.out = &out;
  ctx.taus = options.taus;
  ctx.threads = options.threads > 0 ? options.threads
                                    : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string config_bytes = "{}";
  try {
    if (options.config_path) {
      config_bytes = read_bytes(*options.config_path);
      json doc;
      try {
        doc = json::parse(config_bytes);
      } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
      }
      ctx.config = parse_config(doc);
    } else {
      ctx.config = parse_config(json::object());
    }
    ctx.scenario = make_scenario(ctx.config);
    ctx.dir = resolve_output_dir(options.out_dir, ctx.config.output.directory);
    fs::create_directories(ctx.dir);

    int code = exit_ok;
    try {
      code = handler(ctx);
    } catch (const GeometryFailure&) {
      code = exit_geometry;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ctx.write_json("manifest.json", {{"command", options.command},
                                     {"config_hash", sha256_hex(config_bytes)},
                                     {"version", WAVESTAB_VERSION},
                                     {"wall_time_seconds", wall},
                                     {"exit_code", code},
                                     {"artifacts", ctx.artifacts}});
    if (code == exit_geometry) err << "error: geometric assumptions failed\n";
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const PreconditionError& e) {
    err << "solver precondition failed: " << e.what() << '\n';
    return exit_precondition;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_config;
  }
}

}  // namespace wavestab
