#include "wavestab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "wavestab/errors.hpp"
#include "wavestab/source.hpp"

namespace wavestab {

double bump_profile(double r, double radius) {
  if (r >= radius) return 0.0;
  const double s = 1.0 - (r / radius) * (r / radius);
  return s * s * s;
}

ScalarField bump_field(GridPtr grid, Point center, double radius) {
  ensure(radius > 0.0, "bump radius must be positive");
  return ScalarField::from_function(std::move(grid), [&](double x, double y) {
    return bump_profile(std::hypot(x - center.x, y - center.y), radius);
  });
}

ScalarField sample_perturbation(GridPtr grid, const PerturbationSpec& spec) {
  ensure(spec.bump_count >= 0, "bump_count must be nonnegative");
  ensure(spec.bump_radius > 0.0, "bump_radius must be positive");
  const Extents& r = spec.region;
  const double lo_x = r.x_min + spec.bump_radius;
  const double hi_x = r.x_max - spec.bump_radius;
  const double lo_y = r.y_min + spec.bump_radius;
  const double hi_y = r.y_max - spec.bump_radius;
  ensure(lo_x <= hi_x && lo_y <= hi_y, "bump radius does not fit in the placement region");

  ScalarField F(grid);
  if (spec.amplitude == 0.0 || spec.bump_count == 0) return F;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(lo_x, hi_x);
  std::uniform_real_distribution<double> uy(lo_y, hi_y);
  for (int b = 0; b < spec.bump_count; ++b) {
    const double cx = ux(rng);
    const double cy = uy(rng);
    F += bump_field(grid, {cx, cy}, spec.bump_radius);
  }
  F *= spec.amplitude;
  check_supported_in_k(F);
  return F;
}

bool positivity_holds(const ScalarField& f, double r0) {
  const Grid& g = f.grid();
  ensure(g.k_mask.size() == g.size(), "grid has no K");
  for (std::size_t n = 0; n < f.size(); ++n) {
    if (g.k_mask[n] && !(std::abs(f[n]) >= r0)) return false;
  }
  return true;
}

StabilitySummary summarize(const std::vector<StabilityRow>& rows) {
  std::vector<double> r;
  for (const auto& row : rows) {
    if (std::isfinite(row.ratio)) r.push_back(row.ratio);
  }
  StabilitySummary s;
  s.finite_count = static_cast<int>(r.size());
  if (r.empty()) return s;
  std::sort(r.begin(), r.end());
  s.min_ratio = r.front();
  s.max_ratio = r.back();
  const std::size_t mid = r.size() / 2;
  s.median_ratio = (r.size() % 2 == 1) ? r[mid] : 0.5 * (r[mid - 1] + r[mid]);
  return s;
}

namespace {

SolverConfig run_config(const StabilityBase& base, double T) {
  ensure(T > 0.0, "horizon must be positive");
  SolverConfig cfg = base.solver;
  cfg.horizon = T;
  cfg.record_stride = 1;
  if (cfg.max_coefficient <= 0.0) cfg.max_coefficient = base.c0;
  return cfg;
}

const std::vector<int>& observed_nodes(const StabilityBase& base) {
  return base.observed.empty() ? base.D1.grid().gamma1 : base.observed;
}

InteriorProblem problem_for(const StabilityBase& base, const ScalarField& D) {
  return InteriorProblem{D, base.f, std::nullopt, base.h};
}

std::optional<std::string> admissibility_issue(const StabilityBase& base, const ScalarField& D2) {
  const double lo = 1.0 / base.c0;
  for (std::size_t n = 0; n < D2.size(); ++n) {
    if (!(D2[n] >= lo && D2[n] <= base.c0)) {
      return fmt::format("D2 = {} at node {} outside [{}, {}]", format_real(D2[n]), n, format_real(lo),
                         format_real(base.c0));
    }
  }
  return std::nullopt;
}

BoundaryTrace w_trace_source_form(const StabilityBase& base, const ScalarField& F, const SolverConfig& cfg) {
  const Grid& g = base.D1.grid();
  const auto& nodes = observed_nodes(base);
  BoundaryTrace trace;
  trace.grid = base.D1.grid_ptr();
  trace.nodes = nodes;
  trace.kind = TraceKind::normal_derivative;
  const InteriorProblem reference = problem_for(base, base.D1);
  const TimeGrid tg = march_reduction(base.D1, F, reference, cfg, 0, [&](int, const ScalarField& w, const ScalarField&) {
    for (int node : nodes) trace.values.push_back(normal_derivative(g, w.values(), node));
  });
  trace.dt = tg.dt;
  trace.nt = tg.steps + 1;
  return trace;
}

BoundaryTrace base_trace(const StabilityBase& base, const SolverConfig& cfg) {
  const InteriorProblem p1 = problem_for(base, base.D1);
  return solve_interior_trace(p1, {}, cfg, observed_nodes(base));
}

BoundaryTrace difference_with(const StabilityBase& base, const ScalarField& F, const SolverConfig& cfg,
                              const BoundaryTrace* first) {
  if (base.formulation == Formulation::source) {
    check_supported_in_k(F);
    return dt_trace(w_trace_source_form(base, F, cfg));
  }
  const ScalarField D2 = base.D1 - F;
  const InteriorProblem p2 = problem_for(base, D2);
  const BoundaryTrace second = solve_interior_trace(p2, {}, cfg, observed_nodes(base));
  if (first) return dt_trace(subtract(*first, second));
  return dt_trace(subtract(base_trace(base, cfg), second));
}

StabilityRow make_row(const StabilityBase& base, const PerturbationSpec& spec, const ScalarField& F,
                      const BoundaryTrace& diff, double T, bool positivity) {
  const StabilityRatio r = stability_ratio(F, diff, T);
  StabilityRow row;
  row.seed = spec.seed;
  row.amplitude = spec.amplitude;
  row.T = T;
  row.delta_norm = r.delta_norm_F;
  row.misfit = r.trace_misfit;
  row.ratio = r.ratio;
  row.undefined = r.undefined;
  row.positivity_ok = positivity;
  row.t_gt_t0 = T > base.T0;
  return row;
}

}  // namespace

BoundaryTrace difference_trace(const StabilityBase& base, const ScalarField& F, double T) {
  return difference_with(base, F, run_config(base, T), nullptr);
}

StabilityReport run_stability_experiment(const StabilityBase& base, std::span<const PerturbationSpec> specs,
                                         double T, int threads) {
  const SolverConfig cfg = run_config(base, T);
  StabilityReport report;
  report.positivity_ok = positivity_holds(base.f, base.r0);
  report.t_gt_t0 = T > base.T0;
  if (specs.empty()) return report;

  std::optional<BoundaryTrace> first;
  if (base.formulation == Formulation::coefficient) first = base_trace(base, cfg);

  struct Outcome {
    std::optional<StabilityRow> row;
    std::optional<SkippedSpec> skipped;
  };
  std::vector<Outcome> outcomes(specs.size());
  auto work = [&](std::size_t i) {
    const PerturbationSpec& spec = specs[i];
    try {
      const ScalarField F = sample_perturbation(base.D1.grid_ptr(), spec);
      if (auto issue = admissibility_issue(base, base.D1 - F)) {
        outcomes[i].skipped = SkippedSpec{spec.seed, spec.amplitude, *issue};
        return;
      }
      const BoundaryTrace diff = difference_with(base, F, cfg, first ? &*first : nullptr);
      outcomes[i].row = make_row(base, spec, F, diff, T, report.positivity_ok);
    } catch (const PreconditionError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      outcomes[i].skipped = SkippedSpec{spec.seed, spec.amplitude, e.what()};
    }
  };

  int workers = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(specs.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = static_cast<std::size_t>(t); i < specs.size(); i += static_cast<std::size_t>(workers)) {
            work(i);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  for (auto& o : outcomes) {
    if (o.row) report.rows.push_back(*o.row);
    if (o.skipped) report.skipped.push_back(*o.skipped);
  }
  report.summary = summarize(report.rows);
  return report;
}

StabilityReport sweep_horizon(const StabilityBase& base, const PerturbationSpec& spec,
                              std::span<const double> horizons) {
  ensure(!horizons.empty(), "sweep needs at least one horizon");
  double t_max = 0.0;
  for (double T : horizons) {
    ensure(T > 0.0, "horizons must be positive");
    t_max = std::max(t_max, T);
  }
  const ScalarField F = sample_perturbation(base.D1.grid_ptr(), spec);
  if (auto issue = admissibility_issue(base, base.D1 - F)) throw std::invalid_argument(*issue);
  const BoundaryTrace diff = difference_trace(base, F, t_max);

  StabilityReport report;
  report.positivity_ok = positivity_holds(base.f, base.r0);
  report.t_gt_t0 = true;
  for (double T : horizons) {
    report.rows.push_back(make_row(base, spec, F, diff, std::min(T, diff.horizon()), report.positivity_ok));
    report.rows.back().T = T;
    report.t_gt_t0 = report.t_gt_t0 && T > base.T0;
  }
  report.summary = summarize(report.rows);
  return report;
}

void write_csv(const StabilityReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  ensure(static_cast<bool>(out), "cannot open " + path.string());
  out << "seed,amplitude,T,delta_norm,misfit,ratio,positivity_ok,t_gt_t0\n";
  for (const auto& r : report.rows) {
    out << r.seed << ',' << format_real(r.amplitude) << ',' << format_real(r.T) << ',' << format_real(r.delta_norm)
        << ',' << format_real(r.misfit) << ',' << format_real(r.ratio) << ',' << (r.positivity_ok ? 1 : 0) << ','
        << (r.t_gt_t0 ? 1 : 0) << '\n';
  }
}

}  // namespace wavestab
