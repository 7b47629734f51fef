#pragma once

// Perturbation families and the Lipschitz-ratio harness: paired solves with
// D1 and D2 = D1 - F, the time derivative of the Neumann trace difference on
// the observed boundary, and the ratio ||F||_Delta / misfit.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavestab/fields.hpp"
#include "wavestab/norms.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

/// (1 - (r/radius)^2)^3 for r < radius, else 0.
double bump_profile(double r, double radius);

/// One bump of unit height centred at `center`.
ScalarField bump_field(GridPtr grid, Point center, double radius);

struct PerturbationSpec {
  std::uint64_t seed = 0;
  int bump_count = 1;
  double amplitude = 0.0;
  double bump_radius = 0.1;
  Extents region;  ///< bump centres are drawn so that every disc stays inside
};

/// amplitude * sum of bump_count bumps with centres drawn uniformly (mt19937_64
/// seeded with `seed`) from the region shrunk by the radius. Throws if the
/// result is nonzero at a node outside K.
ScalarField sample_perturbation(GridPtr grid, const PerturbationSpec& spec);

enum class Formulation {
  coefficient,  ///< w = u1 - u2 from two nonlinear solves
  source,       ///< w solves the D1 system with source L_F R, R the D1 solution
};

struct StabilityBase {
  ScalarField D1;
  ScalarField f;
  /// Dirichlet data sampled on the solver time grid of the longest horizon.
  std::optional<BoundaryTrace> h;
  /// Observed boundary nodes; empty means the grid's gamma1.
  std::vector<int> observed;
  double c0 = 2.0;
  double r0 = 0.5;
  double T0 = 0.0;
  Formulation formulation = Formulation::coefficient;
  /// The horizon is set per run; a zero max_coefficient is replaced by c0 so
  /// every admissible D2 shares the time grid of D1.
  SolverConfig solver;
};

struct StabilityRow {
  std::uint64_t seed = 0;
  double amplitude = 0.0;
  double T = 0.0;
  double delta_norm = 0.0;
  double misfit = 0.0;
  double ratio = 0.0;
  bool undefined = false;
  bool positivity_ok = false;
  bool t_gt_t0 = false;
};

struct SkippedSpec {
  std::uint64_t seed = 0;
  double amplitude = 0.0;
  std::string reason;
};

struct StabilitySummary {
  int finite_count = 0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  std::vector<SkippedSpec> skipped;
  StabilitySummary summary;
  bool positivity_ok = false;
  bool t_gt_t0 = false;
};

/// min over K of |f| >= r0.
bool positivity_holds(const ScalarField& f, double r0);

/// Summary over the rows whose ratio is finite.
StabilitySummary summarize(const std::vector<StabilityRow>& rows);

/// One row per admissible spec, in input order. `threads` <= 0 uses the
/// hardware concurrency.
StabilityReport run_stability_experiment(const StabilityBase& base, std::span<const PerturbationSpec> specs,
                                         double T, int threads = 1);

/// Fixed F, one solve to the largest horizon, one row per entry of `horizons`.
StabilityReport sweep_horizon(const StabilityBase& base, const PerturbationSpec& spec,
                              std::span<const double> horizons);

/// Time derivative of the Neumann trace of w on the observed nodes, from
/// t = 0 to T, for a given F.
BoundaryTrace difference_trace(const StabilityBase& base, const ScalarField& F, double T);

/// Header: seed,amplitude,T,delta_norm,misfit,ratio,positivity_ok,t_gt_t0.
void write_csv(const StabilityReport& report, const std::filesystem::path& path);

}  // namespace wavestab
