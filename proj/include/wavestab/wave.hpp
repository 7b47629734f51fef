#pragma once

/**
 * @file wave.hpp
 * @brief Explicit leapfrog solvers.
 *
 * Interior problem on the grid of Omega:
 *
 *     u_tt = D lap u + 2 grad D . grad u + lap D u + S,   u = h on the boundary,
 *
 * started from u(0) = f, u_t(0) = f_vel with a Taylor first step. Free-space
 * problem p_tt = c^2 lap p on an enlarged box whose far boundary cannot be
 * reached within the horizon, and the constant-speed exterior problem on the
 * part of the box outside Omega.
 *
 * All solvers share the time grid from make_time_grid(): dt starts at
 * cfl_factor * h / sqrt(2 * max_coefficient) and is shortened so that an
 * integer number of steps lands exactly on the horizon.
 */

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "wavestab/fields.hpp"

namespace wavestab {

enum class TraceKind { normal_derivative, time_derivative_of_normal_derivative, dirichlet_value };

/// Boundary samples, time-major: values[k * nodes.size() + m] is node m at t_k.
struct BoundaryTrace {
  GridPtr grid;
  std::vector<int> nodes;
  double dt = 0.0;
  int nt = 0;
  std::vector<double> values;
  TraceKind kind = TraceKind::normal_derivative;

  std::size_t node_count() const { return nodes.size(); }
  double horizon() const { return nt > 0 ? (nt - 1) * dt : 0.0; }
  double at(int k, std::size_t m) const { return values[static_cast<std::size_t>(k) * nodes.size() + m]; }
  std::span<const double> slice(int k) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(k) * nodes.size(), nodes.size());
  }
};

/// Trace with the same layout holding a - b.
BoundaryTrace subtract(const BoundaryTrace& a, const BoundaryTrace& b);

struct SolverConfig {
  double cfl_factor = 0.5;
  int record_stride = 1;
  double horizon = 1.0;
  /// Bound on max D (or max c^2) used for the time step; 0 means "use the
  /// coefficient's own maximum". Paired solves set the same bound so that they
  /// share one time grid.
  double max_coefficient = 0.0;
};

struct TimeGrid {
  double dt = 0.0;
  int steps = 0;
};

TimeGrid make_time_grid(double h, double max_coefficient, const SolverConfig& config);

/// L_D u = D lap u + 2 grad D . grad u + lap D u at interior nodes (zero on the
/// boundary), with the five-point Laplacian and central gradients.
class CoefficientOperator {
 public:
  explicit CoefficientOperator(const ScalarField& D);
  void apply(std::span<const double> u, std::span<double> out) const;
  ScalarField apply(const ScalarField& u) const;
  const ScalarField& coefficient() const { return D_; }

 private:
  ScalarField D_;
  ScalarField D_x_;
  ScalarField D_y_;
  ScalarField lap_D_;
};

struct InteriorProblem {
  ScalarField D;
  ScalarField f;
  std::optional<ScalarField> f_vel;
  /// Dirichlet values on every boundary node in loop order, sampled on the
  /// solver time grid. Absent means homogeneous data.
  std::optional<BoundaryTrace> dirichlet;
};

/// Single-owner leapfrog integrator for the interior problem.
class InteriorStepper {
 public:
  InteriorStepper(const InteriorProblem& problem, double dt);

  /// Advances from t_k to t_{k+1} using the source sampled at t_k; an empty
  /// span means S = 0.
  void advance(std::span<const double> source = {});

  int step() const { return k_; }
  double time() const { return k_ * dt_; }
  double dt() const { return dt_; }
  const ScalarField& current() const { return u_; }
  const ScalarField& previous() const { return u_prev_; }

 private:
  const InteriorProblem& problem_;
  CoefficientOperator op_;
  double dt_;
  int k_ = 0;
  ScalarField u_prev_;
  ScalarField u_;
  ScalarField u_next_;
  std::vector<double> work_;
};

using SourceFn = std::function<void(int k, std::span<double> out)>;
using StepObserver = std::function<void(int k, const ScalarField& u)>;

/// Marches to config.horizon, calling `observer` at every step k = 0..steps.
TimeGrid march_interior(const InteriorProblem& problem, const SourceFn& source, const SolverConfig& config,
                        const StepObserver& observer);

/// Stored solve. `source`, when given, must be sampled on the solver time grid
/// (same dt, at least `steps` snapshots). Snapshots are kept every
/// record_stride steps.
SpaceTimeField solve_interior(const InteriorProblem& problem, const SpaceTimeField* source,
                              const SolverConfig& config);

/// Streaming solve that keeps only the outward normal derivative on `nodes`
/// at every step.
BoundaryTrace solve_interior_trace(const InteriorProblem& problem, const SourceFn& source,
                                   const SolverConfig& config, const std::vector<int>& nodes);

BoundaryTrace neumann_trace(const SpaceTimeField& u, const std::vector<int>& nodes);

/// Time derivative of a normal-derivative trace: central differences inside,
/// second-order one-sided at both ends.
BoundaryTrace dt_trace(const BoundaryTrace& trace);

/// E(t_k) = int (u^2 + u_t^2 + D |grad u|^2) with u_t from central (one-sided
/// at the ends) differences of the snapshots.
double energy(const SpaceTimeField& u, const ScalarField& D, int t_index);

/// Omega's lattice embedded in a larger box with `margin_nodes` extra nodes on
/// every side.
struct EmbeddedDomain {
  GridPtr omega;
  GridPtr box;
  int margin_nodes = 0;

  int box_node(int omega_node) const;
  double margin() const { return margin_nodes * omega->h; }
  /// Box nodes of the closed domain.
  Mask omega_closure() const;
  ScalarField extend(const ScalarField& on_omega, double outside_value) const;
  ScalarField restrict_to_omega(const ScalarField& on_box) const;
};

EmbeddedDomain make_embedded_domain(GridPtr omega, double margin);

struct FreeSpaceResult {
  SpaceTimeField p_omega;  ///< p restricted to Omega every record_stride steps
  BoundaryTrace boundary;  ///< p on every boundary node of Omega at every step
};

using BoxObserver = std::function<void(int k, const ScalarField& p_box)>;

/// p_tt = c^2 lap p on the box with zero far-boundary data; c and p0 are given
/// on Omega and extended by 1 and 0. Rejects boxes whose margin is below
/// horizon * max c.
FreeSpaceResult solve_free_space(const EmbeddedDomain& domain, const ScalarField& c_speed, const ScalarField& p0,
                                 const SolverConfig& config, const BoxObserver& observer = {});

/// u_tt = lap u outside Omega with u = h on the boundary of Omega, zero far
/// data and zero initial data; time grid taken from h. Returns the outward
/// normal derivative on the boundary of Omega computed from exterior nodes.
BoundaryTrace solve_exterior(const EmbeddedDomain& domain, const BoundaryTrace& h, const BoxObserver& observer = {});

}  // namespace wavestab
