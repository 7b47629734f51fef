#pragma once

// Parametric recovery of D = D_base + sum a_i bump_i from the time derivative
// of one Neumann trace: least-squares misfit, finite-difference gradients and
// projected gradient descent with Armijo backtracking.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wavestab/fields.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

struct BumpBasis {
  GridPtr grid;
  std::vector<Point> centers;
  double radius = 0.0;
  std::vector<ScalarField> fields;

  std::size_t size() const { return centers.size(); }
  /// sum a_i bump_i
  ScalarField combine(const std::vector<double>& a) const;
};

/// Samples the bumps and checks that each is supported in K and that their
/// Gram matrix is numerically nonsingular (Cholesky, eigenvalue ratio > 1e-10).
BumpBasis make_basis(GridPtr grid, std::vector<Point> centers, double radius);

struct ReconProblem {
  ScalarField D_base;
  ScalarField f;
  std::optional<BoundaryTrace> h;
  std::vector<int> observed;  ///< empty means the grid's gamma1
  BoundaryTrace data;         ///< time derivative of the measured Neumann trace
  double T = 0.0;
  double T0 = 0.0;
  BumpBasis basis;
  double lambda = 0.0;
  double c0 = 2.0;
  /// Horizon is replaced by T; a zero max_coefficient by c0.
  SolverConfig solver;
};

/// Throws unless the data cover T on the model's nodes and time grid and T > T0.
void validate(const ReconProblem& problem);

/// Admissibility of D_base + sum a_i bump_i, i.e. 1/c0 <= D <= c0 everywhere.
bool admissible(const ReconProblem& problem, const std::vector<double>& a);

/// Time derivative of the Neumann trace on the observed nodes for coefficients a.
BoundaryTrace forward_data(const ReconProblem& problem, const std::vector<double>& a);

/// Forward data of a reference problem, restricted to the layout of `problem`'s data.
BoundaryTrace synthesize_data(const ReconProblem& problem, const std::vector<double>& a_truth);

struct MisfitValue {
  double J = 0.0;
  bool admissible = true;
};

inline constexpr double kInadmissiblePenalty = 1e30;

/// 0.5 * trace_l2(forward - data, T)^2 + lambda |a|^2, or the penalty with
/// the flag cleared when D(a) is inadmissible.
MisfitValue misfit(const ReconProblem& problem, const std::vector<double>& a);

/// Central differences with the given step; an inadmissible probe halves the
/// step, at most five times, before throwing.
std::vector<double> numeric_gradient(const ReconProblem& problem, const std::vector<double>& a, double step,
                                     int threads = 1);

struct ReconOptions {
  int max_iter = 200;
  double grad_tol = 1e-8;
  double misfit_rtol = 1e-12;  ///< converged once J <= misfit_rtol * J(a_init)
  double gradient_step = 1e-4;
  double armijo_c1 = 1e-4;
  double initial_step = 1.0;  ///< first trial step; later ones use the Barzilai-Borwein length
  double shrink = 0.5;
  int max_backtracks = 60;
  int stagnation_window = 20;
  double lower = -0.5;  ///< box on every coefficient
  double upper = 0.5;
  int threads = 1;
};

struct ReconLogEntry {
  int iter = 0;
  double J = 0.0;
  double grad_norm = 0.0;
  std::vector<double> a;
};

struct ReconResult {
  std::vector<double> a_hat;
  double J_hat = 0.0;
  std::vector<ReconLogEntry> log;
  bool converged = false;  ///< gradient or misfit tolerance reached
  bool aborted = false;    ///< stagnation or line-search failure
  std::string diagnostic;
};

ReconResult reconstruct(const ReconProblem& problem, const std::vector<double>& a_init,
                        const ReconOptions& options = {});

/// Header: iter,J,grad_norm,a1..am.
void write_log_csv(const ReconResult& result, const std::filesystem::path& path);

}  // namespace wavestab
