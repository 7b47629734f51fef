#pragma once

// Reduction of the coefficient problem to an inverse source problem:
// with F = D1 - D2 and R = u2, the difference w = u1 - u2 solves the D1
// equation with homogeneous data and source S = lap F R + 2 grad F . grad R + F lap R.

#include <functional>

#include "wavestab/fields.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

/// Throws unless F vanishes at every node outside the grid's K.
void check_supported_in_k(const ScalarField& F);

/// S^k = L_F R^k with the solver's own discrete operators. `enforce_support`
/// may be cleared for diagnostics with globally supported F.
SpaceTimeField build_source(const ScalarField& F, const SpaceTimeField& R, bool enforce_support = true);

/// Interior solve with D1, zero initial and boundary data, and source S.
SpaceTimeField solve_w(const ScalarField& D1, const SpaceTimeField& S, const SolverConfig& config);

struct Wtt0Check {
  double residual = 0.0;
  bool zero_denominator = false;
};

using PairObserver = std::function<void(int k, const ScalarField& w, const ScalarField& R)>;

/// Marches R (the `reference` problem, normally the D2 solve) and w (D1, zero
/// data, source L_F R^k) in lockstep on one time grid for the configured steps
/// plus `extra_steps`, calling `observer` at every k. Nothing is stored.
TimeGrid march_reduction(const ScalarField& D1, const ScalarField& F, const InteriorProblem& reference,
                         const SolverConfig& config, int extra_steps, const PairObserver& observer);

/// Relative L2(K) residual between the discrete initial acceleration of w
/// (second difference with the even reflection w(-dt) = w(dt)) and
/// R(0) lap F + 2 grad R(0) . grad F + lap R(0) F evaluated with fourth-order
/// stencils. Returns 0 with the flag set when the right side vanishes.
Wtt0Check check_wtt0(const SpaceTimeField& w, const ScalarField& F, const SpaceTimeField& R);

/// Even extension of a field sampled on [0, T] to [-T, T]. Index k runs over
/// -(nt - 1) .. nt - 1 and refers to time k * dt; nothing is copied.
class EvenExtensionView {
 public:
  explicit EvenExtensionView(const SpaceTimeField& u);

  int first_index() const { return -last_; }
  int last_index() const { return last_; }
  double dt() const { return u_.dt; }
  double time(int k) const { return k * u_.dt; }
  const ScalarField& operator[](int k) const;
  /// Central difference in time, second-order one-sided at +-T; odd in k.
  ScalarField time_derivative(int k) const;

 private:
  const SpaceTimeField& u_;
  int last_;
};

}  // namespace wavestab
