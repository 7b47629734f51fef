#pragma once

// Numerical check of the weighted energy identity for the time-differentiated
// w-system on (-T, 0), with w and R extended as even functions of t:
//
//   int e(x,0) w_tt(x,0)^2
//     = -4 c tau  int int t e [w_tt^2 + D1 |grad w_t|^2]
//       -4 tau    int int e w_tt D1 grad d . grad w_t
//       -2        int int e w_tt grad D1 . grad w_t
//       +         int e(x,-T) [w_tt^2 + D1 |grad w_t|^2](x,-T)
//       +2        int int e w_tt [2 grad D1 . grad w_t + lap D1 w_t]
//       +2        int int e w_tt L_F R_t
//
// with e = exp(2 tau phi). Time derivatives are central differences on the
// solver grid and integrals are trapezoidal in space and time.

#include <array>
#include <span>
#include <vector>

#include "wavestab/fields.hpp"
#include "wavestab/geometry.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

struct L1Terms {
  double tau = 0.0;
  double lhs = 0.0;
  std::array<double, 6> rhs_terms{};

  double rhs() const;
  /// |lhs - rhs| / max(|lhs|, |rhs|, floor); 0 when both sides are below the floor.
  double residual(double floor = 1e-300) const;
};

/// Streams slices of w and R on the extended time line t_j = j dt,
/// j = -steps .. 0, with steps * dt = T.
class L1Accumulator {
 public:
  L1Accumulator(const ScalarField& D1, const ScalarField& F, const ConvexWeight& weight, std::vector<double> taus,
                double dt, int steps);

  /// Adds slice j with its neighbours at j - 1 and j + 1. Every j must be
  /// added exactly once.
  void add(int j, const ScalarField& w_before, const ScalarField& w_at, const ScalarField& w_after,
           const ScalarField& R_before, const ScalarField& R_after);

  bool complete() const { return added_ == steps_ + 1; }
  /// Throws unless complete().
  std::vector<L1Terms> terms() const;

 private:
  ScalarField D1_;
  Gradient grad_D1_;
  ScalarField lap_D1_;
  Gradient grad_d_;
  CoefficientOperator op_F_;
  std::vector<double> quad_;
  double c_;
  double dt_;
  int steps_;
  int added_ = 0;
  std::vector<unsigned char> seen_;
  std::vector<double> taus_;
  std::vector<std::vector<double>> space_weight_;  // exp(2 tau d) per tau
  std::vector<L1Terms> terms_;
};

/// Stored path: w and R recorded at every step to at least T + dt.
double l1_identity_residual(const SpaceTimeField& w, const ScalarField& D1, const ScalarField& F,
                            const SpaceTimeField& R, const ConvexWeight& weight, double tau);

/// Streaming path: R solves `reference` (normally the D2 problem), w the D1
/// system with source L_F R, both marched one step past T = weight.T. One
/// entry per tau.
std::vector<L1Terms> l1_identity_terms(const ScalarField& D1, const ScalarField& F, const InteriorProblem& reference,
                                       const ConvexWeight& weight, std::span<const double> taus,
                                       const SolverConfig& config);

}  // namespace wavestab
