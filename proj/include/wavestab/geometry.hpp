#pragma once

// Convex weight function d, checks of the geometric assumptions under the
// conformal metric g = D^{-1} dx^2, and the pseudo-convex weight
// phi(x, t) = d(x) - c t^2 built from it.

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "wavestab/fields.hpp"

namespace wavestab {

/// d(x) = k |x - x0|^2 for an exterior point x0 and k > 1.
ScalarField build_quadratic_d(GridPtr grid, Point x0, double k);

struct GeometryReport {
  double min_hessian_eig = 0.0;
  /// Empty when the unobserved boundary is empty (condition holds vacuously).
  std::optional<double> max_normal_deriv_gamma0;
  double min_grad_ratio = 0.0;
  double m0 = 0.0;
  bool passes_A1 = false;
  bool passes_A2 = false;
};

/// Smallest eigenvalue of D * Hess_g d over all nodes, the largest outward
/// derivative of d on gamma0, min of D |grad d|^2 / d, and min d. Violations
/// are reported through the flags.
GeometryReport verify_assumptions(const ScalarField& d, const ScalarField& D, double tol = 1e-8);

nlohmann::json to_json(const GeometryReport& report);

/// 2 sqrt(max d).
double compute_T0(const ScalarField& d);

struct ConvexWeight {
  ScalarField d;
  double T = 0.0;
  double T0 = 0.0;
  double c = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  double m0 = 0.0;
  double max_d = 0.0;

  double phi(std::size_t node, double t) const { return d[node] - c * t * t; }
};

/// delta = (T^2 - 4 max d) / 8, c = (4 max d + 5 delta) / T^2, sigma = m0 / 2,
/// t1 = -t0 = sqrt(m0 / (2c)). Throws unless T > T0; the result is checked
/// against every weight invariant before it is returned.
ConvexWeight build_weight(const ScalarField& d, double T);

/// Throws std::logic_error naming the first violated invariant.
void check_weight_invariants(const ConvexWeight& weight);

/// Membership of Q(sigma) = {(x, t) : phi(x, t) >= sigma}, one mask per time.
struct SpaceTimeMask {
  std::vector<double> times;
  std::vector<Mask> members;
};

SpaceTimeMask q_sigma_mask(const ConvexWeight& weight, std::span<const double> times);

}  // namespace wavestab
