#pragma once

#include "wavestab/fields.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

/// sqrt( int_Omega |lap F|^2 + |grad F|^2 + |F|^2 ) with the second-order operators.
double delta_norm(const ScalarField& F);

/// Arc-length trapezoid weights of trace nodes along the boundary loop: each
/// node gets h/2 per loop neighbour that is also listed.
std::vector<double> boundary_weights(const Grid& grid, const std::vector<int>& nodes);

/// sqrt of the space-time trapezoidal integral of trace^2 over the listed
/// nodes and (0, T). A partial last time cell is integrated with the linearly
/// interpolated spatial integral. Throws if T exceeds the recorded horizon.
double trace_l2(const BoundaryTrace& trace, double T);

struct StabilityRatio {
  double delta_norm_F = 0.0;
  double trace_misfit = 0.0;
  double ratio = 0.0;      ///< +inf when only the misfit vanishes
  bool undefined = false;  ///< both sides vanish
};

StabilityRatio stability_ratio(const ScalarField& F, const BoundaryTrace& trace_diff, double T);

}  // namespace wavestab
