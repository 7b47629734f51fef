#pragma once

// Photoacoustic pipeline. With u = p c^-2, D = c^2 and f = p0 c^-2 the
// pressure problem p_tt = c^2 lap p becomes the interior problem for D; the
// boundary pressure gives the Dirichlet data and an exterior solve turns it
// into the Neumann trace used for recovery.

#include <vector>

#include "wavestab/fields.hpp"
#include "wavestab/recon.hpp"
#include "wavestab/wave.hpp"

namespace wavestab {

/// c^2. Throws on nonpositive c.
ScalarField to_coefficient(const ScalarField& c_speed);
/// p0 c^-2.
ScalarField to_initial(const ScalarField& p0, const ScalarField& c_speed);
/// p c^-2.
ScalarField to_internal(const ScalarField& p, const ScalarField& c_speed);
/// u c^2, the inverse of to_internal.
ScalarField to_pressure(const ScalarField& u, const ScalarField& c_speed);

struct PatScene {
  ScalarField c_speed;
  ScalarField p0;
  double T = 0.0;
  double r0 = 0.0;
  double c0 = 2.0;  ///< admissibility bound; also the time-step bound on c^2
  SolverConfig solver;
};

/// c > 0; c = 1 and p0 = 0 on the boundary and the first interior ring;
/// p0 >= r0 on K; max c^2 <= c0.
void validate(const PatScene& scene);

/// Free-space and exterior solves share this configuration.
SolverConfig pat_solver_config(const PatScene& scene);

/// Box that keeps the far boundary out of reach up to T.
EmbeddedDomain pat_domain(const PatScene& scene);

struct PatMeasurement {
  BoundaryTrace h;         ///< p on the boundary (equal to u there)
  BoundaryTrace nu_trace;  ///< outward normal derivative of u from the exterior solve
};

PatMeasurement synthesize_measurement(const PatScene& scene);

/// Outward normal derivative of the free-space solution on the boundary of
/// Omega from central differences across it; an independent reference for
/// the exterior solve.
BoundaryTrace free_space_normal_trace(const PatScene& scene);

struct JointRecoveryInput {
  ScalarField f_known;
  BoundaryTrace h;
  BoundaryTrace nu_trace;
  BumpBasis basis;
  double T = 0.0;
  double T0 = 0.0;
  double r0 = 0.0;
  double c0 = 2.0;
  SolverConfig solver;
  ReconOptions options;
  std::vector<double> a_init;  ///< empty means zeros
};

struct JointRecovery {
  ScalarField D_hat;
  ScalarField c_hat;
  ScalarField p0_hat;
  ReconResult recon;
};

/// Recovers D over 1 + span(basis) from the Dirichlet data h and the time
/// derivative of nu_trace; c_hat = sqrt(D_hat), p0_hat = f_known c_hat^2.
/// Throws if |f_known| < r0 somewhere on K.
JointRecovery joint_recover(const JointRecoveryInput& input);

}  // namespace wavestab
