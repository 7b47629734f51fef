#include "wavestab/source.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "wavestab/errors.hpp"

namespace wavestab {

void check_supported_in_k(const ScalarField& F) {
  const Grid& g = F.grid();
  ensure(g.k_mask.size() == g.size(), "grid has no K");
  for (std::size_t n = 0; n < F.size(); ++n) {
    ensure(g.k_mask[n] || F[n] == 0.0, "F must vanish outside K");
  }
}

SpaceTimeField build_source(const ScalarField& F, const SpaceTimeField& R, bool enforce_support) {
  if (enforce_support) check_supported_in_k(F);
  ensure(R.grid && R.grid->size() == F.size(), "F and R live on different grids");
  const CoefficientOperator op(F);
  SpaceTimeField S;
  S.grid = R.grid;
  S.dt = R.dt;
  S.snapshots.reserve(R.snapshots.size());
  for (const auto& r : R.snapshots) S.snapshots.push_back(op.apply(r));
  return S;
}

SpaceTimeField solve_w(const ScalarField& D1, const SpaceTimeField& S, const SolverConfig& config) {
  InteriorProblem problem{D1, ScalarField(D1.grid_ptr()), std::nullopt, std::nullopt};
  return solve_interior(problem, &S, config);
}

TimeGrid march_reduction(const ScalarField& D1, const ScalarField& F, const InteriorProblem& reference,
                         const SolverConfig& config, int extra_steps, const PairObserver& observer) {
  ensure(extra_steps >= 0, "extra_steps must be nonnegative");
  const double actual = std::max(D1.max(), reference.D.max());
  double bound = actual;
  if (config.max_coefficient > 0.0) {
    ensure_precondition(config.max_coefficient >= actual * (1.0 - 1e-12),
                        "CFL violation: coefficient exceeds the configured bound max_coefficient");
    bound = config.max_coefficient;
  }
  const TimeGrid tg = make_time_grid(D1.grid().h, bound, config);
  const InteriorProblem w_problem{D1, ScalarField(D1.grid_ptr()), std::nullopt, std::nullopt};
  InteriorStepper r_stepper(reference, tg.dt);
  InteriorStepper w_stepper(w_problem, tg.dt);
  const CoefficientOperator op(F);
  std::vector<double> source(D1.size());
  const int total = tg.steps + extra_steps;
  if (observer) observer(0, w_stepper.current(), r_stepper.current());
  for (int k = 0; k < total; ++k) {
    op.apply(r_stepper.current().values(), source);
    w_stepper.advance(source);
    r_stepper.advance();
    if (observer) observer(k + 1, w_stepper.current(), r_stepper.current());
  }
  return tg;
}

Wtt0Check check_wtt0(const SpaceTimeField& w, const ScalarField& F, const SpaceTimeField& R) {
  ensure(w.nt() >= 2, "check_wtt0 needs the snapshots at t = 0 and t = dt");
  ensure(R.nt() >= 1, "check_wtt0 needs R at t = 0");
  const Grid& g = F.grid();
  ensure(g.k_mask.size() == g.size(), "grid has no K");

  const ScalarField& w0 = w[0];
  const ScalarField& w1 = w[1];
  ScalarField lhs(F.grid_ptr());
  const double inv_dt2 = 1.0 / (w.dt * w.dt);
  for (std::size_t n = 0; n < lhs.size(); ++n) lhs[n] = (w1[n] - 2.0 * w0[n] + w1[n]) * inv_dt2;

  const ScalarField& R0 = R[0];
  const ScalarField lap_F = laplacian_fourth_order(F);
  const ScalarField lap_R = laplacian_fourth_order(R0);
  const Gradient grad_F = gradient_fourth_order(F);
  const Gradient grad_R = gradient_fourth_order(R0);

  ScalarField diff2(F.grid_ptr());
  ScalarField rhs2(F.grid_ptr());
  for (std::size_t n = 0; n < lhs.size(); ++n) {
    const double rhs = R0[n] * lap_F[n] + 2.0 * (grad_R.dx[n] * grad_F.dx[n] + grad_R.dy[n] * grad_F.dy[n]) +
                       lap_R[n] * F[n];
    diff2[n] = (lhs[n] - rhs) * (lhs[n] - rhs);
    rhs2[n] = rhs * rhs;
  }
  Wtt0Check out;
  const double denom = integrate(rhs2, g.k_mask);
  if (denom == 0.0) {
    out.zero_denominator = true;
    return out;
  }
  out.residual = std::sqrt(integrate(diff2, g.k_mask) / denom);
  return out;
}

EvenExtensionView::EvenExtensionView(const SpaceTimeField& u) : u_(u), last_(u.nt() - 1) {
  ensure(u.nt() >= 1, "cannot extend an empty field");
}

const ScalarField& EvenExtensionView::operator[](int k) const {
  ensure(k >= -last_ && k <= last_, "time index outside the extended range");
  return u_[std::abs(k)];
}

ScalarField EvenExtensionView::time_derivative(int k) const {
  ensure(last_ >= 2, "time derivative needs at least three samples");
  const ScalarField& grid_ref = (*this)[k];
  ScalarField out(grid_ref.grid_ptr());
  const double inv_2dt = 0.5 / u_.dt;
  if (k > -last_ && k < last_) {
    const ScalarField& a = (*this)[k + 1];
    const ScalarField& b = (*this)[k - 1];
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = (a[n] - b[n]) * inv_2dt;
  } else {
    const int s = (k == last_) ? -1 : 1;  // step into the range
    const ScalarField& u0 = (*this)[k];
    const ScalarField& u1 = (*this)[k + s];
    const ScalarField& u2 = (*this)[k + 2 * s];
    // Derivative along +t: one-sided formula flips sign with the step direction.
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = -s * (3.0 * u0[n] - 4.0 * u1[n] + u2[n]) * inv_2dt;
  }
  return out;
}

}  // namespace wavestab
