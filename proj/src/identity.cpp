#include "wavestab/identity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include "wavestab/errors.hpp"
#include "wavestab/source.hpp"

namespace wavestab {

double L1Terms::rhs() const {
  double s = 0.0;
  for (double t : rhs_terms) s += t;
  return s;
}

double L1Terms::residual(double floor) const {
  const double r = rhs();
  const double scale = std::max({std::abs(lhs), std::abs(r), floor});
  if (std::abs(lhs) < floor && std::abs(r) < floor) return 0.0;
  return std::abs(lhs - r) / scale;
}

L1Accumulator::L1Accumulator(const ScalarField& D1, const ScalarField& F, const ConvexWeight& weight,
                             std::vector<double> taus, double dt, int steps)
    : D1_(D1),
      grad_D1_(gradient(D1)),
      lap_D1_(laplacian(D1)),
      grad_d_(gradient(weight.d)),
      op_F_(F),
      quad_(quadrature_weights(D1.grid(), D1.grid().omega_mask)),
      c_(weight.c),
      dt_(dt),
      steps_(steps),
      seen_(static_cast<std::size_t>(steps) + 1, 0),
      taus_(std::move(taus)) {
  ensure(dt > 0.0 && steps >= 1, "identity needs a positive time step and at least one step");
  ensure(F.size() == D1.size() && weight.d.size() == D1.size(), "fields live on different grids");
  for (double tau : taus_) {
    ensure(tau >= 0.0, "tau must be nonnegative");
    std::vector<double> e(D1.size());
    for (std::size_t n = 0; n < e.size(); ++n) e[n] = std::exp(2.0 * tau * weight.d[n]);
    space_weight_.push_back(std::move(e));
    L1Terms t;
    t.tau = tau;
    terms_.push_back(t);
  }
}

void L1Accumulator::add(int j, const ScalarField& w_before, const ScalarField& w_at, const ScalarField& w_after,
                        const ScalarField& R_before, const ScalarField& R_after) {
  ensure(j <= 0 && j >= -steps_, "slice index outside [-steps, 0]");
  auto& seen = seen_[static_cast<std::size_t>(-j)];
  ensure(!seen, "slice added twice");
  seen = 1;
  ++added_;

  const std::size_t size = D1_.size();
  const double inv_2dt = 0.5 / dt_;
  const double inv_dt2 = 1.0 / (dt_ * dt_);
  const GridPtr& grid = D1_.grid_ptr();
  ScalarField w_t(grid);
  ScalarField w_tt(grid);
  ScalarField R_t(grid);
  for (std::size_t n = 0; n < size; ++n) {
    w_t[n] = (w_after[n] - w_before[n]) * inv_2dt;
    w_tt[n] = (w_after[n] - 2.0 * w_at[n] + w_before[n]) * inv_dt2;
    R_t[n] = (R_after[n] - R_before[n]) * inv_2dt;
  }
  const Gradient gw = gradient(w_t);
  const ScalarField S_t = op_F_.apply(R_t);

  const double t = j * dt_;
  const double time_weight = (j == 0 || j == -steps_) ? 0.5 * dt_ : dt_;
  for (std::size_t q = 0; q < taus_.size(); ++q) {
    const double tau = taus_[q];
    const double e_t = std::exp(-2.0 * tau * c_ * t * t);
    const auto& e_x = space_weight_[q];
    double a = 0.0, b = 0.0, c = 0.0, e5 = 0.0, g = 0.0, lhs = 0.0, end = 0.0;
    for (std::size_t n = 0; n < size; ++n) {
      const double wq = quad_[n];
      if (wq == 0.0) continue;
      const double e = e_x[n] * e_t * wq;
      const double grad_sq = gw.dx[n] * gw.dx[n] + gw.dy[n] * gw.dy[n];
      const double energy = w_tt[n] * w_tt[n] + D1_[n] * grad_sq;
      const double dD_dw = grad_D1_.dx[n] * gw.dx[n] + grad_D1_.dy[n] * gw.dy[n];
      const double dd_dw = grad_d_.dx[n] * gw.dx[n] + grad_d_.dy[n] * gw.dy[n];
      a += e * t * energy;
      b += e * w_tt[n] * D1_[n] * dd_dw;
      c += e * w_tt[n] * dD_dw;
      e5 += e * w_tt[n] * (2.0 * dD_dw + lap_D1_[n] * w_t[n]);
      g += e * w_tt[n] * S_t[n];
      lhs += e * w_tt[n] * w_tt[n];
      end += e * energy;
    }
    L1Terms& terms = terms_[q];
    terms.rhs_terms[0] += -4.0 * c_ * tau * time_weight * a;
    terms.rhs_terms[1] += -4.0 * tau * time_weight * b;
    terms.rhs_terms[2] += -2.0 * time_weight * c;
    terms.rhs_terms[4] += 2.0 * time_weight * e5;
    terms.rhs_terms[5] += 2.0 * time_weight * g;
    if (j == 0) terms.lhs = lhs;
    if (j == -steps_) terms.rhs_terms[3] = end;
  }
}

std::vector<L1Terms> L1Accumulator::terms() const {
  ensure(complete(), "identity accumulation is incomplete");
  return terms_;
}

double l1_identity_residual(const SpaceTimeField& w, const ScalarField& D1, const ScalarField& F,
                            const SpaceTimeField& R, const ConvexWeight& weight, double tau) {
  ensure(w.dt > 0.0 && std::abs(w.dt - R.dt) <= 1e-15 * w.dt, "w and R must share one dense time grid");
  const int steps = static_cast<int>(std::lround(weight.T / w.dt));
  ensure(steps >= 1 && std::abs(steps * w.dt - weight.T) <= 1e-9 * weight.T,
         "T is not on the recorded time grid; record densely with the solver step");
  ensure(w.nt() >= steps + 2 && R.nt() >= steps + 2, "identity needs w and R recorded to one step past T");
  L1Accumulator acc(D1, F, weight, {tau}, w.dt, steps);
  for (int m = 0; m <= steps; ++m) {
    const int after = std::abs(m - 1);
    acc.add(-m, w[m + 1], w[m], w[after], R[m + 1], R[after]);
  }
  return acc.terms().front().residual();
}

std::vector<L1Terms> l1_identity_terms(const ScalarField& D1, const ScalarField& F, const InteriorProblem& reference,
                                       const ConvexWeight& weight, std::span<const double> taus,
                                       const SolverConfig& config) {
  SolverConfig cfg = config;
  cfg.horizon = weight.T;
  check_supported_in_k(F);
  // Only the last three (w, R) pairs are kept.
  std::deque<std::pair<ScalarField, ScalarField>> window;
  std::optional<L1Accumulator> acc;
  int steps = 0;
  double dt = 0.0;
  march_reduction(D1, F, reference, cfg, 1, [&](int k, const ScalarField& w, const ScalarField& R) {
    if (!acc) {
      const double bound = cfg.max_coefficient > 0.0 ? cfg.max_coefficient : std::max(D1.max(), reference.D.max());
      const TimeGrid tg = make_time_grid(D1.grid().h, bound, cfg);
      steps = tg.steps;
      dt = tg.dt;
      acc.emplace(D1, F, weight, std::vector<double>(taus.begin(), taus.end()), dt, steps);
    }
    window.emplace_back(w, R);
    if (window.size() > 3) window.pop_front();
    if (k == 0) return;
    const int m = k - 1;
    const auto& next = window.back();           // k = m + 1
    const auto& at = window[window.size() - 2];  // m
    const auto& after = (m == 0) ? next : window.front();
    acc->add(-m, next.first, at.first, after.first, next.second, after.second);
  });
  return acc->terms();
}

}  // namespace wavestab
