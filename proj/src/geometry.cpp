#include "wavestab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "wavestab/errors.hpp"

namespace wavestab {

ScalarField build_quadratic_d(GridPtr grid, Point x0, double k) {
  ensure(k > 1.0, "quadratic weight needs k > 1");
  ensure(!grid->extents.contains(x0), "x0 must lie strictly outside the closed domain");
  return ScalarField::from_function(grid, [&](double x, double y) {
    const double dx = x - x0.x;
    const double dy = y - x0.y;
    return k * (dx * dx + dy * dy);
  });
}

namespace {

double min_symmetric_eigenvalue(double a, double b, double c) {
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  return mean - radius;
}

}  // namespace

GeometryReport verify_assumptions(const ScalarField& d, const ScalarField& D, double tol) {
  const Grid& g = d.grid();
  ensure(D.size() == d.size(), "d and D live on different grids");
  ensure(D.min() > 0.0, "coefficient D must be positive");

  const Gradient grad_d = gradient(d);
  const Gradient hess_x = gradient(grad_d.dx);
  const Gradient hess_y = gradient(grad_d.dy);
  const Gradient grad_D = gradient(D);

  GeometryReport report;
  report.min_hessian_eig = std::numeric_limits<double>::infinity();
  report.min_grad_ratio = std::numeric_limits<double>::infinity();
  report.m0 = d.min();

  for (std::size_t n = 0; n < g.size(); ++n) {
    // psi = -ln(D)/2 gives g_ij = exp(2 psi) delta_ij.
    const double psi_x = -0.5 * grad_D.dx[n] / D[n];
    const double psi_y = -0.5 * grad_D.dy[n] / D[n];
    const double dx = grad_d.dx[n];
    const double dy = grad_d.dy[n];
    const double psi_dot_grad = psi_x * dx + psi_y * dy;

    const double hxx = hess_x.dx[n] - (2.0 * psi_x * dx - psi_dot_grad);
    const double hyy = hess_y.dy[n] - (2.0 * psi_y * dy - psi_dot_grad);
    const double hxy = 0.5 * (hess_x.dy[n] + hess_y.dx[n]) - (psi_y * dx + psi_x * dy);

    const double eig = D[n] * min_symmetric_eigenvalue(hxx, hxy, hyy);
    report.min_hessian_eig = std::min(report.min_hessian_eig, eig);

    if (d[n] > 0.0) {
      const double ratio = D[n] * (dx * dx + dy * dy) / d[n];
      report.min_grad_ratio = std::min(report.min_grad_ratio, ratio);
    }
  }

  if (!g.gamma0.empty()) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int node : g.gamma0) worst = std::max(worst, normal_derivative(g, d.values(), node));
    report.max_normal_deriv_gamma0 = worst;
  }

  const bool normal_ok = !report.max_normal_deriv_gamma0 || *report.max_normal_deriv_gamma0 <= tol;
  report.passes_A1 = report.min_hessian_eig >= 2.0 - tol && normal_ok && report.m0 > 0.0;
  report.passes_A2 = report.min_grad_ratio > 4.0;
  return report;
}

nlohmann::json to_json(const GeometryReport& report) {
  nlohmann::json j;
  j["min_hessian_eig"] = report.min_hessian_eig;
  j["max_normal_deriv_gamma0"] =
      report.max_normal_deriv_gamma0 ? nlohmann::json(*report.max_normal_deriv_gamma0) : nlohmann::json(nullptr);
  j["min_grad_ratio"] = report.min_grad_ratio;
  j["m0"] = report.m0;
  j["passes_A1"] = report.passes_A1;
  j["passes_A2"] = report.passes_A2;
  return j;
}

double compute_T0(const ScalarField& d) {
  const double max_d = d.max();
  ensure(max_d > 0.0, "d must be positive");
  return 2.0 * std::sqrt(max_d);
}

ConvexWeight build_weight(const ScalarField& d, double T) {
  ConvexWeight w;
  w.d = d;
  w.T = T;
  w.T0 = compute_T0(d);
  ensure(T > w.T0, "observation time must exceed T0");
  w.max_d = d.max();
  w.m0 = d.min();
  ensure(w.m0 > 0.0, "d must be positive on the closed domain");
  w.delta = (T * T - 4.0 * w.max_d) / 8.0;
  w.c = (4.0 * w.max_d + 5.0 * w.delta) / (T * T);
  w.sigma = 0.5 * w.m0;
  w.t1 = std::sqrt(w.m0 / (2.0 * w.c));
  w.t0 = -w.t1;
  check_weight_invariants(w);
  return w;
}

void check_weight_invariants(const ConvexWeight& w) {
  auto fail = [](const std::string& what) { throw std::logic_error("weight invariant violated: " + what); };
  if (!(w.T > w.T0)) fail("T > T0");
  if (!(w.c > 0.0 && w.c < 1.0)) fail("0 < c < 1");
  if (!(w.c * w.T * w.T > 4.0 * w.max_d + 4.0 * w.delta)) fail("c T^2 > 4 max d + 4 delta");
  if (!(w.max_d - w.c * w.T * w.T <= -w.delta)) fail("max d - c T^2 <= -delta");
  if (!(w.m0 > 0.0)) fail("m0 > 0");
  if (!(w.sigma > 0.0 && w.sigma < w.m0)) fail("0 < sigma < m0");
  if (!(w.t0 < 0.0 && w.t1 > 0.0 && w.t1 < w.T && w.t0 > -w.T)) fail("-T < t0 < 0 < t1 < T");
  // phi is smallest at the window ends; allow a few ulps from the closed form.
  const double min_phi = w.d.min() - w.c * std::max(w.t0 * w.t0, w.t1 * w.t1);
  if (!(min_phi >= w.sigma * (1.0 - 1e-12))) fail("min phi over the window >= sigma");
}

SpaceTimeMask q_sigma_mask(const ConvexWeight& weight, std::span<const double> times) {
  SpaceTimeMask mask;
  mask.times.assign(times.begin(), times.end());
  const std::size_t n_nodes = weight.d.size();
  for (double t : times) {
    Mask m(n_nodes, 0);
    const bool in_window = std::abs(t) < weight.T;
    for (std::size_t n = 0; n < n_nodes; ++n) {
      m[n] = (in_window && weight.phi(n, t) >= weight.sigma) ? 1 : 0;
    }
    mask.members.push_back(std::move(m));
  }
  return mask;
}

}  // namespace wavestab
