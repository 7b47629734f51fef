#include "wavestab/norms.hpp"

#include <cmath>
#include <limits>

#include "wavestab/errors.hpp"

namespace wavestab {

double delta_norm(const ScalarField& F) {
  const ScalarField lap = laplacian(F);
  const Gradient grad = gradient(F);
  ScalarField density(F.grid_ptr());
  for (std::size_t n = 0; n < F.size(); ++n) {
    density[n] = lap[n] * lap[n] + grad.dx[n] * grad.dx[n] + grad.dy[n] * grad.dy[n] + F[n] * F[n];
  }
  return std::sqrt(integrate(density));
}

std::vector<double> boundary_weights(const Grid& grid, const std::vector<int>& nodes) {
  const int loop = 2 * (grid.nx + grid.ny) - 4;
  std::vector<unsigned char> listed(static_cast<std::size_t>(loop), 0);
  for (int node : nodes) {
    const int p = grid.loop_position(node);
    ensure(p >= 0, "trace node is not on the boundary");
    listed[static_cast<std::size_t>(p)] = 1;
  }
  std::vector<double> w;
  w.reserve(nodes.size());
  for (int node : nodes) {
    const int p = grid.loop_position(node);
    const int before = (p + loop - 1) % loop;
    const int after = (p + 1) % loop;
    w.push_back(0.5 * grid.h * (listed[static_cast<std::size_t>(before)] + listed[static_cast<std::size_t>(after)]));
  }
  return w;
}

double trace_l2(const BoundaryTrace& trace, double T) {
  ensure(trace.nt >= 1 && trace.grid, "empty trace");
  ensure(T <= trace.horizon() * (1.0 + 1e-12) + 1e-15, "T beyond the recorded horizon");
  if (T <= 0.0) return 0.0;
  const auto w = boundary_weights(*trace.grid, trace.nodes);
  auto spatial = [&](int k) {
    const auto s = trace.slice(k);
    double sum = 0.0;
    for (std::size_t m = 0; m < s.size(); ++m) sum += w[m] * s[m] * s[m];
    return sum;
  };
  const double cells = T / trace.dt;
  int full = static_cast<int>(std::floor(cells + 1e-9));
  full = std::min(full, trace.nt - 1);
  const double frac = std::max(0.0, cells - full);

  double total = 0.0;
  double g_prev = spatial(0);
  for (int k = 1; k <= full; ++k) {
    const double g = spatial(k);
    total += 0.5 * (g_prev + g) * trace.dt;
    g_prev = g;
  }
  if (frac > 0.0 && full + 1 < trace.nt) {
    const double g_end = g_prev + frac * (spatial(full + 1) - g_prev);
    total += 0.5 * (g_prev + g_end) * frac * trace.dt;
  }
  return std::sqrt(total);
}

StabilityRatio stability_ratio(const ScalarField& F, const BoundaryTrace& trace_diff, double T) {
  ensure(trace_diff.kind == TraceKind::time_derivative_of_normal_derivative,
         "stability ratio needs a time derivative of normal derivative trace");
  StabilityRatio r;
  r.delta_norm_F = delta_norm(F);
  r.trace_misfit = trace_l2(trace_diff, T);
  if (r.trace_misfit > 0.0) {
    r.ratio = r.delta_norm_F / r.trace_misfit;
  } else if (r.delta_norm_F > 0.0) {
    r.ratio = std::numeric_limits<double>::infinity();
  } else {
    r.ratio = std::numeric_limits<double>::quiet_NaN();
    r.undefined = true;
  }
  return r;
}

}  // namespace wavestab
