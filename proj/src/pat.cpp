#include "wavestab/pat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wavestab/errors.hpp"
#include "wavestab/stability.hpp"

namespace wavestab {

namespace {

void check_speed(const ScalarField& c) {
  for (std::size_t n = 0; n < c.size(); ++n) ensure(c[n] > 0.0, "sound speed must be positive");
}

}  // namespace

ScalarField to_coefficient(const ScalarField& c_speed) {
  check_speed(c_speed);
  return hadamard(c_speed, c_speed);
}

ScalarField to_internal(const ScalarField& p, const ScalarField& c_speed) {
  check_speed(c_speed);
  ensure(p.size() == c_speed.size(), "fields live on different grids");
  ScalarField u(p.grid_ptr());
  for (std::size_t n = 0; n < u.size(); ++n) u[n] = p[n] / (c_speed[n] * c_speed[n]);
  return u;
}

ScalarField to_initial(const ScalarField& p0, const ScalarField& c_speed) { return to_internal(p0, c_speed); }

ScalarField to_pressure(const ScalarField& u, const ScalarField& c_speed) {
  check_speed(c_speed);
  ensure(u.size() == c_speed.size(), "fields live on different grids");
  ScalarField p(u.grid_ptr());
  for (std::size_t n = 0; n < p.size(); ++n) p[n] = u[n] * (c_speed[n] * c_speed[n]);
  return p;
}

void validate(const PatScene& scene) {
  const Grid& g = scene.c_speed.grid();
  ensure(scene.p0.size() == g.size(), "p0 lives on another grid");
  check_speed(scene.c_speed);
  ensure(scene.T > 0.0, "horizon must be positive");
  ensure(scene.c0 >= 1.0, "c0 must be at least 1");
  ensure(scene.c_speed.max() * scene.c_speed.max() <= scene.c0, "c^2 exceeds c0");
  ensure(1.0 / (scene.c_speed.min() * scene.c_speed.min()) <= scene.c0, "c^2 falls below 1/c0");
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const bool near = i <= 1 || j <= 1 || i >= g.nx - 2 || j >= g.ny - 2;
      if (!near) continue;
      const int n = g.index(i, j);
      ensure(scene.c_speed[n] == 1.0, "sound speed must equal 1 near the boundary");
      ensure(scene.p0[n] == 0.0, "p0 must vanish near the boundary");
    }
  }
  ensure(g.k_mask.size() == g.size(), "grid has no K");
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (g.k_mask[n]) ensure(scene.p0[n] >= scene.r0, "p0 falls below r0 on K");
  }
}

SolverConfig pat_solver_config(const PatScene& scene) {
  SolverConfig cfg = scene.solver;
  cfg.horizon = scene.T;
  cfg.record_stride = 1;
  if (cfg.max_coefficient <= 0.0) cfg.max_coefficient = scene.c0;
  return cfg;
}

EmbeddedDomain pat_domain(const PatScene& scene) {
  const double c_max = std::max(1.0, scene.c_speed.max());
  return make_embedded_domain(scene.c_speed.grid_ptr(), scene.T * c_max);
}

PatMeasurement synthesize_measurement(const PatScene& scene) {
  validate(scene);
  const EmbeddedDomain domain = pat_domain(scene);
  SolverConfig cfg = pat_solver_config(scene);
  cfg.record_stride = std::numeric_limits<int>::max();
  FreeSpaceResult free = solve_free_space(domain, scene.c_speed, scene.p0, cfg);
  PatMeasurement m;
  m.h = std::move(free.boundary);
  m.nu_trace = solve_exterior(domain, m.h);
  return m;
}

BoundaryTrace free_space_normal_trace(const PatScene& scene) {
  validate(scene);
  const EmbeddedDomain domain = pat_domain(scene);
  const Grid& omega = *domain.omega;
  const Grid& box = *domain.box;
  SolverConfig cfg = pat_solver_config(scene);
  cfg.record_stride = std::numeric_limits<int>::max();

  BoundaryTrace out;
  out.grid = domain.omega;
  out.nodes = omega.boundary_nodes();
  out.kind = TraceKind::normal_derivative;
  const double inv_2h = 0.5 / omega.h;
  const FreeSpaceResult free = solve_free_space(domain, scene.c_speed, scene.p0, cfg, [&](int, const ScalarField& p) {
    for (int node : out.nodes) {
      const Point nu = omega.outward_normal(node);
      const std::size_t b = static_cast<std::size_t>(domain.box_node(node));
      double sum = 0.0;
      int axes = 0;
      if (nu.x != 0.0) {
        const std::size_t s = 1;
        const double d = (p[b + s] - p[b - s]) * inv_2h;
        sum += nu.x > 0.0 ? d : -d;
        ++axes;
      }
      if (nu.y != 0.0) {
        const std::size_t s = static_cast<std::size_t>(box.nx);
        const double d = (p[b + s] - p[b - s]) * inv_2h;
        sum += nu.y > 0.0 ? d : -d;
        ++axes;
      }
      out.values.push_back(axes == 1 ? sum : sum / std::sqrt(2.0));
    }
  });
  out.dt = free.boundary.dt;
  out.nt = free.boundary.nt;
  return out;
}

JointRecovery joint_recover(const JointRecoveryInput& in) {
  const GridPtr& grid = in.f_known.grid_ptr();
  const Grid& g = *grid;
  ensure(g.k_mask.size() == g.size(), "grid has no K");
  ensure(positivity_holds(in.f_known, in.r0), "positivity violated: |f| < r0 somewhere on K");
  ensure(in.nu_trace.kind == TraceKind::normal_derivative, "nu_trace must be a Neumann trace");

  ReconProblem problem;
  problem.D_base = ScalarField(grid, 1.0);
  problem.f = in.f_known;
  problem.h = in.h;
  problem.observed = g.boundary_nodes();
  problem.data = dt_trace(in.nu_trace);
  problem.T = in.T;
  problem.T0 = in.T0;
  problem.basis = in.basis;
  problem.c0 = in.c0;
  problem.solver = in.solver;

  const std::vector<double> a_init = in.a_init.empty() ? std::vector<double>(in.basis.size(), 0.0) : in.a_init;
  JointRecovery out;
  out.recon = reconstruct(problem, a_init, in.options);
  out.D_hat = problem.D_base + in.basis.combine(out.recon.a_hat);
  out.c_hat = ScalarField(grid);
  for (std::size_t n = 0; n < g.size(); ++n) out.c_hat[n] = std::sqrt(out.D_hat[n]);
  out.p0_hat = hadamard(in.f_known, hadamard(out.c_hat, out.c_hat));
  return out;
}

}  // namespace wavestab
