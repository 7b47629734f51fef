#include "wavestab/wave.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavestab/errors.hpp"

namespace wavestab {

BoundaryTrace subtract(const BoundaryTrace& a, const BoundaryTrace& b) {
  ensure(a.nodes == b.nodes && a.nt == b.nt, "trace layouts differ");
  ensure(std::abs(a.dt - b.dt) <= 1e-12 * std::max(a.dt, b.dt), "trace time steps differ");
  ensure(a.kind == b.kind, "trace kinds differ");
  BoundaryTrace out = a;
  for (std::size_t n = 0; n < out.values.size(); ++n) out.values[n] = a.values[n] - b.values[n];
  return out;
}

TimeGrid make_time_grid(double h, double max_coefficient, const SolverConfig& config) {
  ensure(config.cfl_factor > 0.0 && config.cfl_factor < 1.0, "cfl_factor must lie in (0, 1)");
  ensure(config.horizon > 0.0, "horizon must be positive");
  ensure(max_coefficient > 0.0, "coefficient bound must be positive");
  const double dt_max = config.cfl_factor * h / std::sqrt(2.0 * max_coefficient);
  TimeGrid tg;
  tg.steps = std::max(1, static_cast<int>(std::ceil(config.horizon / dt_max - 1e-9)));
  tg.dt = config.horizon / tg.steps;
  return tg;
}

namespace {

double resolve_bound(const SolverConfig& config, double actual_max) {
  if (config.max_coefficient <= 0.0) return actual_max;
  ensure_precondition(config.max_coefficient >= actual_max * (1.0 - 1e-12),
                      "CFL violation: coefficient exceeds the configured bound max_coefficient");
  return config.max_coefficient;
}

void check_courant(double dt, double h, double max_coefficient) {
  const double courant = dt * std::sqrt(2.0 * max_coefficient) / h;
  ensure_precondition(courant < 1.0, "CFL violation: Courant number " + std::to_string(courant) + " >= 1");
}

}  // namespace

CoefficientOperator::CoefficientOperator(const ScalarField& D) : D_(D) {
  Gradient g = gradient(D);
  D_x_ = std::move(g.dx);
  D_y_ = std::move(g.dy);
  lap_D_ = laplacian(D);
}

void CoefficientOperator::apply(std::span<const double> u, std::span<double> out) const {
  const Grid& g = D_.grid();
  ensure(u.size() == g.size() && out.size() == g.size(), "operator size mismatch");
  const double inv_h2 = 1.0 / (g.h * g.h);
  const double inv_2h = 0.5 / g.h;
  const int s = g.nx;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const int n = g.index(i, j);
      if (g.on_boundary(i, j)) {
        out[n] = 0.0;
        continue;
      }
      const double* c = u.data() + n;
      const double lap = (c[1] + c[-1] + c[s] + c[-s] - 4.0 * c[0]) * inv_h2;
      const double ux = (c[1] - c[-1]) * inv_2h;
      const double uy = (c[s] - c[-s]) * inv_2h;
      out[n] = D_[n] * lap + 2.0 * (D_x_[n] * ux + D_y_[n] * uy) + lap_D_[n] * c[0];
    }
  }
}

ScalarField CoefficientOperator::apply(const ScalarField& u) const {
  ScalarField out(u.grid_ptr());
  apply(u.values(), out.values());
  return out;
}

namespace {

void check_dirichlet_layout(const Grid& grid, const BoundaryTrace& trace, double dt) {
  ensure(trace.kind == TraceKind::dirichlet_value, "Dirichlet data must be a dirichlet_value trace");
  ensure(trace.nodes == grid.boundary_nodes(), "Dirichlet data must cover every boundary node in loop order");
  ensure_precondition(std::abs(trace.dt - dt) <= 1e-12 * dt, "Dirichlet data is not sampled on the solver time grid");
}

}  // namespace

InteriorStepper::InteriorStepper(const InteriorProblem& problem, double dt)
    : problem_(problem),
      op_(problem.D),
      dt_(dt),
      u_prev_(problem.f.grid_ptr()),
      u_(problem.f),
      u_next_(problem.f.grid_ptr()),
      work_(problem.f.size()) {
  const Grid& g = problem.D.grid();
  ensure(problem.f.size() == g.size(), "initial datum lives on a different grid");
  ensure(problem.D.min() > 0.0, "coefficient must be positive");
  ensure(problem.f.all_finite(), "initial datum must be finite");
  if (problem.f_vel) ensure(problem.f_vel->size() == g.size(), "initial velocity lives on a different grid");
  check_courant(dt, g.h, problem.D.max());

  const double tol = 1e-9 * (1.0 + problem.f.max_abs());
  const auto boundary = g.boundary_nodes();
  if (problem.dirichlet) {
    check_dirichlet_layout(g, *problem.dirichlet, dt);
    ensure(problem.dirichlet->nt >= 1, "Dirichlet data is empty");
    const auto h0 = problem.dirichlet->slice(0);
    for (std::size_t m = 0; m < boundary.size(); ++m) {
      ensure_precondition(std::abs(h0[m] - problem.f[boundary[m]]) <= tol,
                          "compatibility violated: boundary data at t = 0 differs from the initial datum");
      u_[boundary[m]] = h0[m];
    }
  } else {
    for (int node : boundary) {
      ensure_precondition(std::abs(problem.f[node]) <= tol,
                          "compatibility violated: initial datum is nonzero on the boundary");
      u_[node] = 0.0;
    }
  }
}

void InteriorStepper::advance(std::span<const double> source) {
  const Grid& g = problem_.D.grid();
  ensure(source.empty() || source.size() == g.size(), "source slice has the wrong size");
  op_.apply(u_.values(), work_);
  const double dt2 = dt_ * dt_;
  const bool first = (k_ == 0);
  const double* vel = problem_.f_vel ? problem_.f_vel->values().data() : nullptr;
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      const int n = g.index(i, j);
      const double accel = work_[n] + (source.empty() ? 0.0 : source[n]);
      if (first) {
        u_next_[n] = u_[n] + (vel ? dt_ * vel[n] : 0.0) + 0.5 * dt2 * accel;
      } else {
        u_next_[n] = 2.0 * u_[n] - u_prev_[n] + dt2 * accel;
      }
    }
  }
  const auto boundary = g.boundary_nodes();
  if (problem_.dirichlet) {
    ensure(k_ + 1 < problem_.dirichlet->nt, "Dirichlet data does not cover the horizon");
    const auto hk = problem_.dirichlet->slice(k_ + 1);
    for (std::size_t m = 0; m < boundary.size(); ++m) u_next_[boundary[m]] = hk[m];
  } else {
    for (int node : boundary) u_next_[node] = 0.0;
  }
  std::swap(u_prev_, u_);
  std::swap(u_, u_next_);
  ++k_;
}

TimeGrid march_interior(const InteriorProblem& problem, const SourceFn& source, const SolverConfig& config,
                        const StepObserver& observer) {
  const double bound = resolve_bound(config, problem.D.max());
  const TimeGrid tg = make_time_grid(problem.D.grid().h, bound, config);
  InteriorStepper stepper(problem, tg.dt);
  std::vector<double> s;
  if (source) s.resize(problem.D.size());
  if (observer) observer(0, stepper.current());
  for (int k = 0; k < tg.steps; ++k) {
    if (source) {
      source(k, s);
      stepper.advance(s);
    } else {
      stepper.advance();
    }
    if (observer) observer(k + 1, stepper.current());
  }
  return tg;
}

SpaceTimeField solve_interior(const InteriorProblem& problem, const SpaceTimeField* source,
                              const SolverConfig& config) {
  ensure(config.record_stride >= 1, "record_stride must be positive");
  const double bound = resolve_bound(config, problem.D.max());
  const TimeGrid tg = make_time_grid(problem.D.grid().h, bound, config);
  SourceFn source_fn;
  if (source) {
    ensure(std::abs(source->dt - tg.dt) <= 1e-12 * tg.dt, "source is not sampled on the solver time grid");
    ensure(source->nt() >= tg.steps, "source does not cover the horizon");
    source_fn = [source](int k, std::span<double> out) {
      const auto v = (*source)[k].values();
      std::copy(v.begin(), v.end(), out.begin());
    };
  }
  SpaceTimeField out;
  out.grid = problem.D.grid_ptr();
  out.dt = tg.dt * config.record_stride;
  march_interior(problem, source_fn, config, [&](int k, const ScalarField& u) {
    if (k % config.record_stride == 0) out.snapshots.push_back(u);
  });
  return out;
}

namespace {

void check_boundary_nodes(const Grid& grid, const std::vector<int>& nodes) {
  for (int node : nodes) {
    ensure(node >= 0 && static_cast<std::size_t>(node) < grid.size() && grid.on_boundary(node),
           "trace node " + std::to_string(node) + " is not a boundary node");
  }
}

void append_normal_derivatives(const Grid& grid, std::span<const double> u, const std::vector<int>& nodes,
                               std::vector<double>& values) {
  for (int node : nodes) values.push_back(normal_derivative(grid, u, node));
}

}  // namespace

BoundaryTrace solve_interior_trace(const InteriorProblem& problem, const SourceFn& source,
                                   const SolverConfig& config, const std::vector<int>& nodes) {
  const Grid& g = problem.D.grid();
  check_boundary_nodes(g, nodes);
  BoundaryTrace trace;
  trace.grid = problem.D.grid_ptr();
  trace.nodes = nodes;
  trace.kind = TraceKind::normal_derivative;
  const TimeGrid tg = march_interior(problem, source, config, [&](int, const ScalarField& u) {
    append_normal_derivatives(g, u.values(), nodes, trace.values);
  });
  trace.dt = tg.dt;
  trace.nt = tg.steps + 1;
  return trace;
}

BoundaryTrace neumann_trace(const SpaceTimeField& u, const std::vector<int>& nodes) {
  ensure(u.nt() > 0, "empty space-time field");
  const Grid& g = *u.grid;
  check_boundary_nodes(g, nodes);
  BoundaryTrace trace;
  trace.grid = u.grid;
  trace.nodes = nodes;
  trace.dt = u.dt;
  trace.nt = u.nt();
  trace.kind = TraceKind::normal_derivative;
  trace.values.reserve(static_cast<std::size_t>(u.nt()) * nodes.size());
  for (const auto& snap : u.snapshots) append_normal_derivatives(g, snap.values(), nodes, trace.values);
  return trace;
}

BoundaryTrace dt_trace(const BoundaryTrace& trace) {
  ensure(trace.kind == TraceKind::normal_derivative, "dt_trace expects a normal-derivative trace");
  ensure(trace.nt >= 3, "dt_trace needs at least three time samples");
  BoundaryTrace out = trace;
  out.kind = TraceKind::time_derivative_of_normal_derivative;
  const std::size_t m = trace.node_count();
  const int last = trace.nt - 1;
  const double inv_2dt = 0.5 / trace.dt;
  for (int k = 0; k < trace.nt; ++k) {
    for (std::size_t q = 0; q < m; ++q) {
      double v;
      if (k == 0) {
        v = (-3.0 * trace.at(0, q) + 4.0 * trace.at(1, q) - trace.at(2, q)) * inv_2dt;
      } else if (k == last) {
        v = (3.0 * trace.at(last, q) - 4.0 * trace.at(last - 1, q) + trace.at(last - 2, q)) * inv_2dt;
      } else {
        v = (trace.at(k + 1, q) - trace.at(k - 1, q)) * inv_2dt;
      }
      out.values[static_cast<std::size_t>(k) * m + q] = v;
    }
  }
  return out;
}

double energy(const SpaceTimeField& u, const ScalarField& D, int t_index) {
  ensure(t_index >= 0 && t_index < u.nt(), "time index out of range");
  const ScalarField& w = u[t_index];
  ScalarField w_t(u.grid);
  if (u.nt() >= 3) {
    const int last = u.nt() - 1;
    const double inv_2dt = 0.5 / u.dt;
    for (std::size_t n = 0; n < w.size(); ++n) {
      if (t_index == 0) {
        w_t[n] = (-3.0 * u[0][n] + 4.0 * u[1][n] - u[2][n]) * inv_2dt;
      } else if (t_index == last) {
        w_t[n] = (3.0 * u[last][n] - 4.0 * u[last - 1][n] + u[last - 2][n]) * inv_2dt;
      } else {
        w_t[n] = (u[t_index + 1][n] - u[t_index - 1][n]) * inv_2dt;
      }
    }
  } else {
    ensure(u.nt() == 1, "energy needs one snapshot or at least three");
  }
  const Gradient gw = gradient(w);
  ScalarField density(u.grid);
  for (std::size_t n = 0; n < w.size(); ++n) {
    density[n] = w[n] * w[n] + w_t[n] * w_t[n] + D[n] * (gw.dx[n] * gw.dx[n] + gw.dy[n] * gw.dy[n]);
  }
  return integrate(density);
}

// ---------------------------------------------------------------------------
// Embedded box solvers

int EmbeddedDomain::box_node(int omega_node) const {
  const int i = omega->column(omega_node) + margin_nodes;
  const int j = omega->row(omega_node) + margin_nodes;
  return box->index(i, j);
}

Mask EmbeddedDomain::omega_closure() const {
  Mask m(box->size(), 0);
  for (int j = 0; j < omega->ny; ++j) {
    for (int i = 0; i < omega->nx; ++i) m[static_cast<std::size_t>(box->index(i + margin_nodes, j + margin_nodes))] = 1;
  }
  return m;
}

ScalarField EmbeddedDomain::extend(const ScalarField& on_omega, double outside_value) const {
  ensure(on_omega.size() == omega->size(), "field does not live on Omega");
  ScalarField out(box, outside_value);
  for (std::size_t n = 0; n < on_omega.size(); ++n) out[static_cast<std::size_t>(box_node(static_cast<int>(n)))] = on_omega[n];
  return out;
}

ScalarField EmbeddedDomain::restrict_to_omega(const ScalarField& on_box) const {
  ensure(on_box.size() == box->size(), "field does not live on the box");
  ScalarField out(omega);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = on_box[static_cast<std::size_t>(box_node(static_cast<int>(n)))];
  return out;
}

EmbeddedDomain make_embedded_domain(GridPtr omega, double margin) {
  ensure(margin >= 0.0, "margin must be nonnegative");
  EmbeddedDomain dom;
  dom.margin_nodes = static_cast<int>(std::ceil(margin / omega->h - 1e-9)) + 1;
  const double pad = dom.margin_nodes * omega->h;
  const Extents& e = omega->extents;
  Extents big{e.x_min - pad, e.x_max + pad, e.y_min - pad, e.y_max + pad};
  dom.box = build_grid(big, omega->nx + 2 * dom.margin_nodes);
  ensure(dom.box->ny == omega->ny + 2 * dom.margin_nodes, "box lattice does not align with Omega");
  dom.omega = std::move(omega);
  return dom;
}

namespace {

// Leapfrog for u_tt = speed2 * lap u on `active` box nodes. `dirichlet(k, u)`
// writes prescribed values for time index k; all other inactive nodes stay 0.
class BoxStepper {
 public:
  BoxStepper(const Grid& box, std::vector<double> speed2, Mask active, double dt)
      : box_(box), speed2_(std::move(speed2)), active_(std::move(active)), dt_(dt),
        prev_(box.size(), 0.0), next_(box.size(), 0.0) {}

  std::vector<double>& current() { return cur_; }
  void set_initial(std::vector<double> u0) { cur_ = std::move(u0); }

  template <typename Dirichlet>
  void advance(int k, Dirichlet&& dirichlet) {
    const double c = dt_ * dt_ / (box_.h * box_.h);
    const int s = box_.nx;
    const bool first = (k == 0);
    for (int j = 1; j < box_.ny - 1; ++j) {
      for (int i = 1; i < box_.nx - 1; ++i) {
        const int n = box_.index(i, j);
        if (!active_[static_cast<std::size_t>(n)]) continue;
        const double* u = cur_.data() + n;
        const double lap = u[1] + u[-1] + u[s] + u[-s] - 4.0 * u[0];
        const double accel = c * speed2_[static_cast<std::size_t>(n)] * lap;
        next_[static_cast<std::size_t>(n)] = first ? u[0] + 0.5 * accel : 2.0 * u[0] - prev_[static_cast<std::size_t>(n)] + accel;
      }
    }
    dirichlet(k + 1, next_);
    std::swap(prev_, cur_);
    std::swap(cur_, next_);
  }

 private:
  const Grid& box_;
  std::vector<double> speed2_;
  Mask active_;
  double dt_;
  std::vector<double> prev_;
  std::vector<double> cur_;
  std::vector<double> next_;
};

}  // namespace

FreeSpaceResult solve_free_space(const EmbeddedDomain& domain, const ScalarField& c_speed, const ScalarField& p0,
                                 const SolverConfig& config, const BoxObserver& observer) {
  const Grid& omega = *domain.omega;
  const Grid& box = *domain.box;
  ensure(c_speed.size() == omega.size() && p0.size() == omega.size(), "PAT fields must live on Omega");
  ensure(c_speed.min() > 0.0, "sound speed must be positive");
  ensure(config.record_stride >= 1, "record_stride must be positive");
  const auto boundary = omega.boundary_nodes();
  for (int node : boundary) {
    ensure_precondition(std::abs(c_speed[node] - 1.0) <= 1e-12 && std::abs(p0[node]) <= 1e-12,
                        "p0 and c - 1 must vanish on the boundary of Omega");
  }
  const double c_max = c_speed.max();
  ensure_precondition(domain.margin() >= config.horizon * c_max - 1e-9 * omega.h,
                      "free-space box too small: margin must be at least horizon * max c");

  const double bound = resolve_bound(config, c_max * c_max);
  const TimeGrid tg = make_time_grid(omega.h, bound, config);
  check_courant(tg.dt, omega.h, c_max * c_max);

  const ScalarField c_box = domain.extend(c_speed, 1.0);
  std::vector<double> speed2(box.size());
  for (std::size_t n = 0; n < box.size(); ++n) speed2[n] = c_box[n] * c_box[n];
  Mask active(box.size(), 1);
  for (int node : box.boundary_nodes()) active[static_cast<std::size_t>(node)] = 0;

  BoxStepper stepper(box, std::move(speed2), std::move(active), tg.dt);
  const ScalarField p0_box = domain.extend(p0, 0.0);
  stepper.set_initial(std::vector<double>(p0_box.values().begin(), p0_box.values().end()));

  FreeSpaceResult result;
  result.p_omega.grid = domain.omega;
  result.p_omega.dt = tg.dt * config.record_stride;
  result.boundary.grid = domain.omega;
  result.boundary.nodes = boundary;
  result.boundary.dt = tg.dt;
  result.boundary.nt = tg.steps + 1;
  result.boundary.kind = TraceKind::dirichlet_value;
  result.boundary.values.reserve(static_cast<std::size_t>(tg.steps + 1) * boundary.size());

  std::vector<int> boundary_box(boundary.size());
  for (std::size_t m = 0; m < boundary.size(); ++m) boundary_box[m] = domain.box_node(boundary[m]);

  auto record = [&](int k) {
    const auto& u = stepper.current();
    for (int b : boundary_box) result.boundary.values.push_back(u[static_cast<std::size_t>(b)]);
    if (k % config.record_stride == 0 || observer) {
      ScalarField p_box(domain.box, u);
      if (k % config.record_stride == 0) result.p_omega.snapshots.push_back(domain.restrict_to_omega(p_box));
      if (observer) observer(k, p_box);
    }
  };
  record(0);
  for (int k = 0; k < tg.steps; ++k) {
    stepper.advance(k, [](int, std::vector<double>&) {});
    record(k + 1);
  }
  return result;
}

BoundaryTrace solve_exterior(const EmbeddedDomain& domain, const BoundaryTrace& h, const BoxObserver& observer) {
  const Grid& omega = *domain.omega;
  const Grid& box = *domain.box;
  const auto boundary = omega.boundary_nodes();
  ensure(h.kind == TraceKind::dirichlet_value, "exterior data must be a dirichlet_value trace");
  ensure(h.nodes == boundary, "exterior data must cover the boundary of Omega in loop order");
  ensure(h.nt >= 3, "exterior data needs at least three time samples");
  const double tol = 1e-12 * (1.0 + *std::max_element(h.values.begin(), h.values.end(),
                                                       [](double a, double b) { return std::abs(a) < std::abs(b); }));
  for (double v : h.slice(0)) {
    ensure_precondition(std::abs(v) <= tol, "exterior data must vanish at t = 0");
  }
  ensure_precondition(domain.margin() >= h.horizon() - 1e-9 * omega.h,
                      "exterior box too small: margin must be at least the horizon");
  check_courant(h.dt, omega.h, 1.0);

  const Mask inside = domain.omega_closure();
  Mask active(box.size(), 0);
  for (int j = 1; j < box.ny - 1; ++j) {
    for (int i = 1; i < box.nx - 1; ++i) {
      const int n = box.index(i, j);
      active[static_cast<std::size_t>(n)] = inside[static_cast<std::size_t>(n)] ? 0 : 1;
    }
  }
  std::vector<int> boundary_box(boundary.size());
  for (std::size_t m = 0; m < boundary.size(); ++m) boundary_box[m] = domain.box_node(boundary[m]);

  BoxStepper stepper(box, std::vector<double>(box.size(), 1.0), std::move(active), h.dt);
  stepper.set_initial(std::vector<double>(box.size(), 0.0));

  BoundaryTrace out;
  out.grid = domain.omega;
  out.nodes = boundary;
  out.dt = h.dt;
  out.nt = h.nt;
  out.kind = TraceKind::normal_derivative;
  out.values.reserve(static_cast<std::size_t>(h.nt) * boundary.size());

  const double inv_2h = 0.5 / omega.h;
  auto record = [&](int k) {
    const auto& u = stepper.current();
    for (std::size_t m = 0; m < boundary.size(); ++m) {
      const Point nu = omega.outward_normal(boundary[m]);
      const int b = boundary_box[m];
      double sum = 0.0;
      int axes = 0;
      // Outward one-sided derivative along each axis the normal points along.
      auto axis = [&](int s) {
        return (-3.0 * u[static_cast<std::size_t>(b)] + 4.0 * u[static_cast<std::size_t>(b + s)] -
                u[static_cast<std::size_t>(b + 2 * s)]) * inv_2h;
      };
      if (nu.x != 0.0) { sum += axis(nu.x > 0.0 ? 1 : -1); ++axes; }
      if (nu.y != 0.0) { sum += axis(nu.y > 0.0 ? box.nx : -box.nx); ++axes; }
      out.values.push_back(axes == 1 ? sum : sum / std::sqrt(2.0));
    }
    if (observer) observer(k, ScalarField(domain.box, u));
  };

  auto impose = [&](int k, std::vector<double>& next) {
    const auto hk = h.slice(k);
    for (std::size_t m = 0; m < boundary.size(); ++m) next[static_cast<std::size_t>(boundary_box[m])] = hk[m];
  };
  impose(0, stepper.current());
  record(0);
  for (int k = 0; k + 1 < h.nt; ++k) {
    stepper.advance(k, impose);
    record(k + 1);
  }
  return out;
}

}  // namespace wavestab
