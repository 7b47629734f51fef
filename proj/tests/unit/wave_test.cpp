#include <doctest.h>

#include <limits>

#include "support.hpp"
#include "wavestab/errors.hpp"
#include "wavestab/stability.hpp"
#include "wavestab/wave.hpp"

using namespace wavestab;
using namespace wavestab::testing;

namespace {

SolverConfig config(double horizon, double bound = 0.0) {
  SolverConfig c;
  c.horizon = horizon;
  c.max_coefficient = bound;
  return c;
}

SpaceTimeField static_field(const ScalarField& f, double dt, int nt) {
  SpaceTimeField u;
  u.grid = f.grid_ptr();
  u.dt = dt;
  for (int k = 0; k < nt; ++k) u.snapshots.push_back(f);
  return u;
}

}  // namespace

TEST_CASE("time grid lands on the horizon") {
  const TimeGrid tg = make_time_grid(0.01, 2.0, config(1.0));
  CHECK(tg.steps * tg.dt == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(tg.dt <= 0.5 * 0.01 / 2.0 + 1e-15);
  SolverConfig bad = config(1.0);
  bad.cfl_factor = 1.5;
  CHECK_THROWS(make_time_grid(0.01, 1.0, bad));
}

TEST_CASE("zero data gives the zero solution") {
  const GridPtr g = unit_square(21);
  const InteriorProblem p{ScalarField(g, 1.0), ScalarField(g, 0.0), std::nullopt, std::nullopt};
  const SpaceTimeField u = solve_interior(p, nullptr, config(0.5));
  for (const auto& s : u.snapshots) CHECK(s.max_abs() == 0.0);
}

TEST_CASE("standing wave converges at second order") {
  std::vector<double> err;
  for (int n : {21, 41, 81}) {
    const GridPtr g = unit_square(n);
    const ScalarField f = sine_mode(g);
    const InteriorProblem p{ScalarField(g, 1.0), f, std::nullopt, std::nullopt};
    SolverConfig c = config(1.0);
    c.record_stride = std::numeric_limits<int>::max();
    double e = 0.0;
    march_interior(p, {}, c, [&](int k, const ScalarField& u) {
      (void)k;
      e = (u - std::cos(std::sqrt(2.0) * pi * 1.0) * f).max_abs();
    });
    err.push_back(e);
  }
  for (std::size_t i = 1; i < err.size(); ++i) {
    const double order = std::log2(err[i - 1] / err[i]);
    CHECK(order >= 1.7);
    CHECK(order <= 2.3);
  }
}

TEST_CASE("conserved energy of the homogeneous constant-coefficient problem") {
  const GridPtr g = unit_square(41);
  const ScalarField f = ScalarField::from_function(g, [](double x, double y) {
    return std::sin(pi * x) * std::sin(2.0 * pi * y) + 0.5 * std::sin(3.0 * pi * x) * std::sin(pi * y);
  });
  const ScalarField D(g, 1.0);
  const InteriorProblem p{D, f, std::nullopt, std::nullopt};
  const SpaceTimeField u = solve_interior(p, nullptr, config(2.0));
  // energy() also carries int u^2, which a wave exchanges with the other terms.
  auto conserved = [&](int k) { return energy(u, D, k) - integrate(hadamard(u[k], u[k])); };
  const double e0 = conserved(1);
  double drift = 0.0;
  for (int k = 1; k < u.nt() - 1; ++k) drift = std::max(drift, std::abs(conserved(k) - e0));
  CHECK(drift <= 0.01 * e0);
  CHECK(energy(static_field(ScalarField(g, 0.0), 0.1, 3), D, 1) == 0.0);
}

TEST_CASE("CFL violations are rejected") {
  const GridPtr g = unit_square(21);
  const InteriorProblem p{ScalarField(g, 3.0), ScalarField(g, 0.0), std::nullopt, std::nullopt};
  CHECK_THROWS_AS(solve_interior(p, nullptr, config(0.5, 1.0)), PreconditionError);
}

TEST_CASE("Neumann traces") {
  const GridPtr g = unit_square(41);
  const auto nodes = g->boundary_nodes();
  const SpaceTimeField x = static_field(ScalarField::from_function(g, [](double xx, double) { return xx; }), 0.1, 3);
  const BoundaryTrace tx = neumann_trace(x, nodes);
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    const int i = g->column(nodes[m]);
    const int j = g->row(nodes[m]);
    if (j == 0 || j == g->ny - 1) continue;
    if (i == g->nx - 1) CHECK(tx.at(1, m) == doctest::Approx(1.0));
    if (i == 0) CHECK(tx.at(1, m) == doctest::Approx(-1.0));
  }
  const BoundaryTrace tc = neumann_trace(static_field(ScalarField(g, 4.0), 0.1, 2), nodes);
  for (double v : tc.values) CHECK(std::abs(v) < 1e-12);

  const BoundaryTrace ts = neumann_trace(static_field(sine_mode(g), 0.1, 2), nodes);
  double err = 0.0;
  for (std::size_t m = 0; m < nodes.size(); ++m) {
    if (g->column(nodes[m]) != g->nx - 1) continue;
    err = std::max(err, std::abs(ts.at(0, m) + pi * std::sin(pi * g->point(nodes[m]).y)));
  }
  CHECK(err <= 1.1 * pi * pi * pi / 3.0 * g->h * g->h);
  CHECK_THROWS(neumann_trace(x, {g->index(5, 5)}));
}

TEST_CASE("time derivative of traces") {
  const GridPtr g = unit_square(11);
  BoundaryTrace t;
  t.grid = g;
  t.nodes = g->boundary_nodes();
  t.kind = TraceKind::normal_derivative;
  t.dt = 0.01;
  t.nt = 201;
  const std::size_t m = t.nodes.size();
  auto fill = [&](const std::function<double(double, std::size_t)>& fn) {
    t.values.clear();
    for (int k = 0; k < t.nt; ++k)
      for (std::size_t q = 0; q < m; ++q) t.values.push_back(fn(k * t.dt, q));
  };
  fill([](double, std::size_t q) { return static_cast<double>(q); });
  for (double v : dt_trace(t).values) CHECK(std::abs(v) < 1e-9);
  fill([](double s, std::size_t q) { return 3.0 * s + q; });
  const BoundaryTrace lin = dt_trace(t);
  CHECK(lin.kind == TraceKind::time_derivative_of_normal_derivative);
  for (double v : lin.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-9));
  const double omega = 5.0;
  fill([&](double s, std::size_t q) { return std::cos(omega * s) * (1.0 + q); });
  const BoundaryTrace cs = dt_trace(t);
  double err = 0.0;
  for (int k = 0; k < t.nt; ++k)
    for (std::size_t q = 0; q < m; ++q)
      err = std::max(err, std::abs(cs.at(k, q) + omega * std::sin(omega * k * t.dt) * (1.0 + q)) / (1.0 + q));
  CHECK(err <= 2.0 * omega * omega * omega * t.dt * t.dt);
  t.nt = 2;
  t.values.resize(2 * m);
  CHECK_THROWS(dt_trace(t));
}

TEST_CASE("free-space solve: zero data and finite propagation") {
  const double radius = 0.2;
  const double arrival = 0.5 - radius;
  std::vector<double> near_front;
  for (int n : {41, 81}) {
    const GridPtr g = unit_square(n);
    SolverConfig c = config(0.3, 1.0);
    c.record_stride = std::numeric_limits<int>::max();
    const EmbeddedDomain dom = make_embedded_domain(g, 0.3);
    const FreeSpaceResult zero = solve_free_space(dom, ScalarField(g, 1.0), ScalarField(g, 0.0), c);
    for (double v : zero.boundary.values) CHECK(v == 0.0);

    const ScalarField p0 = bump_field(g, {0.5, 0.5}, radius);
    const FreeSpaceResult r = solve_free_space(dom, ScalarField(g, 1.0), p0, c);
    double quiet = 0.0, front = 0.0;
    for (int k = 0; k < r.boundary.nt; ++k) {
      const double t = k * r.boundary.dt;
      for (double v : r.boundary.slice(k)) {
        if (t <= arrival - 0.1) quiet = std::max(quiet, std::abs(v));
        if (t <= arrival) front = std::max(front, std::abs(v));
      }
    }
    CHECK(quiet <= 1e-6);
    near_front.push_back(front);
    if (n == 41) {
      CHECK_THROWS_AS(solve_free_space(make_embedded_domain(g, 0.1), ScalarField(g, 1.0), p0, c), PreconditionError);
    }
  }
  // The discrete precursor ahead of the cone shrinks under refinement.
  CHECK(near_front[1] < near_front[0]);
}

TEST_CASE("exterior solve") {
  const GridPtr g = unit_square(41);
  SolverConfig c = config(0.6, 1.0);
  c.record_stride = std::numeric_limits<int>::max();
  const EmbeddedDomain dom = make_embedded_domain(g, 0.6);
  const ScalarField p0 = bump_field(g, {0.5, 0.5}, 0.3);
  const FreeSpaceResult free = solve_free_space(dom, ScalarField(g, 1.0), p0, c);

  BoundaryTrace zero = free.boundary;
  std::fill(zero.values.begin(), zero.values.end(), 0.0);
  for (double v : solve_exterior(dom, zero).values) CHECK(v == 0.0);

  // A delayed copy of the data gives a delayed copy of the trace.
  const int shift = 7;
  BoundaryTrace delayed = free.boundary;
  const std::size_t m = delayed.nodes.size();
  std::fill(delayed.values.begin(), delayed.values.end(), 0.0);
  for (int k = shift; k < delayed.nt; ++k)
    for (std::size_t q = 0; q < m; ++q) delayed.values[k * m + q] = free.boundary.at(k - shift, q);
  const BoundaryTrace a = solve_exterior(dom, free.boundary);
  const BoundaryTrace b = solve_exterior(dom, delayed);
  double gap = 0.0, scale = 0.0;
  for (int k = shift; k < a.nt; ++k)
    for (std::size_t q = 0; q < m; ++q) {
      gap = std::max(gap, std::abs(b.at(k, q) - a.at(k - shift, q)));
      scale = std::max(scale, std::abs(a.at(k - shift, q)));
    }
  CHECK(scale > 0.0);
  CHECK(gap <= 1e-12 * scale);

  BoundaryTrace early = free.boundary;
  for (std::size_t q = 0; q < m; ++q) early.values[q] = 1.0;
  CHECK_THROWS_AS(solve_exterior(dom, early), PreconditionError);
}
