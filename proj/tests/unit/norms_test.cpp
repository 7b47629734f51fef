#include <doctest.h>

#include "support.hpp"
#include "wavestab/norms.hpp"
#include "wavestab/wave.hpp"

using namespace wavestab;
using namespace wavestab::testing;

namespace {

BoundaryTrace constant_trace(GridPtr g, double value, double dt, int nt, TraceKind kind) {
  BoundaryTrace t;
  t.grid = g;
  t.nodes = g->boundary_nodes();
  t.dt = dt;
  t.nt = nt;
  t.kind = kind;
  t.values.assign(static_cast<std::size_t>(nt) * t.nodes.size(), value);
  return t;
}

}  // namespace

TEST_CASE("delta norm of the sine mode") {
  CHECK(delta_norm(ScalarField(unit_square(21), 0.0)) == 0.0);
  const double exact = std::sqrt(0.25 + pi * pi / 2.0 + std::pow(pi, 4));
  CHECK(std::abs(delta_norm(sine_mode(unit_square(201))) - exact) <= 1e-2);
}

TEST_CASE("delta norm is absolutely homogeneous") {
  const ScalarField f = sine_mode(unit_square(31));
  CHECK(delta_norm(-3.0 * f) == doctest::Approx(3.0 * delta_norm(f)).epsilon(1e-13));
}

TEST_CASE("trace norm") {
  const GridPtr quarter = build_grid({0.0, 0.25, 0.0, 0.25}, 26);
  CHECK(trace_l2(constant_trace(quarter, 0.0, 0.01, 101, TraceKind::normal_derivative), 1.0) == 0.0);
  const BoundaryTrace one = constant_trace(quarter, 1.0, 0.01, 101, TraceKind::normal_derivative);
  CHECK(trace_l2(one, 1.0) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(trace_l2(one, 0.255) == doctest::Approx(std::sqrt(0.255)).epsilon(0.02));
  CHECK_THROWS(trace_l2(one, 1.5));
}

TEST_CASE("boundary weights sum to the perimeter") {
  const GridPtr g = unit_square(21);
  const auto w = boundary_weights(*g, g->boundary_nodes());
  double total = 0.0;
  for (double v : w) total += v;
  CHECK(total == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("stability ratio bookkeeping") {
  const GridPtr g = unit_square(21);
  const BoundaryTrace zero =
      constant_trace(g, 0.0, 0.01, 11, TraceKind::time_derivative_of_normal_derivative);
  const StabilityRatio undefined = stability_ratio(ScalarField(g, 0.0), zero, 0.1);
  CHECK(undefined.undefined);

  const ScalarField F = 0.01 * sine_mode(g);
  const BoundaryTrace some = constant_trace(g, 2.0, 0.01, 11, TraceKind::time_derivative_of_normal_derivative);
  const StabilityRatio r = stability_ratio(F, some, 0.1);
  CHECK_FALSE(r.undefined);
  CHECK(r.ratio > 0.0);
  CHECK(std::isfinite(r.ratio));
  CHECK(r.ratio == doctest::Approx(r.delta_norm_F / r.trace_misfit));
  CHECK(std::isinf(stability_ratio(F, zero, 0.1).ratio));

  CHECK_THROWS(stability_ratio(F, constant_trace(g, 1.0, 0.01, 11, TraceKind::dirichlet_value), 0.1));
}
