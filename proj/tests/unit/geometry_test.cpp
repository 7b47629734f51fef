#include <doctest.h>

#include "support.hpp"
#include "wavestab/geometry.hpp"
#include "wavestab/stability.hpp"

using namespace wavestab;
using namespace wavestab::testing;

namespace {
const Point kVantage{-0.5, -0.5};
}

TEST_CASE("quadratic weight values") {
  const GridPtr g = unit_square(41);
  const ScalarField d = build_quadratic_d(g, kVantage, 1.2);
  CHECK(d(40, 40) == doctest::Approx(5.4).epsilon(1e-14));
  CHECK(d.min() == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(d(0, 0) == d.min());
  const ScalarField d2 = build_quadratic_d(g, kVantage, 2.4);
  CHECK((d2 - 2.0 * d).max_abs() < 1e-14);
  CHECK_THROWS(build_quadratic_d(g, {0.5, 0.5}, 1.2));
  CHECK_THROWS(build_quadratic_d(g, {1.0, 0.2}, 1.2));
  CHECK_THROWS(build_quadratic_d(g, kVantage, 1.0));
}

TEST_CASE("constant metric passes both assumptions") {
  const GridPtr g = unit_square(41);
  const GeometryReport r = verify_assumptions(build_quadratic_d(g, kVantage, 1.2), ScalarField(g, 1.0));
  CHECK(r.min_hessian_eig == doctest::Approx(2.4).epsilon(1e-6));
  CHECK(r.min_grad_ratio == doctest::Approx(4.8).epsilon(1e-6));
  CHECK(r.m0 == doctest::Approx(0.6));
  CHECK(r.passes_A1);
  CHECK(r.passes_A2);
  CHECK_FALSE(r.max_normal_deriv_gamma0.has_value());
}

TEST_CASE("a strong coefficient bump is reported, not rejected") {
  const GridPtr g = unit_square(41);
  const ScalarField D = ScalarField(g, 1.0) + 0.3 * bump_field(g, {0.5, 0.5}, 0.15);
  const GeometryReport r = verify_assumptions(build_quadratic_d(g, kVantage, 1.2), D);
  CHECK(std::isfinite(r.min_hessian_eig));
  CHECK(std::isfinite(r.min_grad_ratio));
  CHECK(r.min_hessian_eig < 2.4);
  CHECK(r.passes_A1 == (r.min_hessian_eig >= 2.0 - 1e-8));
}

TEST_CASE("pure squared distance fails the strict gradient condition") {
  const GridPtr g = unit_square(21);
  const ScalarField d = ScalarField::from_function(g, [](double x, double y) {
    return (x - kVantage.x) * (x - kVantage.x) + (y - kVantage.y) * (y - kVantage.y);
  });
  const GeometryReport r = verify_assumptions(d, ScalarField(g, 1.0));
  CHECK(r.min_grad_ratio == doctest::Approx(4.0).epsilon(1e-9));
  CHECK_FALSE(r.passes_A2);
}

TEST_CASE("unobserved edges facing away from the vantage point") {
  const GridPtr g = build_grid({0, 1, 0, 1}, 21, std::nullopt, {Edge::left, Edge::bottom});
  const GeometryReport ok = verify_assumptions(build_quadratic_d(g, kVantage, 1.2), ScalarField(g, 1.0));
  REQUIRE(ok.max_normal_deriv_gamma0.has_value());
  CHECK(*ok.max_normal_deriv_gamma0 < 0.0);
  CHECK(ok.passes_A1);
  const GridPtr bad = build_grid({0, 1, 0, 1}, 21, std::nullopt, {Edge::right});
  const GeometryReport r = verify_assumptions(build_quadratic_d(bad, kVantage, 1.2), ScalarField(bad, 1.0));
  CHECK(*r.max_normal_deriv_gamma0 > 0.0);
  CHECK_FALSE(r.passes_A1);
}

TEST_CASE("observation threshold") {
  const ScalarField d101 = build_quadratic_d(unit_square(101), kVantage, 1.2);
  const ScalarField d201 = build_quadratic_d(unit_square(201), kVantage, 1.2);
  CHECK(compute_T0(d101) == doctest::Approx(2.0 * std::sqrt(5.4)).epsilon(1e-12));
  CHECK(compute_T0(d101) == compute_T0(d201));
  CHECK(compute_T0(4.0 * d101) == doctest::Approx(2.0 * compute_T0(d101)).epsilon(1e-14));
}

TEST_CASE("weight constants for T = 5") {
  const ScalarField d = build_quadratic_d(unit_square(41), kVantage, 1.2);
  const ConvexWeight w = build_weight(d, 5.0);
  CHECK(w.delta == doctest::Approx(0.425).epsilon(1e-12));
  CHECK(w.c == doctest::Approx(0.949).epsilon(1e-12));
  CHECK(w.sigma == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(w.t1 == doctest::Approx(std::sqrt(0.6 / (2.0 * 0.949))).epsilon(1e-12));
  CHECK(w.t0 == -w.t1);
  CHECK_NOTHROW(check_weight_invariants(w));
  CHECK_THROWS(build_weight(d, compute_T0(d)));
  CHECK_THROWS(build_weight(d, 1.0));
}

TEST_CASE("weight invariants hold across horizons") {
  const ScalarField d = build_quadratic_d(unit_square(21), kVantage, 1.2);
  const double T0 = compute_T0(d);
  for (double factor : {1.01, 1.2, 2.0, 5.0}) {
    const ConvexWeight w = build_weight(d, factor * T0);
    CHECK(w.c > 0.0);
    CHECK(w.c < 1.0);
    CHECK(w.max_d - w.c * w.T * w.T <= -w.delta);
    CHECK(w.phi(0, 0.0) == doctest::Approx(w.m0));
  }
}

TEST_CASE("Q(sigma) slices") {
  const GridPtr g = unit_square(41);
  const ConvexWeight w = build_weight(build_quadratic_d(g, kVantage, 1.2), 5.0);
  const double edge = std::sqrt(0.3 / 0.949);
  const std::vector<double> times{0.0, 5.0, -5.0, edge - 1e-3, edge + 1e-3};
  const SpaceTimeMask q = q_sigma_mask(w, times);
  const int corner = g->index(0, 0);
  auto count = [](const Mask& m) { return std::count(m.begin(), m.end(), 1); };
  CHECK(count(q.members[0]) == static_cast<long>(g->size()));
  CHECK(count(q.members[1]) == 0);
  CHECK(count(q.members[2]) == 0);
  CHECK(q.members[3][static_cast<std::size_t>(corner)] == 1);
  CHECK(q.members[4][static_cast<std::size_t>(corner)] == 0);
}
