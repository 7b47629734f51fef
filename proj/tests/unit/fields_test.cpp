#include <doctest.h>

#include <filesystem>

#include "support.hpp"
#include "wavestab/fields.hpp"

using namespace wavestab;
using namespace wavestab::testing;

TEST_CASE("grid spacing and boundary bookkeeping") {
  const GridPtr g = unit_square(101);
  CHECK(g->h == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(g->nx == 101);
  CHECK(g->ny == 101);
  CHECK(g->gamma0.empty());
  CHECK(g->gamma1 == g->boundary_nodes());
  CHECK(g->boundary_nodes().size() == 400u);
}

TEST_CASE("K stays away from the boundary") {
  const GridPtr g = unit_square(101);
  double margin = 1.0;
  int count = 0;
  for (std::size_t n = 0; n < g->size(); ++n) {
    if (!g->k_mask[n]) continue;
    ++count;
    const Point p = g->point(static_cast<int>(n));
    margin = std::min({margin, p.x, 1.0 - p.x, p.y, 1.0 - p.y});
  }
  CHECK(count == 41 * 41);
  CHECK(margin >= 0.02);
  CHECK_THROWS(build_grid({0, 1, 0, 1}, 101, Extents{0.005, 0.5, 0.3, 0.7}));
}

TEST_CASE("gamma0 edges and corners") {
  const GridPtr g = build_grid({0, 1, 0, 1}, 11, std::nullopt, {Edge::left, Edge::bottom});
  // The corner shared by both unobserved edges is unobserved; the others stay observed.
  CHECK(g->gamma0.size() == 10u + 10u - 1u + 0u);
  CHECK(g->gamma0.size() + g->gamma1.size() == g->boundary_nodes().size());
  CHECK(edge_from_string("top") == Edge::top);
  CHECK_FALSE(edge_from_string("diagonal").has_value());
}

TEST_CASE("gradient is exact on affine fields") {
  const GridPtr g = unit_square(21);
  const Gradient c = gradient(ScalarField(g, 3.0));
  CHECK(c.dx.max_abs() == 0.0);
  CHECK(c.dy.max_abs() == 0.0);
  const Gradient lin = gradient(ScalarField::from_function(g, [](double x, double) { return x; }));
  for (std::size_t n = 0; n < g->size(); ++n) {
    CHECK(lin.dx[n] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(lin.dy[n]) < 1e-12);
  }
}

TEST_CASE("gradient and laplacian converge at second order") {
  double grad_err[2], lap_err[2];
  int idx = 0;
  for (int n : {41, 81}) {
    const GridPtr g = unit_square(n);
    const ScalarField f = sine_mode(g);
    const Gradient gr = gradient(f);
    const ScalarField lap = laplacian(f);
    grad_err[idx] = max_interior(*g, [&](int k) {
      const Point p = g->point(k);
      return gr.dx[k] - pi * std::cos(pi * p.x) * std::sin(pi * p.y);
    });
    lap_err[idx] = max_interior(*g, [&](int k) { return lap[k] + 2.0 * pi * pi * f[k]; });
    ++idx;
  }
  CHECK(std::log2(grad_err[0] / grad_err[1]) == doctest::Approx(2.0).epsilon(0.1));
  CHECK(std::log2(lap_err[0] / lap_err[1]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("laplacian is exact on quadratics") {
  const GridPtr g = unit_square(17);
  const ScalarField q = ScalarField::from_function(g, [](double x, double y) { return x * x + y * y; });
  const ScalarField lap = laplacian(q);
  CHECK(max_interior(*g, [&](int k) { return lap[k] - 4.0; }) < 1e-9);
  CHECK(laplacian(ScalarField(g, 2.0)).max_abs() < 1e-9);
}

TEST_CASE("trapezoidal integration") {
  const GridPtr g = unit_square(51);
  CHECK(integrate(ScalarField(g, 1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(integrate(ScalarField(g, 0.0)) == 0.0);
  CHECK(integrate(ScalarField(g, 1.0), Mask(g->size(), 0)) == 0.0);
  const GridPtr fine = unit_square(201);
  const ScalarField s = sine_mode(fine);
  CHECK(std::abs(integrate(hadamard(s, s)) - 0.25) <= 1e-4);
  // Integral over K of 1 is the area of K.
  CHECK(integrate(ScalarField(g, 1.0), g->k_mask) == doctest::Approx(0.16).epsilon(1e-12));
}

TEST_CASE("normal derivative signs follow the outward normal") {
  const GridPtr g = unit_square(21);
  const ScalarField x = ScalarField::from_function(g, [](double xx, double) { return xx; });
  CHECK(normal_derivative(*g, x.values(), g->index(20, 7)) == doctest::Approx(1.0));
  CHECK(normal_derivative(*g, x.values(), g->index(0, 7)) == doctest::Approx(-1.0));
  CHECK(std::abs(normal_derivative(*g, x.values(), g->index(7, 0))) < 1e-12);
}

TEST_CASE("field serialization round trips") {
  const GridPtr g = unit_square(9);
  const ScalarField f = ScalarField::from_function(g, [](double x, double y) { return std::exp(x) / (1.0 + 3.0 * y); });
  const auto dir = std::filesystem::temp_directory_path() / "wavestab-fields-test";
  std::filesystem::create_directories(dir);
  write_csv(f, dir / "f.csv");
  const ScalarField back = read_csv(g, dir / "f.csv");
  CHECK((back - f).max_abs() == 0.0);
  write_raw(f, dir / "f.raw");
  const RawField raw = read_raw(dir / "f.raw");
  CHECK(raw.nx == 9);
  CHECK(raw.ny == 9);
  CHECK(raw.h == g->h);
  CHECK(raw.values == std::vector<double>(f.values().begin(), f.values().end()));
  std::filesystem::remove_all(dir);
}

TEST_CASE("format_real keeps 17 significant digits") {
  CHECK(std::stod(format_real(0.1)) == 0.1);
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}
