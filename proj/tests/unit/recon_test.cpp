#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "wavestab/config.hpp"
#include "wavestab/recon.hpp"

using namespace wavestab;
using namespace wavestab::testing;

namespace {

ReconProblem problem(std::vector<Point> centers, double radius, const std::vector<double>& truth, int n = 21) {
  ExperimentConfig c = parse_config(nlohmann::json::object());
  c.grid.n = n;
  const Scenario s = make_scenario(c);
  ReconProblem p;
  p.D_base = ScalarField(s.grid, 1.0);
  p.f = s.f;
  p.T = s.T;
  p.T0 = s.T0;
  p.basis = make_basis(s.grid, std::move(centers), radius);
  p.c0 = s.c0;
  p.solver = s.solver;
  p.data = synthesize_data(p, truth);
  return p;
}

}  // namespace

TEST_CASE("basis construction") {
  const GridPtr g = unit_square(21);
  const BumpBasis b = make_basis(g, {{0.4, 0.4}, {0.6, 0.6}}, 0.1);
  CHECK(b.size() == 2);
  const ScalarField sum = b.combine({2.0, -1.0});
  CHECK((sum - (2.0 * b.fields[0] - b.fields[1])).max_abs() == 0.0);
  CHECK_THROWS(make_basis(g, {{0.5, 0.5}, {0.5, 0.5}}, 0.1));
  CHECK_THROWS(make_basis(g, {{0.2, 0.5}}, 0.1));
}

TEST_CASE("misfit at the truth and at zero") {
  ReconProblem p = problem({{0.5, 0.5}}, 0.12, {0.1});
  CHECK(misfit(p, {0.1}).J <= 1e-20);
  p.lambda = 1e-3;
  CHECK(misfit(p, {0.1}).J == doctest::Approx(1e-3 * 0.01).epsilon(1e-9));
  const ReconProblem zero = problem({{0.5, 0.5}}, 0.12, {0.0});
  CHECK(misfit(zero, {0.0}).J == 0.0);
}

TEST_CASE("misfit is continuous and penalises inadmissible coefficients") {
  const ReconProblem p = problem({{0.5, 0.5}}, 0.12, {0.1});
  const double J = misfit(p, {0.05}).J;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double gap = std::abs(misfit(p, {0.05 + eps}).J - J);
    CHECK(gap < prev);
    prev = gap;
  }
  const MisfitValue bad = misfit(p, {-5.0});
  CHECK_FALSE(bad.admissible);
  CHECK(bad.J == kInadmissiblePenalty);
  CHECK_FALSE(admissible(p, {-5.0}));
}

TEST_CASE("gradient matches a difference quotient of the misfit") {
  const ReconProblem p = problem({{0.4, 0.4}, {0.6, 0.6}}, 0.09, {0.05, -0.03});
  const std::vector<double> a{0.01, 0.01};
  const auto g = numeric_gradient(p, a, 1e-4, 2);
  const double step = 1e-5;
  const double fd = (misfit(p, {a[0] + step, a[1]}).J - misfit(p, {a[0] - step, a[1]}).J) / (2.0 * step);
  CHECK(g[0] == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("starting at the truth stops at once") {
  const ReconProblem p = problem({{0.5, 0.5}}, 0.12, {0.1});
  const ReconResult r = reconstruct(p, {0.1});
  CHECK(r.converged);
  CHECK(r.log.size() == 1);
  CHECK(std::abs(r.a_hat[0] - 0.1) <= 1e-6);
}

TEST_CASE("single bump recovery with a monotone log") {
  const ReconProblem p = problem({{0.5, 0.5}}, 0.12, {0.1}, 31);
  const ReconResult r = reconstruct(p, {0.0});
  CHECK(std::abs(r.a_hat[0] - 0.1) <= 0.005);
  for (std::size_t i = 1; i < r.log.size(); ++i) CHECK(r.log[i].J <= r.log[i - 1].J);
  CHECK(r.log.back().iter <= 200);

  const auto path = std::filesystem::temp_directory_path() / "wavestab-recon-log.csv";
  write_log_csv(r, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iter,J,grad_norm,a1");
  std::filesystem::remove(path);
}

TEST_CASE("projection keeps iterates inside the box") {
  const ReconProblem p = problem({{0.5, 0.5}}, 0.12, {0.1});
  ReconOptions o;
  o.upper = 0.05;
  const ReconResult r = reconstruct(p, {0.0}, o);
  for (const auto& e : r.log) CHECK(e.a[0] <= 0.05);
  CHECK(r.a_hat[0] == doctest::Approx(0.05));
}

TEST_CASE("data must cover the horizon") {
  ReconProblem p = problem({{0.5, 0.5}}, 0.12, {0.1});
  p.T = 2.0 * p.T;
  CHECK_THROWS(validate(p));
  ReconProblem q = problem({{0.5, 0.5}}, 0.12, {0.1});
  q.T = 0.5 * q.T0;
  CHECK_THROWS(validate(q));
}
