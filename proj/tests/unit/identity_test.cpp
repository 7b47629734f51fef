#include <doctest.h>

#include "support.hpp"
#include "wavestab/config.hpp"
#include "wavestab/identity.hpp"
#include "wavestab/source.hpp"
#include "wavestab/stability.hpp"

using namespace wavestab;
using namespace wavestab::testing;

namespace {

struct Setup {
  Scenario s;
  ScalarField F;
  InteriorProblem reference;
  SolverConfig cfg;
  ConvexWeight weight;
};

Setup setup(int n, double amplitude = 0.05) {
  ExperimentConfig c = parse_config(nlohmann::json::object());
  c.grid.n = n;
  c.geometry.x0 = {0.5, -0.1};
  c.coefficient.bumps = {BumpConfig{{0.5, 0.5}, 0.15, 0.2}};
  Setup out{make_scenario(c), {}, {}, {}, {}};
  out.F = amplitude * bump_field(out.s.grid, {0.5, 0.5}, 0.2);
  out.reference = InteriorProblem{out.s.D1 - out.F, out.s.f, std::nullopt, std::nullopt};
  out.cfg = out.s.solver;
  out.cfg.max_coefficient = out.s.c0;
  out.weight = build_weight(out.s.d, out.s.T);
  return out;
}

}  // namespace

TEST_CASE("residual conventions") {
  L1Terms t;
  CHECK(t.residual() == 0.0);
  t.lhs = 2.0;
  t.rhs_terms = {1.0, 0.5, 0.0, 0.0, 0.0, 0.0};
  CHECK(t.rhs() == 1.5);
  CHECK(t.residual() == doctest::Approx(0.25));
}

TEST_CASE("zero perturbation gives a zero residual") {
  const Setup u = setup(21, 0.0);
  const std::vector<double> taus{0.0, 2.0};
  for (const L1Terms& t : l1_identity_terms(u.s.D1, u.F, u.reference, u.weight, taus, u.cfg)) {
    CHECK(t.lhs == 0.0);
    CHECK(t.residual() == 0.0);
  }
}

TEST_CASE("stored and streaming evaluations agree") {
  const Setup u = setup(21);
  const TimeGrid tg = make_time_grid(u.s.grid->h, u.s.c0, [&] {
    SolverConfig c = u.cfg;
    c.horizon = u.weight.T;
    return c;
  }());
  SpaceTimeField w, R;
  w.grid = R.grid = u.s.grid;
  w.dt = R.dt = tg.dt;
  int k_max = -1;
  SolverConfig stepped = u.cfg;
  stepped.horizon = u.weight.T;
  march_reduction(u.s.D1, u.F, u.reference, stepped, 1, [&](int k, const ScalarField& wk, const ScalarField& Rk) {
    w.snapshots.push_back(wk);
    R.snapshots.push_back(Rk);
    k_max = k;
  });
  CHECK(k_max == tg.steps + 1);
  const double stored = l1_identity_residual(w, u.s.D1, u.F, R, u.weight, 1.0);
  const std::vector<double> taus{1.0};
  const double streamed = l1_identity_terms(u.s.D1, u.F, u.reference, u.weight, taus, u.cfg).front().residual();
  CHECK(stored == doctest::Approx(streamed).epsilon(1e-12));

  SpaceTimeField short_w = w;
  short_w.snapshots.resize(static_cast<std::size_t>(tg.steps));
  CHECK_THROWS(l1_identity_residual(short_w, u.s.D1, u.F, R, u.weight, 1.0));
}

TEST_CASE("residual decreases across three refinement levels") {
  const std::vector<double> taus{0.0, 1.0};
  std::vector<std::vector<double>> res(taus.size());
  for (int n : {41, 81, 161}) {
    const Setup u = setup(n);
    const auto terms = l1_identity_terms(u.s.D1, u.F, u.reference, u.weight, taus, u.cfg);
    for (std::size_t q = 0; q < taus.size(); ++q) res[q].push_back(terms[q].residual());
  }
  for (std::size_t q = 0; q < taus.size(); ++q) {
    INFO("tau = " << taus[q]);
    CHECK(res[q][1] < res[q][0]);
    CHECK(res[q][2] < res[q][1]);
    CHECK(res[q][2] <= 0.05);
  }
}

TEST_CASE("accumulator bookkeeping") {
  const Setup u = setup(11);
  L1Accumulator acc(u.s.D1, u.F, u.weight, {0.0}, 0.1, 2);
  const ScalarField z(u.s.grid, 0.0);
  acc.add(0, z, z, z, z, z);
  CHECK_THROWS(acc.add(0, z, z, z, z, z));
  CHECK_THROWS(acc.add(1, z, z, z, z, z));
  CHECK_FALSE(acc.complete());
  CHECK_THROWS(acc.terms());
  acc.add(-1, z, z, z, z, z);
  acc.add(-2, z, z, z, z, z);
  CHECK(acc.complete());
  CHECK(acc.terms().front().residual() == 0.0);
  CHECK_THROWS(L1Accumulator(u.s.D1, u.F, u.weight, {-1.0}, 0.1, 2));
}
