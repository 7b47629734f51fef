#include <doctest.h>

#include "support.hpp"
#include "wavestab/source.hpp"
#include "wavestab/stability.hpp"

using namespace wavestab;
using namespace wavestab::testing;

namespace {

struct Pair {
  GridPtr g;
  ScalarField D1, F, f;
  SolverConfig c;
};

Pair make_pair_setup(int n, double horizon) {
  Pair p;
  p.g = unit_square(n);
  p.D1 = ScalarField(p.g, 1.0) + 0.1 * bump_field(p.g, {0.45, 0.55}, 0.2);
  p.F = 0.05 * bump_field(p.g, {0.5, 0.5}, 0.15);
  p.f = sine_mode(p.g);
  p.c.horizon = horizon;
  p.c.max_coefficient = 2.0;
  return p;
}

}  // namespace

TEST_CASE("source assembly") {
  const Pair p = make_pair_setup(31, 0.2);
  const InteriorProblem ref{p.D1 - p.F, p.f, std::nullopt, std::nullopt};
  const SpaceTimeField R = solve_interior(ref, nullptr, p.c);

  const SpaceTimeField zero = build_source(ScalarField(p.g, 0.0), R);
  for (const auto& s : zero.snapshots) CHECK(s.max_abs() == 0.0);

  const SpaceTimeField flat = build_source(ScalarField(p.g, 0.3), R, false);
  const ScalarField lapR = laplacian(R[3]);
  CHECK(max_interior(*p.g, [&](int k) { return flat[3][k] - 0.3 * lapR[k]; }) < 1e-12);

  const SpaceTimeField S = build_source(p.F, R);
  const Gradient gF = gradient(p.F);
  const ScalarField lapF = laplacian(p.F);
  for (int k : {0, 5, R.nt() - 1}) {
    const Gradient gR = gradient(R[k]);
    const ScalarField lR = laplacian(R[k]);
    const double err = max_interior(*p.g, [&](int n) {
      const double expected = lapF[n] * R[k][n] + 2.0 * (gF.dx[n] * gR.dx[n] + gF.dy[n] * gR.dy[n]) + p.F[n] * lR[n];
      return S[k][n] - expected;
    });
    CHECK(err < 1e-10);
  }
  CHECK_THROWS(build_source(ScalarField(p.g, 0.3), R));
  CHECK_THROWS(check_supported_in_k(bump_field(p.g, {0.2, 0.2}, 0.1)));
}

TEST_CASE("w reproduces u1 - u2 and scales with the source") {
  const Pair p = make_pair_setup(31, 1.0);
  const InteriorProblem u1p{p.D1, p.f, std::nullopt, std::nullopt};
  const InteriorProblem u2p{p.D1 - p.F, p.f, std::nullopt, std::nullopt};
  const SpaceTimeField u1 = solve_interior(u1p, nullptr, p.c);
  const SpaceTimeField u2 = solve_interior(u2p, nullptr, p.c);
  const SpaceTimeField S = build_source(p.F, u2);
  const SpaceTimeField w = solve_w(p.D1, S, p.c);
  double gap = 0.0, scale = 0.0;
  for (int k = 0; k < w.nt(); ++k) {
    const ScalarField diff = u1[k] - u2[k];
    gap = std::max(gap, (w[k] - diff).max_abs());
    scale = std::max(scale, diff.max_abs());
  }
  CHECK(scale > 0.0);
  CHECK(gap <= 1e-10 * scale);

  SpaceTimeField S3 = S;
  for (auto& s : S3.snapshots) s *= 3.0;
  const SpaceTimeField w3 = solve_w(p.D1, S3, p.c);
  for (int k = 0; k < w.nt(); ++k) CHECK((w3[k] - 3.0 * w[k]).max_abs() <= 1e-12 * (1.0 + w[k].max_abs()));

  SpaceTimeField S0 = S;
  for (auto& s : S0.snapshots) s *= 0.0;
  for (const auto& s : solve_w(p.D1, S0, p.c).snapshots) CHECK(s.max_abs() == 0.0);
}

TEST_CASE("streaming reduction matches the stored solves") {
  const Pair p = make_pair_setup(31, 0.5);
  const InteriorProblem u2p{p.D1 - p.F, p.f, std::nullopt, std::nullopt};
  const SpaceTimeField u2 = solve_interior(u2p, nullptr, p.c);
  const SpaceTimeField w = solve_w(p.D1, build_source(p.F, u2), p.c);
  double gap = 0.0;
  int seen = 0;
  march_reduction(p.D1, p.F, u2p, p.c, 0, [&](int k, const ScalarField& wk, const ScalarField& Rk) {
    gap = std::max({gap, (wk - w[k]).max_abs(), (Rk - u2[k]).max_abs()});
    ++seen;
  });
  CHECK(seen == w.nt());
  CHECK(gap == 0.0);
}

TEST_CASE("initial acceleration identity") {
  const Pair p = make_pair_setup(31, 0.05);
  const InteriorProblem ref{p.D1 - p.F, p.f, std::nullopt, std::nullopt};
  const SpaceTimeField R = solve_interior(ref, nullptr, p.c);
  SpaceTimeField S0 = build_source(ScalarField(p.g, 0.0), R);
  const Wtt0Check none = check_wtt0(solve_w(p.D1, S0, p.c), ScalarField(p.g, 0.0), R);
  CHECK(none.zero_denominator);
  CHECK(none.residual == 0.0);

  std::vector<double> res;
  for (int n : {51, 101}) {
    const Pair q = make_pair_setup(n, 0.05);
    const InteriorProblem qr{q.D1 - q.F, q.f, std::nullopt, std::nullopt};
    const SpaceTimeField Rq = solve_interior(qr, nullptr, q.c);
    const SpaceTimeField wq = solve_w(q.D1, build_source(q.F, Rq), q.c);
    res.push_back(check_wtt0(wq, q.F, Rq).residual);
  }
  CHECK(res[1] < res[0]);
  CHECK(res[1] <= 0.05);
}

TEST_CASE("initial acceleration identity with constant reference data") {
  const GridPtr g = unit_square(201);
  const ScalarField D1(g, 1.0);
  const ScalarField F = 0.05 * bump_field(g, {0.5, 0.5}, 0.15);
  SolverConfig c;
  c.horizon = 0.01;
  c.max_coefficient = 2.0;
  const TimeGrid tg = make_time_grid(g->h, 2.0, c);
  BoundaryTrace ones;
  ones.grid = g;
  ones.nodes = g->boundary_nodes();
  ones.kind = TraceKind::dirichlet_value;
  ones.dt = tg.dt;
  ones.nt = tg.steps + 2;
  ones.values.assign(static_cast<std::size_t>(ones.nt) * ones.nodes.size(), 1.0);
  const InteriorProblem ref{D1 - F, ScalarField(g, 1.0), std::nullopt, ones};
  const SpaceTimeField R = solve_interior(ref, nullptr, c);
  const SpaceTimeField w = solve_w(D1, build_source(F, R), c);
  CHECK(check_wtt0(w, F, R).residual <= 0.05);
}

TEST_CASE("even extension view") {
  const Pair p = make_pair_setup(21, 0.3);
  const InteriorProblem ref{p.D1 - p.F, p.f, std::nullopt, std::nullopt};
  const SpaceTimeField R = solve_interior(ref, nullptr, p.c);
  const SpaceTimeField w = solve_w(p.D1, build_source(p.F, R), p.c);
  const EvenExtensionView v(w);
  CHECK(v.first_index() == -v.last_index());
  for (int k = 1; k <= v.last_index(); ++k) {
    CHECK(&v[k] == &v[-k]);
    CHECK((v.time_derivative(k) + v.time_derivative(-k)).max_abs() == 0.0);
  }
  CHECK(v.time_derivative(0).max_abs() == 0.0);
}
