#include <doctest.h>

#include "support.hpp"
#include "wavestab/config.hpp"
#include "wavestab/pat.hpp"
#include "wavestab/stability.hpp"

using namespace wavestab;
using namespace wavestab::testing;

namespace {

PatScene scene(int n, double c_amp, double p0_amp = 1.0, double r0 = 0.5) {
  ExperimentConfig c = parse_config(nlohmann::json::object());
  c.grid.n = n;
  const Scenario s = make_scenario(c);
  PatScene sc;
  sc.c_speed = ScalarField(s.grid, 1.0) + c_amp * bump_field(s.grid, {0.5, 0.5}, 0.15);
  sc.p0 = p0_amp * plateau(s.grid, c.pat.p0_inner, c.pat.p0_outer);
  sc.T = s.T;
  sc.r0 = r0;
  sc.c0 = s.c0;
  sc.solver = s.solver;
  return sc;
}

}  // namespace

TEST_CASE("variable transforms") {
  const GridPtr g = unit_square(21);
  const ScalarField one(g, 1.0);
  const ScalarField p = sine_mode(g);
  CHECK((to_internal(p, one) - p).max_abs() == 0.0);
  CHECK((to_coefficient(one) - one).max_abs() == 0.0);
  CHECK((to_initial(p, one) - p).max_abs() == 0.0);

  const ScalarField c = one + 0.2 * bump_field(g, {0.5, 0.5}, 0.2);
  CHECK((to_coefficient(c) - hadamard(c, c)).max_abs() == 0.0);
  CHECK((to_pressure(to_internal(p, c), c) - p).max_abs() <= 1e-15);
  CHECK_THROWS(to_coefficient(ScalarField(g, 0.0)));
  CHECK_THROWS(to_internal(p, -1.0 * one));
}

TEST_CASE("scene validation") {
  CHECK_NOTHROW(validate(scene(31, 0.1)));
  CHECK_THROWS(validate(scene(31, 0.1, 0.3)));  // p0 below r0 on K
  CHECK_THROWS(validate(scene(31, 1.0)));       // c^2 above c0
  PatScene edge = scene(31, 0.1);
  edge.c_speed[static_cast<std::size_t>(edge.c_speed.grid().index(1, 5))] = 1.1;
  CHECK_THROWS(validate(edge));
}

TEST_CASE("zero initial pressure gives zero traces") {
  const PatMeasurement m = synthesize_measurement(scene(21, 0.1, 0.0, 0.0));
  for (double v : m.h.values) CHECK(v == 0.0);
  for (double v : m.nu_trace.values) CHECK(v == 0.0);
}

TEST_CASE("exterior trace approaches the free-space oracle") {
  std::vector<double> err;
  for (int n : {41, 81}) {
    const PatScene sc = scene(n, 0.1);
    const PatMeasurement m = synthesize_measurement(sc);
    const BoundaryTrace oracle = free_space_normal_trace(sc);
    const BoundaryTrace gap = subtract(m.nu_trace, oracle);
    err.push_back(trace_l2(gap, gap.horizon()) / trace_l2(oracle, oracle.horizon()));
  }
  CHECK(std::log2(err[0] / err[1]) >= 1.7);
}

TEST_CASE("joint recovery with a constant speed") {
  const PatScene sc = scene(31, 0.0);
  const PatMeasurement m = synthesize_measurement(sc);
  ExperimentConfig c = parse_config(nlohmann::json::object());
  c.grid.n = 31;
  const Scenario s = make_scenario(c);
  JointRecoveryInput in;
  in.f_known = to_initial(sc.p0, sc.c_speed);
  in.h = m.h;
  in.nu_trace = m.nu_trace;
  in.basis = make_basis(sc.p0.grid_ptr(), {{0.5, 0.5}}, 0.15);
  in.T = sc.T;
  in.T0 = s.T0;
  in.r0 = sc.r0;
  in.c0 = sc.c0;
  in.solver = pat_solver_config(sc);
  const JointRecovery r = joint_recover(in);
  CHECK(std::abs(r.recon.a_hat[0]) <= 0.02);
  CHECK((r.p0_hat - hadamard(in.f_known, hadamard(r.c_hat, r.c_hat))).max_abs() == 0.0);

  in.f_known = 0.1 * in.f_known;
  CHECK_THROWS(joint_recover(in));
}
