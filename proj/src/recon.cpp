#include "wavestab/recon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "wavestab/errors.hpp"
#include "wavestab/norms.hpp"
#include "wavestab/source.hpp"
#include "wavestab/stability.hpp"

namespace wavestab {

ScalarField BumpBasis::combine(const std::vector<double>& a) const {
  ensure(a.size() == fields.size(), "coefficient vector does not match the basis");
  ScalarField out(grid);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto v = fields[i].values();
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += a[i] * v[n];
  }
  return out;
}

BumpBasis make_basis(GridPtr grid, std::vector<Point> centers, double radius) {
  ensure(!centers.empty(), "basis needs at least one bump");
  ensure(radius > 0.0, "bump radius must be positive");
  BumpBasis basis;
  basis.grid = grid;
  basis.centers = std::move(centers);
  basis.radius = radius;
  for (const Point& c : basis.centers) {
    ScalarField b = bump_field(grid, c, radius);
    try {
      check_supported_in_k(b);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument(
          fmt::format("bump at ({}, {}) is not supported in K", format_real(c.x), format_real(c.y)));
    }
    ensure(b.max() > 0.0, "bump covers no grid node");
    basis.fields.push_back(std::move(b));
  }
  const std::size_t m = basis.size();
  Eigen::MatrixXd gram(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double v = integrate(hadamard(basis.fields[i], basis.fields[j]));
      gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      gram(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  ensure(llt.info() == Eigen::Success, "basis Gram matrix is singular");
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const auto ev = eig.eigenvalues();
  ensure(ev.minCoeff() > 1e-10 * ev.maxCoeff(), "basis Gram matrix is numerically singular");
  return basis;
}

namespace {

SolverConfig model_config(const ReconProblem& p) {
  SolverConfig cfg = p.solver;
  cfg.horizon = p.T;
  cfg.record_stride = 1;
  if (cfg.max_coefficient <= 0.0) cfg.max_coefficient = p.c0;
  return cfg;
}

const std::vector<int>& observed_nodes(const ReconProblem& p) {
  return p.observed.empty() ? p.D_base.grid().gamma1 : p.observed;
}

/// Leading `nt` samples of a trace.
BoundaryTrace truncate(const BoundaryTrace& t, int nt) {
  BoundaryTrace out = t;
  out.nt = nt;
  out.values.resize(static_cast<std::size_t>(nt) * t.node_count());
  return out;
}

double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

void validate(const ReconProblem& p) {
  ensure(p.T > p.T0, "observation time must exceed T0");
  ensure(p.lambda >= 0.0, "regularization weight must be nonnegative");
  ensure(p.basis.size() > 0 && p.basis.grid.get() == p.D_base.grid_ptr().get(), "basis lives on another grid");
  ensure(p.data.kind == TraceKind::time_derivative_of_normal_derivative,
         "data must be the time derivative of a Neumann trace");
  ensure(p.data.nodes == observed_nodes(p), "data nodes differ from the observed nodes");
  const SolverConfig cfg = model_config(p);
  const TimeGrid tg = make_time_grid(p.D_base.grid().h, cfg.max_coefficient, cfg);
  ensure(std::abs(p.data.dt - tg.dt) <= 1e-12 * tg.dt, "data are not sampled on the model time grid");
  ensure(p.data.nt >= tg.steps + 1, "data horizon is shorter than T");
}

bool admissible(const ReconProblem& p, const std::vector<double>& a) {
  const ScalarField D = p.D_base + p.basis.combine(a);
  const double lo = 1.0 / p.c0;
  for (std::size_t n = 0; n < D.size(); ++n) {
    if (!(D[n] >= lo && D[n] <= p.c0)) return false;
  }
  return true;
}

BoundaryTrace forward_data(const ReconProblem& p, const std::vector<double>& a) {
  const ScalarField D = p.D_base + p.basis.combine(a);
  const InteriorProblem problem{D, p.f, std::nullopt, p.h};
  return dt_trace(solve_interior_trace(problem, {}, model_config(p), observed_nodes(p)));
}

BoundaryTrace synthesize_data(const ReconProblem& p, const std::vector<double>& a_truth) {
  ensure(admissible(p, a_truth), "truth coefficients are inadmissible");
  return forward_data(p, a_truth);
}

MisfitValue misfit(const ReconProblem& p, const std::vector<double>& a) {
  if (!admissible(p, a)) return {kInadmissiblePenalty, false};
  const BoundaryTrace model = forward_data(p, a);
  ensure(p.data.nt >= model.nt, "data horizon is shorter than T");
  const BoundaryTrace data = p.data.nt == model.nt ? p.data : truncate(p.data, model.nt);
  BoundaryTrace diff = subtract(model, data);
  diff.kind = TraceKind::time_derivative_of_normal_derivative;
  const double l2 = trace_l2(diff, std::min(p.T, diff.horizon()));
  return {0.5 * l2 * l2 + p.lambda * squared_norm(a), true};
}

std::vector<double> numeric_gradient(const ReconProblem& p, const std::vector<double>& a, double step,
                                     int threads) {
  ensure(step > 0.0, "gradient step must be positive");
  const std::size_t m = a.size();
  std::vector<double> g(m, 0.0);
  std::vector<std::exception_ptr> errors(m);
  auto probe = [&](std::size_t i) {
    try {
      double s = step;
      for (int attempt = 0; attempt <= 5; ++attempt) {
        std::vector<double> plus = a;
        std::vector<double> minus = a;
        plus[i] += s;
        minus[i] -= s;
        const MisfitValue jp = misfit(p, plus);
        const MisfitValue jm = misfit(p, minus);
        if (jp.admissible && jm.admissible) {
          g[i] = (jp.J - jm.J) / (2.0 * s);
          return;
        }
        s *= 0.5;
      }
      throw std::invalid_argument(fmt::format("gradient probe {} stays inadmissible after 5 halvings", i + 1));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int workers = std::min<int>(threads > 0 ? threads : 1, static_cast<int>(m));
  if (workers <= 1) {
    for (std::size_t i = 0; i < m; ++i) probe(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = static_cast<std::size_t>(t); i < m; i += static_cast<std::size_t>(workers)) probe(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return g;
}

ReconResult reconstruct(const ReconProblem& p, const std::vector<double>& a_init, const ReconOptions& opt) {
  validate(p);
  ensure(a_init.size() == p.basis.size(), "initial guess does not match the basis");
  ensure(opt.lower < opt.upper, "empty coefficient box");
  auto project = [&](std::vector<double> v) {
    for (double& x : v) x = std::clamp(x, opt.lower, opt.upper);
    return v;
  };

  ReconResult result;
  std::vector<double> a = project(a_init);
  MisfitValue current = misfit(p, a);
  ensure(current.admissible, "initial guess is inadmissible");
  result.a_hat = a;
  result.J_hat = current.J;
  const double J_start = current.J;

  int stagnant = 0;
  std::vector<double> a_prev, g_prev;
  for (int iter = 0;; ++iter) {
    const std::vector<double> g = numeric_gradient(p, a, opt.gradient_step, opt.threads);
    const double gnorm = std::sqrt(squared_norm(g));
    result.log.push_back({iter, current.J, gnorm, a});
    if (gnorm <= opt.grad_tol || current.J <= opt.misfit_rtol * J_start) {
      result.converged = true;
      break;
    }
    if (iter >= opt.max_iter) break;

    // Barzilai-Borwein trial step from the last accepted move.
    double s = opt.initial_step;
    if (!a_prev.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - a_prev[i];
        ss += da * da;
        sy += da * (g[i] - g_prev[i]);
      }
      if (sy > 0.0 && std::isfinite(ss / sy)) s = ss / sy;
    }
    bool accepted = false;
    std::vector<double> trial;
    MisfitValue trial_value;
    for (int bt = 0; bt < opt.max_backtracks; ++bt, s *= opt.shrink) {
      trial = a;
      for (std::size_t i = 0; i < a.size(); ++i) trial[i] -= s * g[i];
      trial = project(trial);
      double decrease = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) decrease += g[i] * (a[i] - trial[i]);
      if (decrease <= 0.0) continue;
      trial_value = misfit(p, trial);
      if (trial_value.admissible && trial_value.J <= current.J - opt.armijo_c1 * decrease) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.aborted = true;
      result.diagnostic = fmt::format("line search failed at iteration {}", iter);
      break;
    }
    if (!(trial_value.J <= current.J)) {
      throw std::logic_error("accepted step increased the misfit");
    }
    const double rel_decrease = (current.J - trial_value.J) / std::max(current.J, 1e-300);
    stagnant = rel_decrease <= 1e-12 ? stagnant + 1 : 0;
    a_prev = a;
    g_prev = g;
    a = std::move(trial);
    current = trial_value;
    if (current.J < result.J_hat) {
      result.J_hat = current.J;
      result.a_hat = a;
    }
    if (stagnant >= opt.stagnation_window) {
      result.log.push_back({iter + 1, current.J, std::nan(""), a});
      result.aborted = true;
      result.diagnostic = fmt::format("misfit stagnated for {} consecutive iterations", opt.stagnation_window);
      break;
    }
  }
  return result;
}

void write_log_csv(const ReconResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  ensure(static_cast<bool>(out), "cannot open " + path.string());
  const std::size_t m = result.log.empty() ? result.a_hat.size() : result.log.front().a.size();
  out << "iter,J,grad_norm";
  for (std::size_t i = 1; i <= m; ++i) out << ",a" << i;
  out << '\n';
  for (const auto& e : result.log) {
    out << e.iter << ',' << format_real(e.J) << ',' << format_real(e.grad_norm);
    for (double v : e.a) out << ',' << format_real(v);
    out << '\n';
  }
}

}  // namespace wavestab
