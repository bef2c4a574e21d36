#pragma once

#include <vector>

#include "wls/core/lms.hpp"
#include "wls/core/trajectory.hpp"
#include "wls/rom/reduced_ops.hpp"
#include "wls/solvers/gauss_newton.hpp"
#include "wls/types.hpp"

namespace wls {

// One step of the discrete residual-minimizing ROM: find xhat^n minimizing
// || Psi r_lms(V xhat^n + x_ref; history) ||^2 over the reduced coordinate.
//
// `reduced_history` is newest-first and holds the k previous reduced states;
// for a k-step scheme with insufficient history the caller substitutes a
// one-step startup scheme.
struct LspgStepResult {
  Vec xhat;
  GnStatus status;
};

inline LspgStepResult lspg_step(const ReducedOperators& ops, const OdeModel& model,
                                const LmsScheme& scheme,
                                const std::vector<Vec>& reduced_history,
                                const std::vector<double>& times, double dt, const Vec& guess,
                                const GnConfig& cfg = {}) {
  const int k = scheme.k;
  if (static_cast<int>(reduced_history.size()) != k)
    throw DimensionError("lspg_step: history length != scheme order");
  if (static_cast<int>(times.size()) != k + 1)
    throw DimensionError("lspg_step: times length != k+1");

  // Reconstructed history is fixed during the solve.
  std::vector<Vec> full_history(k + 1);
  for (int j = 0; j < k; ++j) full_history[j + 1] = ops.reconstruct(reduced_history[j]);

  auto residual = [&](const Vec& xhat) {
    full_history[0] = ops.reconstruct(xhat);
    return ops.weighting.apply_psi(lms_residual(scheme, model, full_history, times, dt));
  };
  auto jacobian = [&](const Vec& xhat) {
    Vec y = ops.reconstruct(xhat);
    Mat JV = jacobian_times(model, y, times[0], ops.basis.V);
    Mat J = (scheme.alpha[0] / dt) * ops.basis.V - scheme.beta[0] * JV;
    return ops.weighting.apply_psi(J);
  };

  LspgStepResult out;
  out.xhat = guess;
  out.status = gauss_newton(out.xhat, residual, jacobian, cfg);
  return out;
}

struct LspgResult {
  Trajectory trajectory;  // reduced coordinates; partial on failure
  bool completed = true;
  int failed_step = -1;
  std::string message;
};

// Sequential residual-minimizing ROM over a grid. Multistep schemes fall back
// to forward Euler for the startup steps where history is unavailable.
inline LspgResult run_lspg(const ReducedOperators& ops, const OdeModel& model,
                           const LmsScheme& scheme, const std::vector<double>& grid, const Vec& x0,
                           const GnConfig& cfg = {}) {
  if (grid.size() < 2) throw ConfigError("run_lspg: grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw ConfigError("run_lspg: grid must increase");
  LspgResult res;
  res.trajectory.grid.push_back(grid[0]);
  res.trajectory.states.push_back(ops.project_ic(x0));

  const LmsScheme startup = LmsScheme::forward_euler();
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double dt = grid[i] - grid[i - 1];
    const bool enough = static_cast<int>(i) >= scheme.k;
    const LmsScheme& sch = enough ? scheme : startup;
    std::vector<Vec> hist(sch.k);
    std::vector<double> times(sch.k + 1);
    times[0] = grid[i];
    for (int j = 0; j < sch.k; ++j) {
      hist[j] = res.trajectory.states[i - 1 - j];
      times[j + 1] = grid[i - 1 - j];
    }
    try {
      auto step = lspg_step(ops, model, sch, hist, times, dt, res.trajectory.states.back(), cfg);
      if (!step.status.converged) {
        res.completed = false;
        res.failed_step = static_cast<int>(i);
        res.message = "lspg step did not converge: " + step.status.message;
        return res;
      }
      res.trajectory.grid.push_back(grid[i]);
      res.trajectory.states.push_back(std::move(step.xhat));
    } catch (const Error& e) {
      res.completed = false;
      res.failed_step = static_cast<int>(i);
      res.message = e.what();
      return res;
    }
  }
  return res;
}

}  // namespace wls
