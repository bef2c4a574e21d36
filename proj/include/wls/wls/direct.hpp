#pragma once

#include <memory>
#include <vector>

#include "wls/core/trajectory.hpp"
#include "wls/core/window.hpp"
#include "wls/solvers/gauss_newton.hpp"
#include "wls/wls/window_problem.hpp"

namespace wls {

struct WindowSolution {
  std::vector<Vec> states;  // reduced states at instances 1..N_t
  GnStatus status;
};

// Minimize the stacked window residual over all instances at once. The
// default guess replicates the window's starting state.
inline WindowSolution solve_window_direct(const WlsWindowProblem& p, const GnConfig& cfg = {},
                                          const Vec* guess = nullptr) {
  p.validate();
  Vec x;
  if (guess) {
    if (guess->size() != p.num_unknowns()) throw DimensionError("window guess size mismatch");
    x = *guess;
  } else {
    x.resize(p.num_unknowns());
    for (int i = 0; i < p.num_instances(); ++i)
      x.segment(i * p.reduced_dim(), p.reduced_dim()) = p.incoming[0];
  }
  WindowSolution sol;
  sol.status = gauss_newton(
      x, [&](const Vec& v) { return wls_window_residual(p, v); },
      [&](const Vec& v) { return wls_window_jacobian(p, v); }, cfg);
  sol.states = split_window_stack(p, x);
  return sol;
}

struct WlsRunResult {
  Trajectory trajectory;  // reduced coordinates over the global grid
  std::vector<GnStatus> windows;
  double objective = 0.0;  // summed final window objectives
  bool converged = true;   // every window solve met its tolerance
  bool completed = true;   // no window aborted with an error
  int failed_window = -1;
  std::string message;
};

// Assemble the problem for window n of the partition, pulling up to k states
// of history from the already-computed global trajectory.
inline WlsWindowProblem make_window_problem(std::shared_ptr<const ReducedOperators> ops,
                                            std::shared_ptr<const OdeModel> model,
                                            const LmsScheme& scheme, const WindowPartition& part,
                                            int n, const Trajectory& past) {
  WlsWindowProblem p;
  p.window_index = n;
  p.taus = part.taus(n);
  p.model = std::move(model);
  p.ops = std::move(ops);
  p.scheme = scheme;
  const int len = static_cast<int>(past.states.size());
  const int m_avail = std::min(scheme.k, len);
  p.incoming.resize(m_avail);
  p.incoming_times.resize(m_avail);
  for (int m = 0; m < m_avail; ++m) {
    p.incoming[m] = past.states[len - 1 - m];
    p.incoming_times[m] = past.grid[len - 1 - m];
  }
  return p;
}

// Sequential window-by-window minimization over the whole partition.
// Non-convergence of a window is recorded but the march continues with the
// best iterate; thrown errors abort with a partial trajectory.
inline WlsRunResult run_wls_direct(const ReducedOperators& ops, const OdeModel& model,
                                   const LmsScheme& scheme, const WindowPartition& part,
                                   const Vec& x0, const GnConfig& cfg = {}) {
  part.validate();
  auto ops_ptr = std::make_shared<const ReducedOperators>(ops);
  auto model_ptr = std::make_shared<const OdeModel>(model);

  WlsRunResult res;
  res.trajectory.grid.push_back(part.start(0));
  res.trajectory.states.push_back(ops.project_ic(x0));

  for (int n = 0; n < part.num_windows(); ++n) {
    WlsWindowProblem p = make_window_problem(ops_ptr, model_ptr, scheme, part, n, res.trajectory);
    try {
      WindowSolution sol = solve_window_direct(p, cfg);
      res.windows.push_back(sol.status);
      res.objective += sol.status.objective;
      if (!sol.status.converged) res.converged = false;
      for (int i = 1; i <= p.num_instances(); ++i) {
        res.trajectory.grid.push_back(p.taus[i]);
        res.trajectory.states.push_back(std::move(sol.states[i - 1]));
      }
    } catch (const Error& e) {
      res.completed = false;
      res.converged = false;
      res.failed_window = n;
      res.message = e.what();
      return res;
    }
  }
  return res;
}

}  // namespace wls
