#pragma once

#include <Eigen/LU>
#include <cmath>
#include <sstream>
#include <vector>

#include "wls/core/lms.hpp"
#include "wls/core/ode_model.hpp"
#include "wls/core/trajectory.hpp"
#include "wls/errors.hpp"

namespace wls {

struct NewtonConfig {
  double tol = -1.0;  // negative: use 1e-10 * sqrt(dim)
  int max_iters = 25;

  double resolved_tol(int dim) const { return tol > 0 ? tol : 1e-10 * std::sqrt(double(dim)); }
};

struct IntegrationOutcome {
  Trajectory trajectory;  // partial on failure, up to the last good step
  bool completed = true;
  int failed_step = -1;
  double failure_residual = 0.0;
  std::string message;
};

namespace detail {

// One implicit LMS step: Newton on the step residual, unknown y^i.
inline bool implicit_step(const LmsScheme& scheme, const OdeModel& model,
                          std::vector<Vec>& history, std::vector<double>& times, double dt,
                          const NewtonConfig& cfg, double& rnorm_out) {
  const double tol = cfg.resolved_tol(model.dim);
  Vec y = history[0];  // warm start from the previous state already placed there
  for (int it = 0; it < cfg.max_iters; ++it) {
    history[0] = y;
    Vec r = lms_residual(scheme, model, history, times, dt);
    rnorm_out = r.norm();
    if (!std::isfinite(rnorm_out)) return false;
    if (rnorm_out <= tol) return true;
    Mat Jr = (scheme.alpha[0] / dt) * Mat::Identity(model.dim, model.dim) -
             scheme.beta[0] * model_jacobian(model, y, times[0]);
    Eigen::PartialPivLU<Mat> lu(Jr);
    Vec dy = lu.solve(-r);
    if (!dy.allFinite()) return false;
    y += dy;
  }
  history[0] = y;
  Vec r = lms_residual(scheme, model, history, times, dt);
  rnorm_out = r.norm();
  return std::isfinite(rnorm_out) && rnorm_out <= tol;
}

// One explicit LMS step (beta[0] == 0): direct update.
inline bool explicit_step(const LmsScheme& scheme, const OdeModel& model,
                          std::vector<Vec>& history, std::vector<double>& times, double dt,
                          double& rnorm_out) {
  Vec rhs = Vec::Zero(model.dim);
  for (int j = 1; j <= scheme.k; ++j) {
    if (scheme.alpha[j] != 0.0) rhs -= (scheme.alpha[j] / dt) * history[j];
    if (scheme.beta[j] != 0.0) rhs += scheme.beta[j] * model.f(history[j], times[j]);
  }
  history[0] = (dt / scheme.alpha[0]) * rhs;
  rnorm_out = 0.0;
  return history[0].allFinite();
}

}  // namespace detail

// March the model over `grid` from x0. For multistep schemes the first
// step(s) without enough history are taken with forward Euler. Returns a
// partial trajectory on failure instead of throwing; see integrate_fom for
// the throwing wrapper.
inline IntegrationOutcome integrate_partial(const OdeModel& model, const LmsScheme& scheme,
                                            const std::vector<double>& grid, const Vec& x0,
                                            const NewtonConfig& cfg = {}) {
  if (grid.size() < 1) throw ConfigError("integrate: empty grid");
  for (size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw ConfigError("integrate: grid must increase");
  if (x0.size() != model.dim) throw DimensionError("integrate: x0 size mismatch");

  IntegrationOutcome out;
  out.trajectory.grid.push_back(grid[0]);
  out.trajectory.states.push_back(x0);

  const LmsScheme startup = LmsScheme::forward_euler();
  for (size_t i = 1; i < grid.size(); ++i) {
    const double dt = grid[i] - grid[i - 1];
    const LmsScheme& step_scheme =
        (static_cast<int>(i) >= scheme.k) ? scheme : startup;  // bootstrap multistep
    const int k = step_scheme.k;

    std::vector<Vec> history(k + 1);
    std::vector<double> times(k + 1);
    history[0] = out.trajectory.states.back();  // warm start
    times[0] = grid[i];
    for (int j = 1; j <= k; ++j) {
      history[j] = out.trajectory.states[i - j];
      times[j] = grid[i - j];
    }

    double rnorm = 0.0;
    bool ok;
    try {
      ok = step_scheme.implicit
               ? detail::implicit_step(step_scheme, model, history, times, dt, cfg, rnorm)
               : detail::explicit_step(step_scheme, model, history, times, dt, rnorm);
    } catch (const Error& e) {
      out.completed = false;
      out.failed_step = static_cast<int>(i);
      out.failure_residual = rnorm;
      out.message = e.what();
      return out;
    }
    if (!ok) {
      out.completed = false;
      out.failed_step = static_cast<int>(i);
      out.failure_residual = rnorm;
      std::ostringstream os;
      os << "step " << i << " did not converge, residual " << rnorm;
      out.message = os.str();
      return out;
    }
    out.trajectory.grid.push_back(grid[i]);
    out.trajectory.states.push_back(history[0]);
  }
  return out;
}

inline Trajectory integrate_fom(const OdeModel& model, const LmsScheme& scheme,
                                const std::vector<double>& grid, const Vec& x0,
                                const NewtonConfig& cfg = {}) {
  IntegrationOutcome out = integrate_partial(model, scheme, grid, x0, cfg);
  if (!out.completed) throw StepFailure(out.failed_step, out.failure_residual, out.message);
  return out.trajectory;
}

inline std::vector<double> uniform_grid(double t0, double t1, int steps) {
  std::vector<double> g(steps + 1);
  for (int i = 0; i <= steps; ++i) g[i] = t0 + (t1 - t0) * double(i) / steps;
  return g;
}

}  // namespace wls
