#pragma once

#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "wls/core/integrate.hpp"
#include "wls/core/trajectory.hpp"
#include "wls/core/window.hpp"
#include "wls/rom/galerkin.hpp"
#include "wls/wls/direct.hpp"
#include "wls/wls/window_problem.hpp"

namespace wls {

struct FbsmConfig {
  double eps = 1e-6;        // trapezoidal state-change tolerance between accepted sweeps
  double rho0 = 0.5;        // initial costate mixing fraction
  double psi1 = 1.1;        // mixing growth on accepted sweeps
  double psi2 = 2.0;        // mixing shrink on rejected sweeps
  double rho_floor = 1e-14; // below this the blend is a numerical no-op: control stationary
  int max_sweeps = 500;
  NewtonConfig newton;      // inner nonlinear solver for implicit steps
};

namespace detail {

// Trapezoid weights over the window nodes tau_0..tau_{N_t}.
inline std::vector<double> trapezoid_weights(const std::vector<double>& taus) {
  const int nt = static_cast<int>(taus.size()) - 1;
  std::vector<double> w(nt + 1, 0.0);
  for (int i = 1; i <= nt; ++i) {
    const double dt = taus[i] - taus[i - 1];
    w[i - 1] += 0.5 * dt;
    w[i] += 0.5 * dt;
  }
  return w;
}

}  // namespace detail

// Controlled reduced dynamics: the projected velocity plus a costate-valued
// control acting directly on the reduced time derivative.
inline Vec controlled_rhs(const ReducedOperators& ops, const OdeModel& model, const Vec& xhat,
                          double t, const Vec& u_t) {
  return galerkin_rhs(ops, model, xhat, t) + u_t;
}

// Forward solve of the two-point boundary value problem: march the
// controlled dynamics across the window from the incoming state.
inline Trajectory fbsm_forward(const WlsWindowProblem& p, const Trajectory& control,
                               const NewtonConfig& cfg = {}) {
  auto ops = p.ops;
  auto model = p.model;
  OdeModel m;
  m.dim = p.reduced_dim();
  m.autonomous = false;
  m.velocity = [ops, model, &control](const Vec& xhat, double t) {
    return controlled_rhs(*ops, *model, xhat, t, control.interpolate(t));
  };
  m.jacobian = [ops, model](const Vec& xhat, double t) {
    return galerkin_jacobian(*ops, *model, xhat, t);
  };
  return integrate_fom(m, p.scheme, p.taus, p.incoming[0], cfg);
}

// Right-hand side of the costate equation at time t given the forward state
// and control there:
//   M dlam/dt = -V^T J^T A (V lam + q),
//   q = (I - V M^{-1} V^T A)(V xdot - f),  xdot = M^{-1} V^T A f + u.
inline Vec adjoint_rhs(const ReducedOperators& ops, const OdeModel& model, const Vec& lam,
                       const Vec& xhat, const Vec& u_t, double t) {
  const Vec y = ops.reconstruct(xhat);
  const Vec f = model.f(y, t);
  const Vec xdot = ops.solve_M(ops.project_weighted(f)) + u_t;
  const Vec resid = ops.basis.V * xdot - f;
  const Vec q = resid - ops.basis.V * ops.solve_M(ops.project_weighted(resid));
  const Mat P = jacobian_times(model, y, t, ops.basis.V);
  const Mat psi_p = ops.weighting.apply_psi(P);
  return -ops.solve_M(psi_p.transpose() *
                      ops.weighting.apply_psi(Vec(ops.basis.V * lam + q)));
}

// Backward solve: integrate the costate equation from a zero terminal value
// at the window end down to the window start. Returned nodes are in forward
// time order; the final node is exactly zero by construction.
inline Trajectory fbsm_backward(const WlsWindowProblem& p, const Trajectory& states,
                                const Trajectory& control, const NewtonConfig& cfg = {}) {
  const int nt = p.num_instances();
  const double t_end = p.taus[nt];
  std::vector<double> sgrid(nt + 1);
  for (int i = 0; i <= nt; ++i) sgrid[i] = t_end - p.taus[nt - i];

  auto ops = p.ops;
  auto model = p.model;
  OdeModel rev;
  rev.dim = p.reduced_dim();
  rev.autonomous = false;
  rev.velocity = [ops, model, &states, &control, t_end](const Vec& mu, double s) -> Vec {
    const double t = t_end - s;
    return -adjoint_rhs(*ops, *model, mu, states.interpolate(t), control.interpolate(t), t);
  };
  rev.jacobian = [ops, model, &states, t_end](const Vec& mu, double s) -> Mat {
    (void)mu;
    const double t = t_end - s;
    const Vec y = ops->reconstruct(states.interpolate(t));
    const Mat P = jacobian_times(*model, y, t, ops->basis.V);
    return ops->M_llt.solve(ops->weighting.apply_psi(P).transpose() * ops->PsiV);
  };

  Trajectory mu = integrate_fom(rev, p.scheme, sgrid, Vec::Zero(p.reduced_dim()), cfg);

  Trajectory lam;
  lam.grid = p.taus;
  lam.states.resize(nt + 1);
  for (int i = 0; i <= nt; ++i) lam.states[i] = mu.states[nt - i];
  return lam;
}

// Trapezoidal quadrature of the instantaneous half squared weighted velocity
// mismatch along a controlled trajectory.
inline double fbsm_objective(const WlsWindowProblem& p, const Trajectory& states,
                             const Trajectory& control) {
  const auto w = detail::trapezoid_weights(p.taus);
  double J = 0.0;
  for (std::size_t i = 0; i < p.taus.size(); ++i) {
    const double t = p.taus[i];
    const Vec y = p.ops->reconstruct(states.states[i]);
    const Vec f = p.model->f(y, t);
    const Vec xdot = controlled_rhs(*p.ops, *p.model, states.states[i], t, control.states[i]);
    J += w[i] * 0.5 * p.ops->weighting.apply_psi(Vec(p.ops->basis.V * xdot - f)).squaredNorm();
  }
  return J;
}

// Gradient of the control-parameterized objective with respect to the nodal
// control: M (u - lam) at each node, lam being the costate of the current
// forward solution. Used by gradient verification.
inline Vec control_gradient(const ReducedOperators& ops, const Vec& u_node, const Vec& lam_node) {
  return ops.M * (u_node - lam_node);
}

// Hamiltonian in the M-weighted control variable uhat = M u:
//   H = lam_oc^T (M^{-1} V^T A f + M^{-1} uhat) + L.
inline double hamiltonian_value(const ReducedOperators& ops, const OdeModel& model,
                                const Vec& xhat, const Vec& uhat, const Vec& lam_oc, double t) {
  const Vec y = ops.reconstruct(xhat);
  const Vec f = model.f(y, t);
  const Vec xdot = ops.solve_M(ops.project_weighted(f)) + ops.solve_M(uhat);
  const double L = 0.5 * ops.weighting.apply_psi(Vec(ops.basis.V * xdot - f)).squaredNorm();
  return lam_oc.dot(xdot) + L;
}

// Stationarity of the Hamiltonian in uhat: dH/duhat = M^{-1}(lam_oc + uhat).
inline Vec pmp_control_gradient(const ReducedOperators& ops, const Vec& uhat, const Vec& lam_oc) {
  return ops.solve_M(lam_oc + uhat);
}

struct FbsmResult {
  Trajectory states;   // accepted reduced states at the window nodes
  Trajectory costate;  // costate from the final backward solve
  Trajectory control;  // final nodal control
  bool converged = false;
  int sweeps = 0;
  double objective = 0.0;    // trapezoidal objective of the accepted states
  double state_delta = 0.0;  // last integral state change between accepted iterates
  std::string message;
};

// Forward-backward sweeps with relaxed costate updates. Each sweep solves
// the costate backward along the accepted pair, then backtracks on the
// mixing fraction: blend the costate into the accepted control, re-solve
// forward, and accept only if the trapezoidal objective does not increase.
// A rejection shrinks the fraction and retries from the same accepted
// control, so the attempts approach the accepted iterate; a fraction driven
// below rho_floor means even a vanishing blend raises the objective, and the
// iterate is returned as stationary. Convergence compares consecutive
// accepted trajectories.
inline FbsmResult solve_window_fbsm(const WlsWindowProblem& p, const FbsmConfig& cfg = {}) {
  p.validate();
  if (cfg.max_sweeps < 1) throw ConfigError("fbsm: max_sweeps must be positive");
  const int nt = p.num_instances();
  const auto w = detail::trapezoid_weights(p.taus);

  FbsmResult res;
  res.control.grid = p.taus;
  res.control.states.assign(nt + 1, Vec::Zero(p.reduced_dim()));

  res.states = fbsm_forward(p, res.control, cfg.newton);
  res.objective = fbsm_objective(p, res.states, res.control);

  double rho = cfg.rho0;
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    res.sweeps = sweep;
    res.costate = fbsm_backward(p, res.states, res.control, cfg.newton);

    Trajectory blend;
    blend.grid = p.taus;
    blend.states.resize(nt + 1);
    double rho_try = rho;
    while (true) {
      for (int i = 0; i <= nt; ++i)
        blend.states[i] =
            (1.0 - rho_try) * res.control.states[i] + rho_try * res.costate.states[i];

      bool solved = true;
      Trajectory trial;
      try {
        trial = fbsm_forward(p, blend, cfg.newton);
      } catch (const Error&) {
        solved = false;
      }
      if (solved) {
        const double J_trial = fbsm_objective(p, trial, blend);
        if (J_trial <= res.objective) {
          double delta = 0.0;
          for (int i = 0; i <= nt; ++i)
            delta += w[i] * (trial.states[i] - res.states.states[i]).norm();
          res.state_delta = delta;
          res.states = std::move(trial);
          res.control = std::move(blend);
          res.objective = J_trial;
          rho = std::min(rho_try * cfg.psi1, 1.0);
          if (delta <= cfg.eps) {
            res.converged = true;
            return res;
          }
          break;
        }
      }
      rho_try /= cfg.psi2;
      if (rho_try < cfg.rho_floor) {
        if (!solved) {
          std::ostringstream os;
          os << "fbsm: forward solve kept failing through sweep " << sweep;
          res.message = os.str();
          return res;
        }
        // even a vanishing blend raises the objective: iterate is stationary
        res.converged = true;
        res.message = "fbsm: mixing fraction collapsed, iterate stationary";
        return res;
      }
    }
  }
  std::ostringstream os;
  os << "fbsm: no convergence in " << cfg.max_sweeps << " sweeps, last accepted change "
     << res.state_delta;
  res.message = os.str();
  return res;
}

// Sequential indirect solve over the partition. Window records reuse the
// Gauss-Newton status container: iterations = sweeps, gradient_norm = final
// integral state change, objective = the discrete window objective of the
// swept states (comparable with the direct solver's objective).
inline WlsRunResult run_wls_indirect(const ReducedOperators& ops, const OdeModel& model,
                                     const LmsScheme& scheme, const WindowPartition& part,
                                     const Vec& x0, const FbsmConfig& cfg = {}) {
  part.validate();
  auto ops_ptr = std::make_shared<const ReducedOperators>(ops);
  auto model_ptr = std::make_shared<const OdeModel>(model);

  WlsRunResult res;
  res.trajectory.grid.push_back(part.start(0));
  res.trajectory.states.push_back(ops.project_ic(x0));

  for (int n = 0; n < part.num_windows(); ++n) {
    WlsWindowProblem p = make_window_problem(ops_ptr, model_ptr, scheme, part, n, res.trajectory);
    try {
      FbsmResult sol = solve_window_fbsm(p, cfg);
      std::vector<Vec> interior(sol.states.states.begin() + 1, sol.states.states.end());
      GnStatus st;
      st.converged = sol.converged;
      st.iterations = sol.sweeps;
      st.gradient_norm = sol.state_delta;
      st.objective = wls_window_objective(p, join_window_stack(p, interior));
      st.message = sol.message;
      res.windows.push_back(st);
      res.objective += st.objective;
      if (!st.converged) res.converged = false;
      for (int i = 1; i <= p.num_instances(); ++i) {
        res.trajectory.grid.push_back(p.taus[i]);
        res.trajectory.states.push_back(std::move(sol.states.states[i]));
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
