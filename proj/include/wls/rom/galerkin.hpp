#pragma once

#include <memory>

#include "wls/core/integrate.hpp"
#include "wls/core/ode_model.hpp"
#include "wls/rom/reduced_ops.hpp"
#include "wls/types.hpp"

namespace wls {

// Projected dynamics d(xhat)/dt = M^{-1} V^T A f(V xhat + x_ref, t).
inline Vec galerkin_rhs(const ReducedOperators& ops, const OdeModel& model, const Vec& xhat,
                        double t) {
  if (xhat.size() != ops.reduced_dim()) throw DimensionError("galerkin_rhs: size mismatch");
  return ops.solve_M(ops.project_weighted(model.f(ops.reconstruct(xhat), t)));
}

// Reduced Jacobian M^{-1} V^T A (df/dy) V at the reconstructed state.
inline Mat galerkin_jacobian(const ReducedOperators& ops, const OdeModel& model, const Vec& xhat,
                             double t) {
  Vec y = ops.reconstruct(xhat);
  Mat JV = jacobian_times(model, y, t, ops.basis.V);
  return ops.M_llt.solve(ops.PsiV.transpose() * ops.weighting.apply_psi(JV));
}

// The projected system packaged as an ODE model of its own, so the shared
// time integrator drives it.
inline OdeModel make_galerkin_model(std::shared_ptr<const ReducedOperators> ops,
                                    std::shared_ptr<const OdeModel> model) {
  OdeModel m;
  m.dim = ops->reduced_dim();
  m.autonomous = model->autonomous;
  m.velocity = [ops, model](const Vec& xhat, double t) {
    return galerkin_rhs(*ops, *model, xhat, t);
  };
  m.jacobian = [ops, model](const Vec& xhat, double t) {
    return galerkin_jacobian(*ops, *model, xhat, t);
  };
  return m;
}

struct GalerkinResult {
  Trajectory trajectory;  // reduced coordinates; partial on failure
  bool completed = true;
  int failed_step = -1;
  std::string message;
};

inline GalerkinResult run_galerkin(const ReducedOperators& ops, const OdeModel& model,
                                   const LmsScheme& scheme, const std::vector<double>& grid,
                                   const Vec& x0, const NewtonConfig& cfg = {}) {
  auto ops_ptr = std::make_shared<const ReducedOperators>(ops);
  auto model_ptr = std::make_shared<const OdeModel>(model);
  OdeModel reduced = make_galerkin_model(ops_ptr, model_ptr);
  IntegrationOutcome out = integrate_partial(reduced, scheme, grid, ops.project_ic(x0), cfg);
  GalerkinResult res;
  res.trajectory = std::move(out.trajectory);
  res.completed = out.completed;
  res.failed_step = out.failed_step;
  res.message = out.message;
  return res;
}

}  // namespace wls
