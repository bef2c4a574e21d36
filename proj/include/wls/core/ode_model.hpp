#pragma once

#include <cmath>
#include <functional>

#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// A first-order ODE system dy/dt = f(y, t). The Jacobian is optional; solvers
// fall back to finite differences when it is absent.
struct OdeModel {
  int dim = 0;
  bool autonomous = false;
  std::function<Vec(const Vec&, double)> velocity;
  std::function<Mat(const Vec&, double)> jacobian;

  bool has_jacobian() const { return static_cast<bool>(jacobian); }

  Vec f(const Vec& y, double t) const {
    if (y.size() != dim) throw DimensionError("OdeModel: state size mismatch");
    Vec v = velocity(y, t);
    if (v.size() != dim) throw DimensionError("OdeModel: velocity size mismatch");
    return v;
  }
};

// dy/dt residual of a candidate (y, ydot) pair: ydot - f(y, t).
inline Vec ode_residual(const OdeModel& model, const Vec& y, const Vec& ydot, double t) {
  if (ydot.size() != model.dim) throw DimensionError("ode_residual: ydot size mismatch");
  return ydot - model.f(y, t);
}

inline double default_jvp_eps(const Vec& y) { return 1e-6 * (1.0 + y.norm()); }

// Forward-difference Jacobian-vector product (df/dy) v.
inline Vec fd_jvp(const OdeModel& model, const Vec& y, double t, const Vec& v, double eps) {
  if (eps <= 0) throw DimensionError("fd_jvp: eps must be positive");
  if (v.size() != model.dim) throw DimensionError("fd_jvp: direction size mismatch");
  Vec out = (model.f(y + eps * v, t) - model.f(y, t)) / eps;
  if (!out.allFinite()) throw NumericalError("fd_jvp: non-finite output");
  return out;
}

// (df/dy) * B for a tall matrix B, using the analytic Jacobian when present.
inline Mat jacobian_times(const OdeModel& model, const Vec& y, double t, const Mat& B) {
  if (model.has_jacobian()) return model.jacobian(y, t) * B;
  Mat out(model.dim, B.cols());
  const double eps = default_jvp_eps(y);
  const Vec f0 = model.f(y, t);
  for (int j = 0; j < B.cols(); ++j) out.col(j) = (model.f(y + eps * B.col(j), t) - f0) / eps;
  if (!out.allFinite()) throw NumericalError("jacobian_times: non-finite output");
  return out;
}

// Dense finite-difference Jacobian; the fallback for implicit solves on
// models without an analytic one.
inline Mat fd_jacobian(const OdeModel& model, const Vec& y, double t) {
  Mat J(model.dim, model.dim);
  const Vec f0 = model.f(y, t);
  for (int j = 0; j < model.dim; ++j) {
    double eps = 1e-7 * (1.0 + std::abs(y(j)));
    Vec yp = y;
    yp(j) += eps;
    J.col(j) = (model.f(yp, t) - f0) / eps;
  }
  return J;
}

inline Mat model_jacobian(const OdeModel& model, const Vec& y, double t) {
  return model.has_jacobian() ? model.jacobian(y, t) : fd_jacobian(model, y, t);
}

}  // namespace wls
