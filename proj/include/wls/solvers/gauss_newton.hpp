#pragma once

#include <sstream>
#include <string>

#include "wls/linalg/block.hpp"
#include "wls/linalg/normal.hpp"
#include "wls/types.hpp"

namespace wls {

struct GnConfig {
  double grad_tol = 1e-4;
  double step_tol = 1e-13;  // relative; accepted update below this means stagnation
  int max_iters = 50;
  int max_halvings = 20;
};

struct GnStatus {
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;
  std::string message;
};

inline Vec gn_gradient(const Mat& J, const Vec& r) { return J.transpose() * r; }
inline Vec gn_gradient(const BlockLowerBidiagonal& J, const Vec& r) {
  return J.multiply_transpose(r);
}

// Damped Gauss-Newton on min ||residual(x)||^2: normal-equation step, then
// backtracking that halves the step until the objective stops increasing.
// Convergence is declared on the gradient norm ||J^T r||, or on the accepted
// step shrinking below step_tol relative to the iterate (stagnation: the
// objective cannot improve further in floating point).
template <class ResidualFn, class JacobianFn>
GnStatus gauss_newton(Vec& x, ResidualFn&& residual, JacobianFn&& jacobian,
                      const GnConfig& cfg) {
  GnStatus st;
  Vec r = residual(x);
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    st.iterations = iter;
    st.objective = r.squaredNorm();
    auto J = jacobian(x);
    st.gradient_norm = gn_gradient(J, r).norm();
    if (st.gradient_norm <= cfg.grad_tol) {
      st.converged = true;
      return st;
    }
    Vec step = solve_normal_equations(J, r);

    double alpha = 1.0;
    int halvings = 0;
    Vec x_try, r_try;
    while (true) {
      x_try = x + alpha * step;
      r_try = residual(x_try);
      if (r_try.squaredNorm() <= st.objective) break;
      if (++halvings > cfg.max_halvings) {
        if (cfg.step_tol > 0.0 && alpha * step.norm() <= cfg.step_tol * (1.0 + x.norm())) {
          st.converged = true;
          st.message = "line search floor: remaining step below step_tol";
          return st;
        }
        std::ostringstream os;
        os << "line search exhausted at iteration " << iter << ", gradient "
           << st.gradient_norm;
        st.message = os.str();
        return st;
      }
      alpha *= 0.5;
    }
    const double displacement = (x_try - x).norm();
    x = x_try;
    r = r_try;
    if (cfg.step_tol > 0.0 && displacement <= cfg.step_tol * (1.0 + x.norm())) {
      st.objective = r.squaredNorm();
      st.converged = true;
      st.message = "accepted step stalled below step_tol";
      return st;
    }
  }
  st.objective = r.squaredNorm();
  std::ostringstream os;
  os << "no convergence in " << cfg.max_iters << " iterations, gradient " << st.gradient_norm;
  st.message = os.str();
  return st;
}

}  // namespace wls
