#pragma once

#include <memory>
#include <vector>

#include "wls/core/lms.hpp"
#include "wls/core/ode_model.hpp"
#include "wls/linalg/block.hpp"
#include "wls/rom/reduced_ops.hpp"
#include "wls/types.hpp"

namespace wls {

// One window of the sequential residual-minimization problem. The unknowns
// are the reduced states at instances 1..N_t; instance 0 and any deeper
// history needed by a multistep scheme arrive as `incoming` (newest first,
// incoming[0] at time taus[0]). When the available history is shorter than
// the scheme order, the earliest instances fall back to forward Euler, which
// matches what the sequential integrators do at the start of time.
struct WlsWindowProblem {
  int window_index = 0;
  std::vector<double> taus;  // tau_0 .. tau_{N_t}
  std::shared_ptr<const OdeModel> model;
  std::shared_ptr<const ReducedOperators> ops;
  LmsScheme scheme = LmsScheme::crank_nicolson();
  std::vector<Vec> incoming;
  std::vector<double> incoming_times;

  int num_instances() const { return static_cast<int>(taus.size()) - 1; }
  int reduced_dim() const { return ops->reduced_dim(); }
  int num_unknowns() const { return num_instances() * reduced_dim(); }
  double dt(int i) const { return taus[i] - taus[i - 1]; }
  // Quadrature weight of instance i; square-rooted with the 1/2 into each block.
  double omega(int i) const { return dt(i); }

  void validate() const {
    if (taus.size() < 2) throw ConfigError("window: needs at least one instance");
    for (std::size_t i = 1; i < taus.size(); ++i)
      if (taus[i] <= taus[i - 1]) throw ConfigError("window: taus must increase");
    if (!model || !ops) throw ConfigError("window: model and operators required");
    if (incoming.empty() || static_cast<int>(incoming.size()) > scheme.k)
      throw ConfigError("window: incoming history must hold 1..k states");
    if (incoming.size() != incoming_times.size())
      throw ConfigError("window: incoming sizes differ");
    if (std::abs(incoming_times[0] - taus[0]) > 1e-12 * (1.0 + std::abs(taus[0])))
      throw ConfigError("window: incoming[0] must sit at tau_0");
    for (const Vec& v : incoming)
      if (v.size() != reduced_dim()) throw DimensionError("window: incoming state size");
  }

  // Scheme actually applied at instance i: the requested one when the full
  // history reaches back far enough, forward Euler otherwise.
  const LmsScheme& scheme_at(int i) const {
    static const LmsScheme startup = LmsScheme::forward_euler();
    const int oldest_avail = -(static_cast<int>(incoming.size()) - 1);
    return (i - scheme.k >= oldest_avail) ? scheme : startup;
  }
};

namespace detail {

// Reduced state at local instance j (j >= 1 from the unknown stack, j <= 0
// from the incoming history).
inline const Vec& window_state(const WlsWindowProblem& p, const std::vector<Vec>& xhat, int j) {
  if (j >= 1) return xhat[j - 1];
  return p.incoming[-j];
}

inline double window_time(const WlsWindowProblem& p, int j) {
  if (j >= 0) return p.taus[j];
  return p.incoming_times[-j];
}

}  // namespace detail

inline std::vector<Vec> split_window_stack(const WlsWindowProblem& p, const Vec& x) {
  const int K = p.reduced_dim();
  if (x.size() != p.num_unknowns()) throw DimensionError("window stack size mismatch");
  std::vector<Vec> out(p.num_instances());
  for (int i = 0; i < p.num_instances(); ++i) out[i] = x.segment(i * K, K);
  return out;
}

inline Vec join_window_stack(const WlsWindowProblem& p, const std::vector<Vec>& states) {
  const int K = p.reduced_dim();
  if (static_cast<int>(states.size()) != p.num_instances())
    throw DimensionError("window states count mismatch");
  Vec x(p.num_unknowns());
  for (int i = 0; i < p.num_instances(); ++i) x.segment(i * K, K) = states[i];
  return x;
}

// Stacked residual: block i (1-based instance) is sqrt(omega_i/2) Psi r_i
// with r_i the discrete time-stepping residual at instance i.
inline Vec wls_window_residual(const WlsWindowProblem& p, const Vec& x) {
  const auto xhat = split_window_stack(p, x);
  const int nt = p.num_instances();
  const int rows = p.ops->weighting.sample_count();
  Vec r(nt * rows);
  for (int i = 1; i <= nt; ++i) {
    const LmsScheme& sch = p.scheme_at(i);
    std::vector<Vec> hist(sch.k + 1);
    std::vector<double> times(sch.k + 1);
    for (int j = 0; j <= sch.k; ++j) {
      hist[j] = p.ops->reconstruct(detail::window_state(p, xhat, i - j));
      times[j] = detail::window_time(p, i - j);
    }
    Vec ri = lms_residual(sch, *p.model, hist, times, p.dt(i));
    r.segment((i - 1) * rows, rows) =
        std::sqrt(p.omega(i) / 2.0) * p.ops->weighting.apply_psi(ri);
  }
  return r;
}

inline double wls_window_objective(const WlsWindowProblem& p, const Vec& x) {
  return wls_window_residual(p, x).squaredNorm();
}

// Block lower-banded Jacobian of the stacked residual with respect to the
// unknown instances. Block (i, l) = sqrt(omega_i/2) Psi (alpha_j/dt_i V -
// beta_j J_f(y_l) V) with j = i - l; history instances (l <= 0) are fixed.
inline BlockLowerBidiagonal wls_window_jacobian(const WlsWindowProblem& p, const Vec& x) {
  const auto xhat = split_window_stack(p, x);
  const int nt = p.num_instances();
  const int rows = p.ops->weighting.sample_count();
  const int K = p.reduced_dim();
  BlockLowerBidiagonal J(nt, rows, K, p.scheme.k);

  // Psi J_f(y_l) V per unknown instance, shared by every row touching l.
  std::vector<Mat> psi_jv(nt + 1);
  auto psi_jv_at = [&](int l) -> const Mat& {
    if (psi_jv[l].size() == 0) {
      Vec y = p.ops->reconstruct(xhat[l - 1]);
      Mat JV = jacobian_times(*p.model, y, p.taus[l], p.ops->basis.V);
      psi_jv[l] = p.ops->weighting.apply_psi(JV);
    }
    return psi_jv[l];
  };

  for (int i = 1; i <= nt; ++i) {
    const LmsScheme& sch = p.scheme_at(i);
    const double w = std::sqrt(p.omega(i) / 2.0);
    const double inv_dt = 1.0 / p.dt(i);
    for (int j = 0; j <= sch.k; ++j) {
      const int l = i - j;
      if (l < 1) continue;  // history column, not an unknown
      Mat block = (w * sch.alpha[j] * inv_dt) * p.ops->PsiV;
      if (sch.beta[j] != 0.0) block.noalias() -= (w * sch.beta[j]) * psi_jv_at(l);
      if (j == 0)
        J.diag(i - 1) = std::move(block);
      else
        J.sub(j, i - 1) = std::move(block);
    }
  }
  return J;
}

}  // namespace wls
