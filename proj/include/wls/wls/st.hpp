#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "wls/basis/st_basis.hpp"
#include "wls/basis/weighting.hpp"
#include "wls/core/lms.hpp"
#include "wls/core/trajectory.hpp"
#include "wls/core/window.hpp"
#include "wls/solvers/gauss_newton.hpp"
#include "wls/types.hpp"

namespace wls {

// One window of the space-time formulation: a single coordinate vector
// parameterizes every instance through the time-dependent basis, and the
// window reference state pins the starting instance exactly (Pi at tau_0 is
// zero by construction).
struct StWindowProblem {
  int window_index = 0;
  std::shared_ptr<const OdeModel> model;
  std::shared_ptr<const SpaceTimeBasis> basis;
  WeightingMatrix weighting = WeightingMatrix::identity(1);
  LmsScheme scheme = LmsScheme::crank_nicolson();
  Vec x_ref;
  // Full-space states before the window for multistep stencils, newest first
  // (history[0] sits one instance before tau_0). Usually empty.
  std::vector<Vec> history;
  std::vector<double> history_times;
  // Quadrature of the indirect variant: sub-grid node indices (>= 1) and
  // weights. Default set by make_default_quadrature.
  std::vector<int> quad_nodes;
  std::vector<double> quad_weights;

  const SpaceTimeBasis::Window& win() const { return basis->window(window_index); }
  const std::vector<double>& taus() const { return win().taus; }
  int num_instances() const { return static_cast<int>(taus().size()) - 1; }
  int coord_dim() const { return basis->reduced_dim(); }
  double dt(int i) const { return taus()[i] - taus()[i - 1]; }
  double omega(int i) const { return dt(i); }

  void make_default_quadrature() {
    quad_nodes.resize(num_instances());
    quad_weights.resize(num_instances());
    for (int i = 1; i <= num_instances(); ++i) {
      quad_nodes[i - 1] = i;
      quad_weights[i - 1] = dt(i);
    }
  }

  void validate() const {
    if (!model || !basis) throw ConfigError("st window: model and basis required");
    if (window_index < 0 || window_index >= static_cast<int>(basis->windows.size()))
      throw IndexOutOfRange("st window: window index out of range");
    if (x_ref.size() != model->dim) throw DimensionError("st window: x_ref size mismatch");
    if (history.size() != history_times.size())
      throw ConfigError("st window: history sizes differ");
  }

  const LmsScheme& scheme_at(int i) const {
    static const LmsScheme startup = LmsScheme::forward_euler();
    const int oldest_avail = -static_cast<int>(history.size());
    return (i - scheme.k >= oldest_avail) ? scheme : startup;
  }

  // Full state at instance j: in-window instances come from the coordinates,
  // negative ones from the fixed history.
  Vec state_at(int j, const Vec& coords) const {
    if (j >= 0) return win().Pi[j] * coords + x_ref;
    return history.at(-j - 1);
  }

  double time_at(int j) const {
    if (j >= 0) return taus()[j];
    return history_times.at(-j - 1);
  }
};

// Stacked discrete residual of the LMS transcription, blocks i = 1..N_t of
// sqrt(omega_i/2) Psi r_i with every instance expressed through the shared
// coordinates.
inline Vec st_direct_residual(const StWindowProblem& p, const Vec& coords) {
  if (coords.size() != p.coord_dim()) throw DimensionError("st residual: coords size");
  const int nt = p.num_instances();
  const int rows = p.weighting.sample_count();
  Vec r(nt * rows);
  for (int i = 1; i <= nt; ++i) {
    const LmsScheme& sch = p.scheme_at(i);
    std::vector<Vec> hist(sch.k + 1);
    std::vector<double> times(sch.k + 1);
    for (int j = 0; j <= sch.k; ++j) {
      hist[j] = p.state_at(i - j, coords);
      times[j] = p.time_at(i - j);
    }
    Vec ri = lms_residual(sch, *p.model, hist, times, p.dt(i));
    r.segment((i - 1) * rows, rows) = std::sqrt(p.omega(i) / 2.0) * p.weighting.apply_psi(ri);
  }
  return r;
}

inline double st_direct_objective(const StWindowProblem& p, const Vec& coords) {
  return st_direct_residual(p, coords).squaredNorm();
}

inline Mat st_direct_jacobian(const StWindowProblem& p, const Vec& coords) {
  const int nt = p.num_instances();
  const int rows = p.weighting.sample_count();
  const int K = p.coord_dim();
  Mat J = Mat::Zero(nt * rows, K);
  for (int i = 1; i <= nt; ++i) {
    const LmsScheme& sch = p.scheme_at(i);
    const double w = std::sqrt(p.omega(i) / 2.0);
    const double inv_dt = 1.0 / p.dt(i);
    Mat block = Mat::Zero(p.model->dim, K);
    for (int j = 0; j <= sch.k; ++j) {
      const int l = i - j;
      if (l <= 0) continue;  // history rows and the pinned start carry no coords
      const Mat& Pi_l = p.win().Pi[l];
      if (sch.alpha[j] != 0.0) block.noalias() += (sch.alpha[j] * inv_dt) * Pi_l;
      if (sch.beta[j] != 0.0) {
        Vec y = p.state_at(l, coords);
        block.noalias() -= sch.beta[j] * jacobian_times(*p.model, y, p.taus()[l], Pi_l);
      }
    }
    J.middleRows((i - 1) * rows, rows) = w * p.weighting.apply_psi(block);
  }
  return J;
}

// Quadrature transcription of the time-continuous residual: at each node the
// basis time derivative is the slope of the incoming interval.
inline Vec st_indirect_residual(const StWindowProblem& p, const Vec& coords) {
  if (coords.size() != p.coord_dim()) throw DimensionError("st residual: coords size");
  if (p.quad_nodes.empty()) throw ConfigError("st indirect: quadrature not set");
  const int rows = p.weighting.sample_count();
  Vec r(static_cast<int>(p.quad_nodes.size()) * rows);
  for (std::size_t q = 0; q < p.quad_nodes.size(); ++q) {
    const int i = p.quad_nodes[q];
    const double t = p.taus()[i];
    const Vec y = p.state_at(i, coords);
    const Vec rdot = p.basis->slope(p.window_index, i) * coords - p.model->f(y, t);
    r.segment(static_cast<int>(q) * rows, rows) =
        std::sqrt(p.quad_weights[q] / 2.0) * p.weighting.apply_psi(rdot);
  }
  return r;
}

inline Mat st_indirect_jacobian(const StWindowProblem& p, const Vec& coords) {
  const int rows = p.weighting.sample_count();
  const int K = p.coord_dim();
  Mat J(static_cast<int>(p.quad_nodes.size()) * rows, K);
  for (std::size_t q = 0; q < p.quad_nodes.size(); ++q) {
    const int i = p.quad_nodes[q];
    const double t = p.taus()[i];
    const Vec y = p.state_at(i, coords);
    Mat block = p.basis->slope(p.window_index, i) -
                jacobian_times(*p.model, y, t, p.win().Pi[i]);
    J.middleRows(static_cast<int>(q) * rows, rows) =
        std::sqrt(p.quad_weights[q] / 2.0) * p.weighting.apply_psi(block);
  }
  return J;
}

// Quadrature evaluation of the stationarity system
//   sum_q zeta_q (Pidot - J_f Pi)^T A (Pidot coords - f) = 0.
inline Vec st_stationarity_residual(const StWindowProblem& p, const Vec& coords) {
  if (p.quad_nodes.empty()) throw ConfigError("st stationarity: quadrature not set");
  Vec g = Vec::Zero(p.coord_dim());
  for (std::size_t q = 0; q < p.quad_nodes.size(); ++q) {
    const int i = p.quad_nodes[q];
    const double t = p.taus()[i];
    const Vec y = p.state_at(i, coords);
    const Mat& Pi_i = p.win().Pi[i];
    Mat B = p.basis->slope(p.window_index, i) - jacobian_times(*p.model, y, t, Pi_i);
    Vec rdot = p.basis->slope(p.window_index, i) * coords - p.model->f(y, t);
    g += p.quad_weights[q] *
         (p.weighting.apply_psi(B).transpose() * p.weighting.apply_psi(rdot));
  }
  return g;
}

struct StSolution {
  Vec coords;
  GnStatus status;
};

inline StSolution solve_st_direct(const StWindowProblem& p, const Vec& guess,
                                  const GnConfig& cfg = {}) {
  p.validate();
  if (p.weighting.sample_count() * p.num_instances() < p.coord_dim())
    throw ConfigError("st direct: too few weighted rows for the coordinate count");
  StSolution sol;
  sol.coords = guess;
  sol.status = gauss_newton(
      sol.coords, [&](const Vec& c) { return st_direct_residual(p, c); },
      [&](const Vec& c) { return st_direct_jacobian(p, c); }, cfg);
  return sol;
}

inline StSolution solve_st_indirect(const StWindowProblem& p, const Vec& guess,
                                    const GnConfig& cfg = {}) {
  p.validate();
  if (p.weighting.sample_count() * static_cast<int>(p.quad_nodes.size()) < p.coord_dim())
    throw ConfigError("st indirect: too few quadrature rows for the coordinate count");
  StSolution sol;
  sol.coords = guess;
  sol.status = gauss_newton(
      sol.coords, [&](const Vec& c) { return st_indirect_residual(p, c); },
      [&](const Vec& c) { return st_indirect_jacobian(p, c); }, cfg);
  return sol;
}

struct StRunResult {
  Trajectory trajectory;  // reconstructed full states over the global grid
  std::vector<Vec> coords;
  std::vector<GnStatus> windows;
  double objective = 0.0;
  bool converged = true;
  bool completed = true;
  int failed_window = -1;
  std::string message;
};

struct StRunConfig {
  LmsScheme scheme = LmsScheme::crank_nicolson();
  WeightingMatrix weighting = WeightingMatrix::identity(1);
  bool indirect = false;
  GnConfig gn;
};

// Sequential space-time solve: the reference state chains across windows so
// reconstructed trajectories are continuous by construction. Initial guess
// per window is the all-ones coordinate vector, which reproduces the basis's
// training deviation exactly at full rank.
inline StRunResult run_wls_st(const OdeModel& model, const WindowPartition& part,
                              const SpaceTimeBasis& st_basis, const Vec& x0,
                              const StRunConfig& cfg = {}) {
  part.validate();
  if (static_cast<int>(st_basis.windows.size()) != part.num_windows())
    throw ConfigError("run_wls_st: basis windows do not match partition");
  for (int n = 0; n < part.num_windows(); ++n) {
    const auto& taus = st_basis.window(n).taus;
    if (std::abs(taus.front() - part.start(n)) > 1e-9 ||
        std::abs(taus.back() - part.end(n)) > 1e-9)
      throw ConfigError("run_wls_st: basis window grid does not match partition");
  }
  if (x0.size() != model.dim) throw DimensionError("run_wls_st: x0 size mismatch");

  auto model_ptr = std::make_shared<const OdeModel>(model);
  auto basis_ptr = std::make_shared<const SpaceTimeBasis>(st_basis);

  StRunResult res;
  res.trajectory.grid.push_back(part.start(0));
  res.trajectory.states.push_back(x0);

  for (int n = 0; n < part.num_windows(); ++n) {
    StWindowProblem p;
    p.window_index = n;
    p.model = model_ptr;
    p.basis = basis_ptr;
    p.weighting = cfg.weighting;
    p.scheme = cfg.scheme;
    p.x_ref = res.trajectory.states.back();
    const int len = static_cast<int>(res.trajectory.states.size());
    const int deeper = std::min(cfg.scheme.k - 1, len - 1);
    for (int m = 1; m <= deeper; ++m) {
      p.history.push_back(res.trajectory.states[len - 1 - m]);
      p.history_times.push_back(res.trajectory.grid[len - 1 - m]);
    }
    p.make_default_quadrature();

    try {
      Vec guess = Vec::Ones(p.coord_dim());
      StSolution sol = cfg.indirect ? solve_st_indirect(p, guess, cfg.gn)
                                    : solve_st_direct(p, guess, cfg.gn);
      res.coords.push_back(sol.coords);
      res.windows.push_back(sol.status);
      res.objective += sol.status.objective;
      if (!sol.status.converged) res.converged = false;
      for (int i = 1; i <= p.num_instances(); ++i) {
        res.trajectory.grid.push_back(p.taus()[i]);
        res.trajectory.states.push_back(p.state_at(i, sol.coords));
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
