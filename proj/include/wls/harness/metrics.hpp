#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "wls/basis/spatial.hpp"
#include "wls/basis/weighting.hpp"
#include "wls/core/integrate.hpp"
#include "wls/core/trajectory.hpp"
#include "wls/types.hpp"

namespace wls {

// Discrete space-time l2 distance sqrt(sum_i dt_i ||a(t_i) - b(t_i)||^2),
// summed over the steps of the common grid. Both trajectories are sampled by
// linear interpolation, so grids only need to cover the common grid's span.
inline double space_time_error(const Trajectory& rom, const Trajectory& ref,
                               const std::vector<double>& grid) {
  if (grid.size() < 2) throw ConfigError("space_time_error: grid needs two or more points");
  double acc = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double dt = grid[i] - grid[i - 1];
    if (dt <= 0) throw ConfigError("space_time_error: grid must increase");
    acc += dt * (rom.interpolate(grid[i]) - ref.interpolate(grid[i])).squaredNorm();
  }
  return std::sqrt(acc);
}

// Same quadrature normalized by the reference magnitude.
inline double space_time_error_normalized(const Trajectory& rom, const Trajectory& ref,
                                          const std::vector<double>& grid) {
  double num = space_time_error(rom, ref, grid);
  double den = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    den += (grid[i] - grid[i - 1]) * ref.interpolate(grid[i]).squaredNorm();
  den = std::sqrt(den);
  if (den == 0.0) throw NumericalError("space_time_error: zero reference trajectory");
  return num / den;
}

// Weighted discrete objective of an arbitrary full-space trajectory:
// sum over steps of (dt/2)||Psi r_lms||^2, with the forward Euler startup
// for multistep stencils, mirroring the sequential integrators.
inline double discrete_objective(const OdeModel& model, const WeightingMatrix& weighting,
                                 const LmsScheme& scheme, const Trajectory& full) {
  full.validate();
  if (full.dim() != model.dim) throw DimensionError("discrete_objective: dim mismatch");
  const LmsScheme startup = LmsScheme::forward_euler();
  double acc = 0.0;
  for (std::size_t i = 1; i < full.grid.size(); ++i) {
    const LmsScheme& sch = (static_cast<int>(i) >= scheme.k) ? scheme : startup;
    std::vector<Vec> hist(sch.k + 1);
    std::vector<double> times(sch.k + 1);
    for (int j = 0; j <= sch.k; ++j) {
      hist[j] = full.states[i - j];
      times[j] = full.grid[i - j];
    }
    const double dt = full.grid[i] - full.grid[i - 1];
    Vec r = lms_residual(sch, model, hist, times, dt);
    acc += 0.5 * dt * weighting.apply_psi(r).squaredNorm();
  }
  return acc;
}

// Reduced trajectory lifted back to the full space.
inline Trajectory reconstruct_trajectory(const SpatialBasis& basis, const Trajectory& reduced) {
  Trajectory full;
  full.grid = reduced.grid;
  full.states.reserve(reduced.states.size());
  for (const Vec& xhat : reduced.states) full.states.push_back(basis.reconstruct(xhat));
  return full;
}

struct MetricsReport {
  double error = 0.0;
  double error_normalized = 0.0;
  double objective = 0.0;
  double wallclock_s = 0.0;
  std::vector<int> window_iterations;
  bool converged = true;
  bool failed = false;
  std::string message;
};

}  // namespace wls
