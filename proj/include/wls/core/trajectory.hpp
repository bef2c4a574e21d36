#pragma once

#include <vector>

#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Discrete samples of a state path: states[i] at grid[i].
struct Trajectory {
  std::vector<double> grid;
  std::vector<Vec> states;

  int steps() const { return static_cast<int>(grid.size()) - 1; }
  int dim() const { return states.empty() ? 0 : static_cast<int>(states.front().size()); }

  void validate() const {
    if (grid.size() != states.size())
      throw DimensionError("Trajectory: state count must equal grid length");
    for (size_t i = 1; i < grid.size(); ++i)
      if (grid[i] <= grid[i - 1]) throw DimensionError("Trajectory: grid must increase");
  }

  // Piecewise-linear sample at time t (t within the grid span).
  Vec interpolate(double t) const {
    if (grid.empty()) throw DimensionError("Trajectory: empty");
    const double tol = 1e-12 * (1.0 + std::abs(grid.back()));
    if (t <= grid.front() + tol) {
      if (t < grid.front() - tol) throw IndexOutOfRange("Trajectory: time before start");
      return states.front();
    }
    if (t >= grid.back() - tol) {
      if (t > grid.back() + tol) throw IndexOutOfRange("Trajectory: time past end");
      return states.back();
    }
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    size_t i = static_cast<size_t>(it - grid.begin());
    double w = (t - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return (1.0 - w) * states[i - 1] + w * states[i];
  }

  Mat as_matrix() const {
    Mat M(dim(), states.size());
    for (size_t i = 0; i < states.size(); ++i) M.col(i) = states[i];
    return M;
  }
};

}  // namespace wls
