#pragma once

#include <cmath>
#include <vector>

#include "wls/core/trajectory.hpp"
#include "wls/core/window.hpp"
#include "wls/errors.hpp"
#include "wls/linalg/svd.hpp"
#include "wls/types.hpp"

namespace wls {

// Time-dependent trial basis: per window, samples Pi(tau_i) with Pi = 0 at
// the window start so the window's reference state is hit exactly.
// Between samples Pi is piecewise linear; its time derivative is the
// interval slope.
struct SpaceTimeBasis {
  struct Window {
    std::vector<double> taus;
    std::vector<Mat> Pi;  // Pi[i] is N x K_st at taus[i]; Pi[0] == 0
  };
  std::vector<Window> windows;

  int reduced_dim() const {
    return windows.empty() || windows[0].Pi.empty() ? 0
                                                    : static_cast<int>(windows[0].Pi[0].cols());
  }

  const Window& window(int n) const { return windows.at(n); }

  // Piecewise-linear evaluation within window n.
  Mat at(int n, double t) const {
    const Window& w = window(n);
    const double tol = 1e-12 * (1.0 + std::abs(w.taus.back()));
    if (t < w.taus.front() - tol || t > w.taus.back() + tol)
      throw IndexOutOfRange("SpaceTimeBasis: time outside window");
    if (t <= w.taus.front() + tol) return w.Pi.front();
    if (t >= w.taus.back() - tol) return w.Pi.back();
    auto it = std::upper_bound(w.taus.begin(), w.taus.end(), t);
    size_t i = static_cast<size_t>(it - w.taus.begin());
    double frac = (t - w.taus[i - 1]) / (w.taus[i] - w.taus[i - 1]);
    return (1.0 - frac) * w.Pi[i - 1] + frac * w.Pi[i];
  }

  // Slope on the interval left of node i (i >= 1).
  Mat slope(int n, int i) const {
    const Window& w = window(n);
    if (i < 1 || i >= static_cast<int>(w.taus.size()))
      throw IndexOutOfRange("SpaceTimeBasis: slope index");
    return (w.Pi[i] - w.Pi[i - 1]) / (w.taus[i] - w.taus[i - 1]);
  }
};

namespace detail {

inline int locate_time(const std::vector<double>& grid, double t) {
  const double tol = 1e-9 * (1.0 + std::abs(t));
  auto it = std::lower_bound(grid.begin(), grid.end(), t - tol);
  if (it == grid.end() || std::abs(*it - t) > tol)
    throw ConfigError("training trajectory does not contain a window sub-grid node");
  return static_cast<int>(it - grid.begin());
}

}  // namespace detail

// Window-shifted snapshot construction: for each window, POD of the shifted
// states x(tau_i) - x(tau_0), then Pi(tau_i) column j = (mode j) * (temporal
// coefficient of mode j at tau_i). With all-ones coordinates this reproduces
// the shifted training samples exactly at full rank.
inline SpaceTimeBasis build_st_basis(const Trajectory& training, const WindowPartition& partition,
                                     int K_st) {
  if (K_st < 1) throw ConfigError("build_st_basis: K_st must be positive");
  SpaceTimeBasis basis;
  for (int n = 0; n < partition.num_windows(); ++n) {
    const auto& taus = partition.taus(n);
    const int Nt = partition.num_instances(n);
    const int anchor = detail::locate_time(training.grid, taus[0]);
    const Vec& x0 = training.states[anchor];

    Mat S(training.dim(), Nt);
    for (int i = 1; i <= Nt; ++i)
      S.col(i - 1) = training.states[detail::locate_time(training.grid, taus[i])] - x0;
    if (S.norm() <= 1e-14 * (1.0 + x0.norm()))
      throw ConfigError("build_st_basis: window snapshots are degenerate (constant trajectory)");

    auto svd = thin_svd(S);
    int rank = 0;
    while (rank < svd.sigma.size() && svd.sigma(rank) > 1e-12 * svd.sigma(0)) ++rank;
    if (K_st > rank) throw ConfigError("build_st_basis: K_st exceeds window snapshot rank");

    SpaceTimeBasis::Window w;
    w.taus = taus;
    w.Pi.resize(Nt + 1);
    w.Pi[0] = Mat::Zero(training.dim(), K_st);
    for (int i = 1; i <= Nt; ++i) {
      Mat Pi(training.dim(), K_st);
      for (int j = 0; j < K_st; ++j)
        Pi.col(j) = svd.U.col(j) * (svd.sigma(j) * svd.Z(i - 1, j));
      w.Pi[i] = std::move(Pi);
    }
    basis.windows.push_back(std::move(w));
  }
  return basis;
}

}  // namespace wls
