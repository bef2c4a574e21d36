#pragma once

#include <cmath>
#include <vector>

#include "wls/errors.hpp"

namespace wls {

// Partition of [0, T] into windows, each carrying its own sub-grid and
// quadrature weights. Sub-grid node i of window n is taus(n)[i]; node 0 is
// the window start and the last node the window end. Weight 0 sits on node 0
// because the window's initial state is data, not an unknown.
class WindowPartition {
 public:
  static WindowPartition uniform(double T, double window_size, double dt) {
    if (T <= 0 || window_size <= 0 || dt <= 0)
      throw ConfigError("WindowPartition: T, window size, dt must be positive");
    check_multiple(window_size, dt, "window size must be an integer multiple of dt");
    std::vector<double> bounds{0.0};
    while (bounds.back() < T - 1e-9 * T) {
      double next = bounds.back() + window_size;
      if (next > T - 1e-9 * T) next = T;
      bounds.push_back(next);
    }
    return from_boundaries(bounds, dt);
  }

  static WindowPartition from_boundaries(const std::vector<double>& bounds, double dt) {
    if (bounds.size() < 2) throw ConfigError("WindowPartition: need at least one window");
    WindowPartition p;
    p.boundaries_ = bounds;
    for (size_t n = 0; n + 1 < bounds.size(); ++n) {
      double span = bounds[n + 1] - bounds[n];
      if (span <= 0) throw ConfigError("WindowPartition: boundaries must increase");
      int steps = static_cast<int>(std::llround(span / dt));
      if (steps < 1 || std::abs(steps * dt - span) > 1e-8 * span)
        throw ConfigError("WindowPartition: window span must be an integer multiple of dt");
      std::vector<double> tau(steps + 1);
      for (int i = 0; i <= steps; ++i) tau[i] = bounds[n] + i * dt;
      tau.back() = bounds[n + 1];
      p.subgrids_.push_back(std::move(tau));
    }
    p.validate();
    return p;
  }

  int num_windows() const { return static_cast<int>(subgrids_.size()); }
  // N_t of window n: number of residual instances (sub-grid nodes minus one).
  int num_instances(int n) const { return static_cast<int>(subgrids_.at(n).size()) - 1; }
  const std::vector<double>& taus(int n) const { return subgrids_.at(n); }
  double start(int n) const { return boundaries_.at(n); }
  double end(int n) const { return boundaries_.at(n + 1); }
  double total_time() const { return boundaries_.back(); }

  double dt(int n, int i) const {
    if (i < 1 || i > num_instances(n)) throw IndexOutOfRange("WindowPartition: dt index");
    return subgrids_[n][i] - subgrids_[n][i - 1];
  }

  // Quadrature weight on instance i of window n.
  double omega(int n, int i) const {
    if (i == 0) return 0.0;
    return dt(n, i);
  }

  // All nodes, window boundaries deduplicated.
  std::vector<double> global_grid() const {
    std::vector<double> g;
    for (int n = 0; n < num_windows(); ++n) {
      size_t first = (n == 0) ? 0 : 1;
      for (size_t i = first; i < subgrids_[n].size(); ++i) g.push_back(subgrids_[n][i]);
    }
    return g;
  }

  void validate() const {
    if (boundaries_.size() != subgrids_.size() + 1)
      throw ConfigError("WindowPartition: boundary/subgrid mismatch");
    for (int n = 0; n < num_windows(); ++n) {
      const auto& tau = subgrids_[n];
      if (tau.front() != boundaries_[n] || tau.back() != boundaries_[n + 1])
        throw ConfigError("WindowPartition: sub-grid must span its window");
      for (size_t i = 1; i < tau.size(); ++i)
        if (tau[i] <= tau[i - 1]) throw ConfigError("WindowPartition: sub-grid must increase");
    }
  }

 private:
  static void check_multiple(double big, double small, const char* msg) {
    double ratio = big / small;
    if (std::abs(ratio - std::llround(ratio)) > 1e-8 * ratio) throw ConfigError(msg);
  }

  std::vector<double> boundaries_;
  std::vector<std::vector<double>> subgrids_;
};

}  // namespace wls
