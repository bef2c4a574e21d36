#pragma once

#include <cmath>

#include "wls/basis/spatial.hpp"
#include "wls/core/trajectory.hpp"
#include "wls/errors.hpp"
#include "wls/linalg/svd.hpp"
#include "wls/types.hpp"

namespace wls {

// Snapshot matrix: columns x^{j*n_skip} - x_ref, j = 0..floor(steps/n_skip).
inline Mat collect_snapshots(const Trajectory& traj, int n_skip, const Vec& x_ref) {
  if (n_skip < 1) throw ConfigError("collect_snapshots: n_skip must be >= 1");
  if (x_ref.size() != traj.dim()) throw DimensionError("collect_snapshots: x_ref size mismatch");
  const int cols = traj.steps() / n_skip + 1;
  Mat S(traj.dim(), cols);
  for (int j = 0; j < cols; ++j) S.col(j) = traj.states[j * n_skip] - x_ref;
  return S;
}

struct PodResult {
  SpatialBasis basis;
  Vec singular_values;
  double energy;  // captured fraction sum_{i<K} s_i^2 / sum s_i^2
};

inline int numerical_rank(const Vec& sigma) {
  if (sigma.size() == 0) return 0;
  const double cut = 1e-12 * sigma(0);
  int r = 0;
  while (r < sigma.size() && sigma(r) > cut) ++r;
  return r;
}

// Left singular vectors of the snapshot matrix, truncated to K.
inline PodResult pod_basis(const Mat& S, int K, const Vec& x_ref) {
  if (x_ref.size() != S.rows()) throw DimensionError("pod_basis: x_ref size mismatch");
  auto svd = thin_svd(S);
  const int rank = numerical_rank(svd.sigma);
  if (K < 1 || K > rank) throw ConfigError("pod_basis: K exceeds snapshot rank");
  PodResult out;
  out.basis.V = svd.U.leftCols(K);
  out.basis.x_ref = x_ref;
  out.singular_values = svd.sigma;
  double total = svd.sigma.squaredNorm();
  out.energy = total > 0 ? svd.sigma.head(K).squaredNorm() / total : 1.0;
  return out;
}

// Smallest K reaching the requested energy fraction.
inline int pod_rank_for_energy(const Vec& sigma, double energy_fraction) {
  double total = sigma.squaredNorm();
  double acc = 0.0;
  for (int k = 0; k < sigma.size(); ++k) {
    acc += sigma(k) * sigma(k);
    if (acc >= energy_fraction * total) return k + 1;
  }
  return static_cast<int>(sigma.size());
}

}  // namespace wls
