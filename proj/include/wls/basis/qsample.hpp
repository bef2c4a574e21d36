#pragma once

#include <set>
#include <vector>

#include "wls/basis/weighting.hpp"
#include "wls/errors.hpp"
#include "wls/linalg/qr.hpp"
#include "wls/linalg/svd.hpp"
#include "wls/types.hpp"

namespace wls {

// Greedy row sampling: thin-SVD the snapshots, column-pivot the transposed
// left factor, keep the first n_s pivot rows, then widen the selection so
// every unknown of a touched mesh cell is sampled.
inline WeightingMatrix qsample(const Mat& velocity_snapshots, int n_s, int dofs_per_cell) {
  const int N = static_cast<int>(velocity_snapshots.rows());
  if (n_s < 1 || n_s > N) throw ConfigError("qsample: n_s out of range");
  if (dofs_per_cell < 1 || N % dofs_per_cell != 0)
    throw ConfigError("qsample: dofs_per_cell must divide the state dimension");

  auto svd = thin_svd(velocity_snapshots);
  auto qr = pivoted_qr(Mat(svd.U.transpose()));

  std::set<int> cells;
  for (int k = 0; k < n_s; ++k) cells.insert(qr.pivots[k] / dofs_per_cell);

  std::vector<int> rows;
  rows.reserve(cells.size() * dofs_per_cell);
  for (int cell : cells)
    for (int d = 0; d < dofs_per_cell; ++d) rows.push_back(cell * dofs_per_cell + d);
  return WeightingMatrix::row_sampling(N, rows);
}

}  // namespace wls
