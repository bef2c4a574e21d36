#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

struct PivotedQr {
  std::vector<int> pivots;  // full column permutation, greedy order
  Mat R;                    // m x n, upper triangular in permuted order
};

// Householder QR with classical greedy column pivoting: every step picks the
// remaining column with the largest trailing norm. Norms are recomputed each
// step rather than downdated, so the pivot order matches a brute-force greedy
// selection exactly even after heavy cancellation. Intended for the small
// row-selection problems this library produces, not as a general QR.
inline PivotedQr pivoted_qr(const Mat& M) {
  if (!M.allFinite()) throw NumericalError("pivoted_qr: non-finite input");
  const int m = static_cast<int>(M.rows());
  const int n = static_cast<int>(M.cols());
  const int steps = std::min(m, n);

  Mat R = M;
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);

  for (int k = 0; k < steps; ++k) {
    int best = k;
    double best_norm = R.col(k).tail(m - k).norm();
    for (int j = k + 1; j < n; ++j) {
      double nj = R.col(j).tail(m - k).norm();
      if (nj > best_norm) {
        best_norm = nj;
        best = j;
      }
    }
    if (best != k) {
      R.col(k).swap(R.col(best));
      std::swap(perm[k], perm[best]);
    }
    if (best_norm == 0.0) continue;  // trailing block is zero; order is by index

    // Householder reflector for column k.
    Vec x = R.col(k).tail(m - k);
    double alpha = (x(0) >= 0 ? -1.0 : 1.0) * x.norm();
    Vec v = x;
    v(0) -= alpha;
    double vtv = v.squaredNorm();
    if (vtv > 0) {
      for (int j = k; j < n; ++j) {
        double c = 2.0 * v.dot(R.col(j).tail(m - k)) / vtv;
        R.col(j).tail(m - k) -= c * v;
      }
    }
    R.col(k).tail(m - k).setZero();
    R(k, k) = alpha;
  }

  return {perm, R};
}

}  // namespace wls
