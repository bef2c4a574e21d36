#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <vector>

#include "wls/errors.hpp"
#include "wls/linalg/block.hpp"
#include "wls/types.hpp"

namespace wls {

// Gauss-Newton inner solve: step d minimizing ||J d + r||_2 via the normal
// equations J^T J d = -J^T r, Cholesky factored. One step of iterative
// refinement keeps the gradient residual well below the 1e-8 contract even
// for moderately conditioned systems.
inline Vec solve_normal_equations(const Mat& J, const Vec& r) {
  if (J.rows() != r.size()) throw DimensionError("solve_normal_equations: J/r mismatch");
  const Mat JtJ = J.transpose() * J;
  const Vec g = J.transpose() * r;
  Eigen::LLT<Mat> llt(JtJ);
  if (llt.info() != Eigen::Success)
    throw SingularSystem("solve_normal_equations: normal matrix not positive definite");
  Vec d = llt.solve(-g);
  d -= llt.solve(J.transpose() * (J * d) + g);
  return d;
}

// Same contract for the block-banded Jacobians produced by window residuals.
// J^T J inherits a block band of width n_bands; it is assembled sparsely and
// factored with a sparse Cholesky, so cost stays linear in the block count.
inline Vec solve_normal_equations(const BlockLowerBidiagonal& J, const Vec& r) {
  if (J.rows() != r.size()) throw DimensionError("solve_normal_equations: J/r mismatch");
  const int nb = J.n_blocks();
  const int K = J.block_cols();
  const int bands = J.n_bands();

  // Lower block bands of J^T J: entry (i, i-b) = sum_rows J(row,i)^T J(row,i-b).
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(nb) * (bands + 1) * K * K);
  auto block_at = [&](int row, int col) -> const Mat* {
    if (row == col) return &J.diag(row);
    int b = row - col;
    if (J.has_sub(b, row)) return &J.sub(b, row);
    return nullptr;
  };
  for (int i = 0; i < nb; ++i) {
    for (int b = 0; b <= bands && i - b >= 0; ++b) {
      const int jcol = i - b;
      Mat acc = Mat::Zero(K, K);
      bool any = false;
      for (int row = i; row < nb && row <= jcol + bands; ++row) {
        const Mat* left = block_at(row, i);
        const Mat* right = block_at(row, jcol);
        if (left && right) {
          acc += left->transpose() * (*right);
          any = true;
        }
      }
      if (!any) continue;
      for (int a = 0; a < K; ++a)
        for (int c = 0; c < K; ++c) {
          trips.emplace_back(i * K + a, jcol * K + c, acc(a, c));
          if (b > 0) trips.emplace_back(jcol * K + c, i * K + a, acc(a, c));
        }
    }
  }
  Eigen::SparseMatrix<double> JtJ(nb * K, nb * K);
  JtJ.setFromTriplets(trips.begin(), trips.end());

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(JtJ);
  if (llt.info() != Eigen::Success)
    throw SingularSystem("solve_normal_equations: banded normal matrix not positive definite");
  const Vec g = J.multiply_transpose(r);
  Vec d = llt.solve(-g);
  d -= llt.solve(J.multiply_transpose(J.multiply(d)) + g);
  return d;
}

}  // namespace wls
