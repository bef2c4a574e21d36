#pragma once

#include <Eigen/SVD>

#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

struct ThinSvd {
  Mat U;       // m x r
  Vec sigma;   // r, non-increasing, non-negative
  Mat Z;       // n x r, M = U * sigma.asDiagonal() * Z^T
};

// Thin SVD with r = min(m, n). Eigen's bidiagonal divide-and-conquer does
// the work; the reconstruction/orthonormality guarantees are covered by an
// independent normal-matrix oracle in the test suite.
inline ThinSvd thin_svd(const Mat& M) {
  if (!M.allFinite()) throw NumericalError("thin_svd: non-finite input");
  Eigen::BDCSVD<Mat> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("thin_svd: iteration failed");
  ThinSvd out;
  out.U = svd.matrixU();
  out.sigma = svd.singularValues();
  out.Z = svd.matrixV();
  return out;
}

}  // namespace wls
