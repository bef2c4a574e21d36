#pragma once

#include <Eigen/Cholesky>

#include "wls/basis/spatial.hpp"
#include "wls/basis/weighting.hpp"
#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Precomputed projection operators for one (basis, weighting) pair:
// Psi V and the reduced mass matrix M = V^T A V with its factorization.
struct ReducedOperators {
  SpatialBasis basis;
  WeightingMatrix weighting;
  Mat PsiV;  // sample_count x K
  Mat M;     // K x K, symmetric positive definite
  Eigen::LLT<Mat> M_llt;

  static ReducedOperators build(SpatialBasis b, WeightingMatrix w) {
    if (w.full_dim != b.full_dim()) throw DimensionError("ReducedOperators: dim mismatch");
    ReducedOperators ops;
    ops.basis = std::move(b);
    ops.weighting = std::move(w);
    ops.PsiV = ops.weighting.apply_psi(ops.basis.V);
    ops.M = ops.PsiV.transpose() * ops.PsiV;
    ops.M_llt.compute(ops.M);
    if (ops.M_llt.info() != Eigen::Success)
      throw SingularSystem("ReducedOperators: mass matrix not positive definite");
    return ops;
  }

  int reduced_dim() const { return basis.reduced_dim(); }

  Vec solve_M(const Vec& v) const { return M_llt.solve(v); }

  // V^T A w for a full-space vector w.
  Vec project_weighted(const Vec& w) const {
    return PsiV.transpose() * weighting.apply_psi(w);
  }

  // l2-orthogonal projection of the initial condition.
  Vec project_ic(const Vec& x0) const { return basis.reduce(x0); }

  Vec reconstruct(const Vec& xhat) const { return basis.reconstruct(xhat); }
};

}  // namespace wls
