#pragma once

#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Orthonormal trial basis V with reference (affine offset) state x_ref.
struct SpatialBasis {
  Mat V;      // N x K, V^T V = I
  Vec x_ref;  // length N

  int full_dim() const { return static_cast<int>(V.rows()); }
  int reduced_dim() const { return static_cast<int>(V.cols()); }

  double orthonormality_defect() const {
    return (V.transpose() * V - Mat::Identity(V.cols(), V.cols())).cwiseAbs().maxCoeff();
  }

  void validate() const {
    if (x_ref.size() != V.rows()) throw DimensionError("SpatialBasis: x_ref size mismatch");
    if (orthonormality_defect() > 1e-10)
      throw NumericalError("SpatialBasis: columns not orthonormal");
  }

  Vec reduce(const Vec& x) const { return V.transpose() * (x - x_ref); }
  Vec reconstruct(const Vec& xhat) const { return V * xhat + x_ref; }
};

}  // namespace wls
