#pragma once

#include <algorithm>
#include <vector>

#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Residual weighting A = Psi^T Psi. Psi is either the identity or a row
// selector (one unit entry per row), which is how sampled residual
// evaluation enters every least-squares objective in this library.
struct WeightingMatrix {
  enum class Kind { Identity, RowSampling };

  Kind kind = Kind::Identity;
  int full_dim = 0;
  std::vector<int> rows;  // sorted, distinct; RowSampling only

  static WeightingMatrix identity(int n) { return {Kind::Identity, n, {}}; }

  static WeightingMatrix row_sampling(int n, std::vector<int> selected) {
    std::sort(selected.begin(), selected.end());
    selected.erase(std::unique(selected.begin(), selected.end()), selected.end());
    if (selected.empty()) throw ConfigError("WeightingMatrix: empty row selection");
    if (selected.front() < 0 || selected.back() >= n)
      throw ConfigError("WeightingMatrix: row index out of range");
    return {Kind::RowSampling, n, std::move(selected)};
  }

  int sample_count() const {
    return kind == Kind::Identity ? full_dim : static_cast<int>(rows.size());
  }

  // Psi v
  Vec apply_psi(const Vec& v) const {
    if (v.size() != full_dim) throw DimensionError("WeightingMatrix: size mismatch");
    if (kind == Kind::Identity) return v;
    Vec out(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) out(i) = v(rows[i]);
    return out;
  }

  // Psi M (row selection)
  Mat apply_psi(const Mat& M) const {
    if (M.rows() != full_dim) throw DimensionError("WeightingMatrix: size mismatch");
    if (kind == Kind::Identity) return M;
    Mat out(rows.size(), M.cols());
    for (size_t i = 0; i < rows.size(); ++i) out.row(i) = M.row(rows[i]);
    return out;
  }

  // Psi^T w (scatter back to full length)
  Vec apply_psi_transpose(const Vec& w) const {
    if (kind == Kind::Identity) {
      if (w.size() != full_dim) throw DimensionError("WeightingMatrix: size mismatch");
      return w;
    }
    if (w.size() != static_cast<Eigen::Index>(rows.size()))
      throw DimensionError("WeightingMatrix: size mismatch");
    Vec out = Vec::Zero(full_dim);
    for (size_t i = 0; i < rows.size(); ++i) out(rows[i]) = w(i);
    return out;
  }

  // A v = Psi^T Psi v
  Vec apply_A(const Vec& v) const { return apply_psi_transpose(apply_psi(v)); }

  Mat apply_A(const Mat& M) const {
    if (kind == Kind::Identity) return M;
    Mat out = Mat::Zero(M.rows(), M.cols());
    for (int r : rows) out.row(r) = M.row(r);
    return out;
  }
};

}  // namespace wls
