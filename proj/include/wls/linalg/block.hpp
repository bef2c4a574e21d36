#pragma once

#include <vector>

#include "wls/errors.hpp"
#include "wls/types.hpp"

namespace wls {

// Block lower-triangular matrix with a short band of subdiagonal blocks.
// One-step residual stencils produce the bidiagonal case (one subdiagonal
// band); two-step stencils add a second band. All blocks share one shape.
//
// Band b of sub[] holds the blocks at block-coordinates (i, i-b-1),
// so sub[b][i] pairs with diag row-block i+b+1.
class BlockLowerBidiagonal {
 public:
  BlockLowerBidiagonal(int n_blocks, int block_rows, int block_cols, int n_bands = 1)
      : n_blocks_(n_blocks), rows_(block_rows), cols_(block_cols) {
    if (n_blocks < 1 || block_rows < 1 || block_cols < 1 || n_bands < 0)
      throw DimensionError("BlockLowerBidiagonal: non-positive shape");
    diag_.assign(n_blocks, Mat::Zero(rows_, cols_));
    sub_.resize(n_bands);
    for (int b = 0; b < n_bands; ++b) {
      int count = n_blocks - (b + 1);
      sub_[b].assign(count > 0 ? count : 0, Mat::Zero(rows_, cols_));
    }
  }

  int n_blocks() const { return n_blocks_; }
  int block_rows() const { return rows_; }
  int block_cols() const { return cols_; }
  int n_bands() const { return static_cast<int>(sub_.size()); }
  int rows() const { return n_blocks_ * rows_; }
  int cols() const { return n_blocks_ * cols_; }

  Mat& diag(int i) { return diag_.at(i); }
  const Mat& diag(int i) const { return diag_.at(i); }

  // Block at row-block i, column-block i - band (band >= 1).
  Mat& sub(int band, int i) { return sub_.at(band - 1).at(i - band); }
  const Mat& sub(int band, int i) const { return sub_.at(band - 1).at(i - band); }

  bool has_sub(int band, int i) const {
    return band >= 1 && band <= n_bands() && i >= band && i < n_blocks_;
  }

  Vec multiply(const Vec& x) const {
    if (x.size() != cols()) throw DimensionError("block multiply: size mismatch");
    Vec y = Vec::Zero(rows());
    for (int i = 0; i < n_blocks_; ++i) {
      y.segment(i * rows_, rows_) = diag_[i] * x.segment(i * cols_, cols_);
      for (int b = 1; b <= n_bands(); ++b)
        if (has_sub(b, i))
          y.segment(i * rows_, rows_) += sub(b, i) * x.segment((i - b) * cols_, cols_);
    }
    return y;
  }

  Vec multiply_transpose(const Vec& y) const {
    if (y.size() != rows()) throw DimensionError("block multiply_transpose: size mismatch");
    Vec x = Vec::Zero(cols());
    for (int i = 0; i < n_blocks_; ++i) {
      x.segment(i * cols_, cols_) += diag_[i].transpose() * y.segment(i * rows_, rows_);
      for (int b = 1; b <= n_bands(); ++b)
        if (has_sub(b, i))
          x.segment((i - b) * cols_, cols_) += sub(b, i).transpose() * y.segment(i * rows_, rows_);
    }
    return x;
  }

  Mat dense() const {
    Mat D = Mat::Zero(rows(), cols());
    for (int i = 0; i < n_blocks_; ++i) {
      D.block(i * rows_, i * cols_, rows_, cols_) = diag_[i];
      for (int b = 1; b <= n_bands(); ++b)
        if (has_sub(b, i)) D.block(i * rows_, (i - b) * cols_, rows_, cols_) = sub(b, i);
    }
    return D;
  }

 private:
  int n_blocks_, rows_, cols_;
  std::vector<Mat> diag_;
  std::vector<std::vector<Mat>> sub_;
};

}  // namespace wls
