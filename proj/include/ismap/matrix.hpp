#pragma once

#include <cassert>
#include <vector>

#include "ismap/errors.hpp"

namespace ismap {

// Dense row-major matrix of 64-bit reals. Small and unclever on purpose;
// the kernels below carry the training loop.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) { resize(rows, cols); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  // Keeps existing storage when shrinking; contents are unspecified after.
  void resize(int rows, int cols) {
    assert(rows >= 0 && cols >= 0);
    rows_ = rows;
    cols_ = cols;
    data_.resize(static_cast<std::size_t>(rows) * cols);
  }

  void zero() { std::fill(data_.begin(), data_.end(), 0.0); }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  double& operator()(int r, int c) { return data_[idx(r, c)]; }
  double operator()(int r, int c) const { return data_[idx(r, c)]; }

  double* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row(int r) const {
    return data_.data() + static_cast<std::size_t>(r) * cols_;
  }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

 private:
  std::size_t idx(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return static_cast<std::size_t>(r) * cols_ + c;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// C = A * B. Resizes C; aliasing with A or B is not allowed.
void matmul(const Matrix& a, const Matrix& b, Matrix& c);

// C += A^T * B. C must already be rows(A.cols) x cols(B.cols).
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

// Out = M^T.
void transpose(const Matrix& m, Matrix& out);

// M.row(i) += bias for every i; bias is 1 x cols.
void add_row_broadcast(Matrix& m, const Matrix& bias);

// acc (1 x cols) += column sums of M.
void col_sum_acc(const Matrix& m, Matrix& acc);

// Elementwise max(0, x) in place.
void relu_inplace(Matrix& m);

// grad *= 1[pre > 0] elementwise (the subgradient at 0 is taken as 0).
void relu_backward(const Matrix& pre, Matrix& grad);

}  // namespace ismap
