#include "ismap/matrix.hpp"

namespace ismap {

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  const int m = a.rows(), kk = a.cols(), n = b.cols();
  c.resize(m, n);
  for (int i = 0; i < m; ++i) {
    double* crow = c.row(i);
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
    const double* arow = a.row(i);
    for (int k = 0; k < kk; ++k) {
      const double aik = arow[k];
      const double* brow = b.row(k);
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn_acc: row counts differ");
  if (c.rows() != a.cols() || c.cols() != b.cols())
    throw ShapeError("matmul_tn_acc: bad accumulator shape");
  const int m = a.rows(), kk = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (int k = 0; k < kk; ++k) {
      const double aik = arow[k];
      double* crow = c.row(k);
      for (int j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
}

void transpose(const Matrix& m, Matrix& out) {
  out.resize(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
}

void add_row_broadcast(Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols())
    throw ShapeError("add_row_broadcast: bias shape mismatch");
  const double* b = bias.row(0);
  for (int i = 0; i < m.rows(); ++i) {
    double* r = m.row(i);
    for (int j = 0; j < m.cols(); ++j) r[j] += b[j];
  }
}

void col_sum_acc(const Matrix& m, Matrix& acc) {
  if (acc.rows() != 1 || acc.cols() != m.cols())
    throw ShapeError("col_sum_acc: accumulator shape mismatch");
  double* a = acc.row(0);
  for (int i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    for (int j = 0; j < m.cols(); ++j) a[j] += r[j];
  }
}

void relu_inplace(Matrix& m) {
  double* p = m.data();
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
}

void relu_backward(const Matrix& pre, Matrix& grad) {
  if (!pre.same_shape(grad)) throw ShapeError("relu_backward: shape mismatch");
  const double* z = pre.data();
  double* g = grad.data();
  const std::size_t n = grad.size();
  for (std::size_t i = 0; i < n; ++i)
    if (!(z[i] > 0.0)) g[i] = 0.0;
}

}  // namespace ismap
