#include <cmath>
#include <vector>

#include "doctest.h"
#include "ismap/nn.hpp"

using namespace ismap;

namespace {

Matrix mat(int rows, int cols, std::initializer_list<double> vals) {
  Matrix m(rows, cols);
  int k = 0;
  for (double v : vals) m.data()[k++] = v;
  return m;
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("matmul against hand values") {
  const Matrix a = mat(2, 3, {1, 2, 3, 4, 5, 6});
  const Matrix b = mat(3, 2, {7, 8, 9, 10, 11, 12});
  Matrix c;
  matmul(a, b, c);
  REQUIRE(c.rows() == 2);
  REQUIRE(c.cols() == 2);
  CHECK(c(0, 0) == 58.0);
  CHECK(c(0, 1) == 64.0);
  CHECK(c(1, 0) == 139.0);
  CHECK(c(1, 1) == 154.0);

  Matrix bad;
  CHECK_THROWS_AS(matmul(a, a, bad), ShapeError);
}

TEST_CASE("transpose accumulate and broadcasts") {
  const Matrix a = mat(2, 2, {1, 2, 3, 4});
  const Matrix g = mat(2, 2, {5, 6, 7, 8});
  Matrix c(2, 2);
  c.zero();
  matmul_tn_acc(a, g, c);  // A^T * G
  CHECK(c(0, 0) == 1 * 5 + 3 * 7);
  CHECK(c(1, 1) == 2 * 6 + 4 * 8);

  Matrix m = mat(2, 2, {0, 0, 1, 1});
  const Matrix bias = mat(1, 2, {0.5, -0.5});
  add_row_broadcast(m, bias);
  CHECK(m(0, 0) == 0.5);
  CHECK(m(1, 1) == 0.5);

  Matrix acc(1, 2);
  acc.zero();
  col_sum_acc(m, acc);
  CHECK(acc(0, 0) == doctest::Approx(2.0));
  CHECK(acc(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("relu forward and backward") {
  Matrix m = mat(1, 4, {-2, -0.5, 0, 3});
  relu_inplace(m);
  CHECK(m(0, 0) == 0.0);
  CHECK(m(0, 2) == 0.0);
  CHECK(m(0, 3) == 3.0);

  const Matrix pre = mat(1, 4, {-2, -0.5, 0, 3});
  Matrix grad = mat(1, 4, {1, 1, 1, 1});
  relu_backward(pre, grad);
  CHECK(grad(0, 0) == 0.0);
  CHECK(grad(0, 1) == 0.0);
  CHECK(grad(0, 2) == 0.0);  // subgradient at 0 taken as 0
  CHECK(grad(0, 3) == 1.0);
}

TEST_CASE("dense forward") {
  DenseParams p;
  p.W = mat(3, 2, {1, 0, 0, 1, 1, 1});
  p.b = mat(1, 2, {0.5, -0.5});
  const Matrix x = mat(1, 3, {2, 3, 4});
  Matrix out;
  dense_forward(x, p, out);
  CHECK(out(0, 0) == doctest::Approx(2 + 4 + 0.5));
  CHECK(out(0, 1) == doctest::Approx(3 + 4 - 0.5));
}

TEST_CASE("gcn layer multiplies by the normalized adjacency first") {
  const Matrix a = mat(2, 2, {0.5, 0.5, 0.5, 0.5});
  const Matrix h = mat(2, 1, {2, 4});
  GCNLayerParams p;
  p.W = mat(1, 1, {3});
  p.b = mat(1, 1, {1});
  Matrix ah, out;
  gcn_layer_forward(a, h, p, ah, out);
  CHECK(ah(0, 0) == doctest::Approx(3.0));  // (2+4)/2
  CHECK(out(0, 0) == doctest::Approx(10.0));
  CHECK(out(1, 0) == doctest::Approx(10.0));
}

TEST_CASE("softmax cross-entropy values and gradient") {
  const LossGrad lg = softmax_cross_entropy({0.2, -0.1}, 1);
  CHECK(lg.loss == doctest::Approx(0.8543552444685271).epsilon(1e-14));
  CHECK(lg.grad[0] == doctest::Approx(0.574442516811659).epsilon(1e-14));
  CHECK(lg.grad[1] == doctest::Approx(-0.5744425168116589).epsilon(1e-14));

  const LossGrad even = softmax_cross_entropy({0.0, 0.0}, 0);
  CHECK(even.loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(even.grad[0] == doctest::Approx(-0.5));
  CHECK(even.grad[1] == doctest::Approx(0.5));

  // Huge logits must not overflow.
  const LossGrad big = softmax_cross_entropy({1e4, -1e4}, 0);
  CHECK(big.loss == doctest::Approx(0.0));
  const std::array<double, 2> p = softmax2({1e4, -1e4});
  CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("adam reproduces an independent trajectory") {
  // theta0 = 0.5, lr = 0.01, gradients 0.3, -0.1, 0.05; reference values
  // computed with the canonical bias-corrected update.
  Matrix theta = mat(1, 1, {0.5});
  std::vector<Matrix*> params{&theta};
  AdamState adam;
  adam.init(params);
  CHECK(adam.initialized());

  const double grads[3] = {0.3, -0.1, 0.05};
  const double want[3] = {0.4900000003333333, 0.48599781479280807,
                          0.4819435609772368};
  for (int t = 0; t < 3; ++t) {
    Matrix g = mat(1, 1, {grads[t]});
    std::vector<const Matrix*> gl{&g};
    adam_step(params, gl, adam, 0.01);
    CHECK(theta(0, 0) == doctest::Approx(want[t]).epsilon(1e-15));
  }
  CHECK(adam.t == 3);
}

TEST_CASE("glorot init respects its bound and its seed") {
  const double bound = std::sqrt(6.0 / (9 + 64));
  Rng rng(3);
  const Matrix w = glorot_init(9, 64, rng);
  REQUIRE(w.rows() == 9);
  REQUIRE(w.cols() == 64);
  double mn = 1e9, mx = -1e9;
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 64; ++j) {
      mn = std::min(mn, w(i, j));
      mx = std::max(mx, w(i, j));
    }
  CHECK(mn >= -bound);
  CHECK(mx <= bound);
  CHECK(mx > 0.5 * bound);   // spread sanity
  CHECK(mn < -0.5 * bound);

  Rng rng2(3);
  const Matrix w2 = glorot_init(9, 64, rng2);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 64; ++j) CHECK(w2(i, j) == w(i, j));

  DenseParams d = make_dense(4, 2, rng);
  CHECK(d.b.rows() == 1);
  CHECK(d.b.cols() == 2);
  CHECK(d.b(0, 0) == 0.0);
  CHECK(d.b(0, 1) == 0.0);
}

TEST_CASE("gradcheck harness flags a wrong gradient") {
  // f(theta) = sum(theta^2), grad = 2 theta.
  Matrix theta = mat(1, 3, {0.3, -0.7, 1.1});
  std::vector<Matrix*> params{&theta};
  const auto loss = [&]() {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += theta(0, j) * theta(0, j);
    return s;
  };
  Matrix good = mat(1, 3, {0.6, -1.4, 2.2});
  std::vector<const Matrix*> gl{&good};
  CHECK(gradcheck(params, gl, loss) <= 1e-8);

  Matrix bad = mat(1, 3, {0.6, -1.4, 2.3});
  std::vector<const Matrix*> bl{&bad};
  CHECK(gradcheck(params, bl, loss) > 1e-3);
}

}  // TEST_SUITE
