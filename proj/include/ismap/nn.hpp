#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "ismap/matrix.hpp"
#include "ismap/rng.hpp"

namespace ismap {

// One affine layer: y = x * W + b, with W in x out and b stored 1 x out.
// GCN layers share the shape (their forward just multiplies by A_norm first).
struct DenseParams {
  Matrix W;
  Matrix b;
};
using GCNLayerParams = DenseParams;

// Glorot-uniform matrix: i.i.d. on [-a, a], a = sqrt(6 / (fan_in + fan_out)).
Matrix glorot_init(int fan_in, int fan_out, Rng& rng);

// Glorot weights, zero bias.
DenseParams make_dense(int in, int out, Rng& rng);

// out = h * W + b (bias broadcast to every row).
void dense_forward(const Matrix& h, const DenseParams& p, Matrix& out);

// out = a_norm * h * W + b. `ah` receives a_norm * h (kept for backprop).
void gcn_layer_forward(const Matrix& a_norm, const Matrix& h,
                       const GCNLayerParams& p, Matrix& ah, Matrix& out);
Matrix gcn_layer_forward(const Matrix& a_norm, const Matrix& h,
                         const GCNLayerParams& p);

// Elementwise max(0, x), by value (relu_inplace in matrix.hpp is the in-place
// form).
Matrix relu(Matrix m);

// Numerically stable two-class softmax.
std::array<double, 2> softmax2(const std::array<double, 2>& logits);

struct LossGrad {
  double loss = 0.0;
  std::array<double, 2> grad{};  // d loss / d logits = p - onehot(label)
};

// loss = -log softmax(logits)[label], computed via max subtraction so huge
// logits cannot overflow. label must be 0 or 1.
LossGrad softmax_cross_entropy(const std::array<double, 2>& logits, int label);

// Adam with the canonical bias correction:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  // Zero moments shaped like the given parameter list; resets t.
  void init(const std::vector<Matrix*>& params);
  bool initialized() const { return !m.empty(); }
};

// One update over a parameter list and a parallel gradient list. Shapes must
// match the list adam was initialized with.
void adam_step(const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads, AdamState& state,
               double lr);

// Central finite differences over every entry of every parameter tensor.
// `loss_fn` must recompute the scalar loss from the current parameter values;
// `analytic` holds the backprop gradients at the unperturbed point. Returns
// the maximum relative error (|a - n|) / (|a| + |n| + 1e-12).
double gradcheck(const std::vector<Matrix*>& params,
                 const std::vector<const Matrix*>& analytic,
                 const std::function<double()>& loss_fn,
                 double epsilon = 1e-5);

}  // namespace ismap
