#include "ismap/nn.hpp"

#include <cmath>

namespace ismap {

Matrix glorot_init(int fan_in, int fan_out, Rng& rng) {
  if (fan_in <= 0 || fan_out <= 0)
    throw ShapeError("glorot_init: fans must be positive");
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  double* p = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) p[i] = rng.uniform(-a, a);
  return w;
}

DenseParams make_dense(int in, int out, Rng& rng) {
  DenseParams p;
  p.W = glorot_init(in, out, rng);
  p.b = Matrix(1, out);
  return p;
}

void dense_forward(const Matrix& h, const DenseParams& p, Matrix& out) {
  matmul(h, p.W, out);
  add_row_broadcast(out, p.b);
}

void gcn_layer_forward(const Matrix& a_norm, const Matrix& h,
                       const GCNLayerParams& p, Matrix& ah, Matrix& out) {
  matmul(a_norm, h, ah);
  matmul(ah, p.W, out);
  add_row_broadcast(out, p.b);
}

Matrix gcn_layer_forward(const Matrix& a_norm, const Matrix& h,
                         const GCNLayerParams& p) {
  Matrix ah, out;
  gcn_layer_forward(a_norm, h, p, ah, out);
  return out;
}

Matrix relu(Matrix m) {
  relu_inplace(m);
  return m;
}

std::array<double, 2> softmax2(const std::array<double, 2>& logits) {
  const double m = logits[0] > logits[1] ? logits[0] : logits[1];
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

LossGrad softmax_cross_entropy(const std::array<double, 2>& logits, int label) {
  if (label != 0 && label != 1)
    throw ShapeError("softmax_cross_entropy: label must be 0 or 1");
  const double m = logits[0] > logits[1] ? logits[0] : logits[1];
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  LossGrad out;
  out.loss = std::log(z) - (logits[label] - m);
  out.grad = {e0 / z, e1 / z};
  out.grad[label] -= 1.0;
  return out;
}

void AdamState::init(const std::vector<Matrix*>& params) {
  t = 0;
  m.clear();
  v.clear();
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Matrix* p : params) {
    m.emplace_back(p->rows(), p->cols());
    v.emplace_back(p->rows(), p->cols());
  }
}

void adam_step(const std::vector<Matrix*>& params,
               const std::vector<const Matrix*>& grads, AdamState& state,
               double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ShapeError("adam_step: list sizes differ");
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& g = *grads[i];
    Matrix& mi = state.m[i];
    Matrix& vi = state.v[i];
    if (!p.same_shape(g) || !p.same_shape(mi))
      throw ShapeError("adam_step: tensor shape mismatch");
    double* pp = p.data();
    const double* gp = g.data();
    double* mp = mi.data();
    double* vp = vi.data();
    const std::size_t n = p.size();
    for (std::size_t j = 0; j < n; ++j) {
      mp[j] = state.beta1 * mp[j] + (1.0 - state.beta1) * gp[j];
      vp[j] = state.beta2 * vp[j] + (1.0 - state.beta2) * gp[j] * gp[j];
      const double mhat = mp[j] / bc1;
      const double vhat = vp[j] / bc2;
      pp[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double gradcheck(const std::vector<Matrix*>& params,
                 const std::vector<const Matrix*>& analytic,
                 const std::function<double()>& loss_fn, double epsilon) {
  if (params.size() != analytic.size())
    throw ShapeError("gradcheck: list sizes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    const Matrix& a = *analytic[i];
    if (!p.same_shape(a)) throw ShapeError("gradcheck: tensor shape mismatch");
    double* pp = p.data();
    const double* ap = a.data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double saved = pp[j];
      pp[j] = saved + epsilon;
      const double fp = loss_fn();
      pp[j] = saved - epsilon;
      const double fm = loss_fn();
      pp[j] = saved;
      const double numeric = (fp - fm) / (2.0 * epsilon);
      const double rel = std::fabs(ap[j] - numeric) /
                         (std::fabs(ap[j]) + std::fabs(numeric) + 1e-12);
      if (rel > worst) worst = rel;
    }
  }
  return worst;
}

}  // namespace ismap
