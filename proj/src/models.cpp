#include "ismap/models.hpp"

#include <cmath>

#include "json.hpp"

namespace ismap {

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kGcn:
      return "gcn";
    case ModelKind::kMlpLocal:
      return "mlp-local";
    case ModelKind::kMlpNeighbors:
      return "mlp-neighbors";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "gcn") return ModelKind::kGcn;
  if (name == "mlp-local") return ModelKind::kMlpLocal;
  if (name == "mlp-neighbors") return ModelKind::kMlpNeighbors;
  throw ConfigError("unknown model '" + name +
                    "' (valid: gcn, mlp-local, mlp-neighbors)");
}

std::vector<Matrix*> Model::params() {
  if (kind == ModelKind::kGcn)
    return {&gcn.gcn1.W, &gcn.gcn1.b, &gcn.gcn2.W,
            &gcn.gcn2.b, &gcn.head.W, &gcn.head.b};
  return {&mlp.hidden.W, &mlp.hidden.b, &mlp.head.W, &mlp.head.b};
}

std::vector<const Matrix*> Model::params() const {
  auto list = const_cast<Model*>(this)->params();
  return {list.begin(), list.end()};
}

long long Model::parameter_count() const {
  long long n = 0;
  for (const Matrix* p : params()) n += static_cast<long long>(p->size());
  return n;
}

Model init_model(ModelKind kind, Rng& rng) {
  Model m;
  m.kind = kind;
  if (kind == ModelKind::kGcn) {
    m.gcn.gcn1 = make_dense(kFeatureCount, kHiddenSize, rng);
    m.gcn.gcn2 = make_dense(kHiddenSize, kHiddenSize, rng);
    m.gcn.head = make_dense(kHiddenSize, kNumClasses, rng);
  } else {
    const int in =
        kind == ModelKind::kMlpNeighbors ? kNeighborInputDim : kFeatureCount;
    m.mlp.hidden = make_dense(in, kHiddenSize, rng);
    m.mlp.head = make_dense(kHiddenSize, kNumClasses, rng);
    m.mlp.neighbors = kind == ModelKind::kMlpNeighbors;
  }
  return m;
}

Model zero_grads_like(const Model& m) {
  Model g = m;
  zero_params(g);
  return g;
}

void zero_params(Model& m) {
  for (Matrix* p : m.params()) p->zero();
}

Prediction gcn_predict(const GCNClassifier& m, const LocalGraph& g) {
  if (g.node_features.cols() != kFeatureCount)
    throw ShapeError("gcn_predict: node features must have 9 columns");
  const Matrix a = normalized_adjacency(g);
  const Matrix h1 = relu(gcn_layer_forward(a, g.node_features, m.gcn1));
  const Matrix h2 = relu(gcn_layer_forward(a, h1, m.gcn2));
  const int c = g.central_index;
  Prediction out;
  for (int j = 0; j < kNumClasses; ++j) {
    double s = m.head.b(0, j);
    for (int i = 0; i < kHiddenSize; ++i) s += h2(c, i) * m.head.W(i, j);
    out.logits[j] = s;
  }
  out.probs = softmax2(out.logits);
  return out;
}

std::vector<double> assemble_neighbor_input(const FeatureTable& table, int row,
                                            int col) {
  const CellRecord* center = table.find(row, col);
  if (!center)
    throw BoundsError("assemble_neighbor_input: no record for central cell");
  std::vector<double> x(kNeighborInputDim, 0.0);
  for (int f = 0; f < kFeatureCount; ++f) x[f] = center->features[f];
  for (std::size_t k = 0; k < kKingOffsets.size(); ++k) {
    const auto [dr, dc] = kKingOffsets[k];
    const CellRecord* rec = table.find(row + dr, col + dc);
    if (!rec) continue;
    const std::size_t base = kFeatureCount * (k + 1);
    for (int f = 0; f < kFeatureCount; ++f) x[base + f] = rec->features[f];
  }
  return x;
}

Prediction mlp_predict(const MLPBaseline& m, const std::vector<double>& x) {
  const int in = m.hidden.W.rows();
  if (static_cast<int>(x.size()) != in)
    throw ShapeError("mlp_predict: input length " + std::to_string(x.size()) +
                     ", expected " + std::to_string(in));
  std::array<double, kHiddenSize> h{};
  for (int i = 0; i < in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wrow = m.hidden.W.row(i);
    for (int j = 0; j < kHiddenSize; ++j) h[j] += xi * wrow[j];
  }
  for (int j = 0; j < kHiddenSize; ++j) {
    h[j] += m.hidden.b(0, j);
    if (h[j] < 0.0) h[j] = 0.0;
  }
  Prediction out;
  for (int j = 0; j < kNumClasses; ++j) {
    double s = m.head.b(0, j);
    for (int i = 0; i < kHiddenSize; ++i) s += h[i] * m.head.W(i, j);
    out.logits[j] = s;
  }
  out.probs = softmax2(out.logits);
  return out;
}

Prediction predict_cell(const Model& m, const FeatureTable& table, int row,
                        int col) {
  switch (m.kind) {
    case ModelKind::kGcn:
      return gcn_predict(m.gcn, build_local_graph(table, row, col));
    case ModelKind::kMlpLocal: {
      const CellRecord* rec = table.find(row, col);
      if (!rec) throw BoundsError("predict_cell: no record for cell");
      return mlp_predict(m.mlp,
                         {rec->features.begin(), rec->features.end()});
    }
    case ModelKind::kMlpNeighbors:
      return mlp_predict(m.mlp, assemble_neighbor_input(table, row, col));
  }
  throw ShapeError("predict_cell: bad model kind");
}

TrainSample make_train_sample(ModelKind kind, const FeatureTable& table,
                              int row, int col, int label) {
  TrainSample s;
  s.label = label;
  switch (kind) {
    case ModelKind::kGcn: {
      const LocalGraph g = build_local_graph(table, row, col);
      s.a = normalized_adjacency(g);
      matmul(s.a, g.node_features, s.ax);
      s.central = g.central_index;
      break;
    }
    case ModelKind::kMlpLocal: {
      const CellRecord* rec = table.find(row, col);
      if (!rec) throw BoundsError("make_train_sample: no record for cell");
      s.x.resize(1, kFeatureCount);
      for (int f = 0; f < kFeatureCount; ++f) s.x(0, f) = rec->features[f];
      break;
    }
    case ModelKind::kMlpNeighbors: {
      const std::vector<double> x = assemble_neighbor_input(table, row, col);
      s.x.resize(1, kNeighborInputDim);
      for (int f = 0; f < kNeighborInputDim; ++f) s.x(0, f) = x[f];
      break;
    }
  }
  return s;
}

void TrainWorkspace::refresh(const Model& m) {
  if (m.kind == ModelKind::kGcn) transpose(m.gcn.gcn2.W, w2t);
}

namespace {

// Forward for the GCN training path. Fills w.z1 (= relu'd H1), w.ah1c,
// w.z2c (= relu'd central H2 row) and w.logits; returns the loss.
double gcn_fwd(const Model& m, const TrainSample& s, TrainWorkspace& w) {
  const GCNClassifier& gc = m.gcn;
  matmul(s.ax, gc.gcn1.W, w.z1);
  add_row_broadcast(w.z1, gc.gcn1.b);
  relu_inplace(w.z1);  // w.z1 now holds H1; the >0 mask equals the Z1 mask

  const int k = s.a.rows();
  w.ah1c.resize(1, kHiddenSize);
  w.ah1c.zero();
  double* ah = w.ah1c.row(0);
  const double* arow = s.a.row(s.central);
  for (int i = 0; i < k; ++i) {
    const double coef = arow[i];
    const double* h = w.z1.row(i);
    for (int j = 0; j < kHiddenSize; ++j) ah[j] += coef * h[j];
  }

  matmul(w.ah1c, gc.gcn2.W, w.z2c);
  add_row_broadcast(w.z2c, gc.gcn2.b);
  relu_inplace(w.z2c);  // central H2 row

  const double* h2 = w.z2c.row(0);
  for (int j = 0; j < kNumClasses; ++j) {
    double acc = gc.head.b(0, j);
    for (int i = 0; i < kHiddenSize; ++i) acc += h2[i] * gc.head.W(i, j);
    w.logits[j] = acc;
  }
  return softmax_cross_entropy(w.logits, s.label).loss;
}

double mlp_fwd(const Model& m, const TrainSample& s, TrainWorkspace& w) {
  const MLPBaseline& mb = m.mlp;
  matmul(s.x, mb.hidden.W, w.z1);
  add_row_broadcast(w.z1, mb.hidden.b);
  relu_inplace(w.z1);
  const double* h = w.z1.row(0);
  for (int j = 0; j < kNumClasses; ++j) {
    double acc = mb.head.b(0, j);
    for (int i = 0; i < kHiddenSize; ++i) acc += h[i] * mb.head.W(i, j);
    w.logits[j] = acc;
  }
  return softmax_cross_entropy(w.logits, s.label).loss;
}

}  // namespace

double forward_loss(const Model& m, const TrainSample& s, TrainWorkspace& w) {
  return m.kind == ModelKind::kGcn ? gcn_fwd(m, s, w) : mlp_fwd(m, s, w);
}

double forward_backward(const Model& m, const TrainSample& s, double weight,
                        Model& grads, TrainWorkspace& w) {
  if (m.kind == ModelKind::kGcn) {
    const GCNClassifier& gc = m.gcn;
    GCNClassifier& gg = grads.gcn;
    const double loss = gcn_fwd(m, s, w);
    const LossGrad lg = softmax_cross_entropy(w.logits, s.label);
    const std::array<double, 2> dl = {lg.grad[0] * weight,
                                      lg.grad[1] * weight};

    // Head: gW3 += h2c^T (x) dl; dh2c = W3 dl, masked to dz2c.
    const double* h2 = w.z2c.row(0);
    w.dz2c.resize(1, kHiddenSize);
    double* dz2 = w.dz2c.row(0);
    for (int i = 0; i < kHiddenSize; ++i) {
      gg.head.W(i, 0) += h2[i] * dl[0];
      gg.head.W(i, 1) += h2[i] * dl[1];
      const double dh = gc.head.W(i, 0) * dl[0] + gc.head.W(i, 1) * dl[1];
      dz2[i] = h2[i] > 0.0 ? dh : 0.0;
    }
    gg.head.b(0, 0) += dl[0];
    gg.head.b(0, 1) += dl[1];

    // Layer 2 (central row only): gW2 += ah1c^T (x) dz2c.
    const double* ah = w.ah1c.row(0);
    for (int i = 0; i < kHiddenSize; ++i) {
      const double a = ah[i];
      double* grow = gg.gcn2.W.row(i);
      for (int j = 0; j < kHiddenSize; ++j) grow[j] += a * dz2[j];
    }
    {
      double* gb = gg.gcn2.b.row(0);
      for (int j = 0; j < kHiddenSize; ++j) gb[j] += dz2[j];
    }
    matmul(w.dz2c, w.w2t, w.dah1c);  // dah1c = dz2c * W2^T

    // dH1 = A[:,central] (x) dah1c, masked by the layer-1 ReLU.
    const int k = s.a.rows();
    w.dz1.resize(k, kHiddenSize);
    const double* da = w.dah1c.row(0);
    const double* acol = s.a.row(s.central);  // symmetric: column == row
    for (int i = 0; i < k; ++i) {
      const double coef = acol[i];
      const double* h1 = w.z1.row(i);
      double* drow = w.dz1.row(i);
      for (int j = 0; j < kHiddenSize; ++j)
        drow[j] = h1[j] > 0.0 ? coef * da[j] : 0.0;
    }
    matmul_tn_acc(s.ax, w.dz1, gg.gcn1.W);
    col_sum_acc(w.dz1, gg.gcn1.b);
    return loss;
  }

  const MLPBaseline& mb = m.mlp;
  MLPBaseline& gb = grads.mlp;
  const double loss = mlp_fwd(m, s, w);
  const LossGrad lg = softmax_cross_entropy(w.logits, s.label);
  const std::array<double, 2> dl = {lg.grad[0] * weight, lg.grad[1] * weight};

  const double* h = w.z1.row(0);
  w.dz1.resize(1, kHiddenSize);
  double* dz = w.dz1.row(0);
  for (int i = 0; i < kHiddenSize; ++i) {
    gb.head.W(i, 0) += h[i] * dl[0];
    gb.head.W(i, 1) += h[i] * dl[1];
    const double dh = mb.head.W(i, 0) * dl[0] + mb.head.W(i, 1) * dl[1];
    dz[i] = h[i] > 0.0 ? dh : 0.0;
  }
  gb.head.b(0, 0) += dl[0];
  gb.head.b(0, 1) += dl[1];
  matmul_tn_acc(s.x, w.dz1, gb.hidden.W);
  col_sum_acc(w.dz1, gb.hidden.b);
  return loss;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json data = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) data.push_back(m.data()[i]);
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 ||
      data.size() != static_cast<std::size_t>(rows) * cols)
    throw ParseError("checkpoint: matrix data length mismatch");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = data[i].get<double>();
  return m;
}

}  // namespace

std::string model_to_json(const Model& m, std::uint64_t seed,
                          const std::string& note) {
  nlohmann::json layers;
  if (m.kind == ModelKind::kGcn) {
    layers["gcn1"] = {{"W", matrix_to_json(m.gcn.gcn1.W)},
                      {"b", matrix_to_json(m.gcn.gcn1.b)}};
    layers["gcn2"] = {{"W", matrix_to_json(m.gcn.gcn2.W)},
                      {"b", matrix_to_json(m.gcn.gcn2.b)}};
    layers["head"] = {{"W", matrix_to_json(m.gcn.head.W)},
                      {"b", matrix_to_json(m.gcn.head.b)}};
  } else {
    layers["hidden"] = {{"W", matrix_to_json(m.mlp.hidden.W)},
                        {"b", matrix_to_json(m.mlp.hidden.b)}};
    layers["head"] = {{"W", matrix_to_json(m.mlp.head.W)},
                      {"b", matrix_to_json(m.mlp.head.b)}};
  }
  nlohmann::json doc{{"format", 1},
                     {"variant", model_kind_name(m.kind)},
                     {"seed", seed},
                     {"note", note},
                     {"layers", layers}};
  return doc.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  try {
    Model m;
    m.kind = parse_model_kind(doc.at("variant").get<std::string>());
    const auto& layers = doc.at("layers");
    if (m.kind == ModelKind::kGcn) {
      m.gcn.gcn1 = {matrix_from_json(layers.at("gcn1").at("W")),
                    matrix_from_json(layers.at("gcn1").at("b"))};
      m.gcn.gcn2 = {matrix_from_json(layers.at("gcn2").at("W")),
                    matrix_from_json(layers.at("gcn2").at("b"))};
      m.gcn.head = {matrix_from_json(layers.at("head").at("W")),
                    matrix_from_json(layers.at("head").at("b"))};
    } else {
      m.mlp.hidden = {matrix_from_json(layers.at("hidden").at("W")),
                      matrix_from_json(layers.at("hidden").at("b"))};
      m.mlp.head = {matrix_from_json(layers.at("head").at("W")),
                    matrix_from_json(layers.at("head").at("b"))};
      m.mlp.neighbors = m.kind == ModelKind::kMlpNeighbors;
    }
    // Shape sanity.
    Rng probe(1);
    const Model ref = init_model(m.kind, probe);
    auto got = m.params();
    auto want = ref.params();
    for (std::size_t i = 0; i < got.size(); ++i)
      if (!got[i]->same_shape(*want[i]))
        throw ParseError("checkpoint: layer shape does not match variant");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

// Smallest |pre-activation| the instance puts next to a ReLU corner; the
// finite-difference step must not be able to flip any unit's sign.
double min_abs_preactivation(const Model& m, const TrainSample& s) {
  TrainWorkspace w;
  w.refresh(m);
  double best = 1e300;
  if (m.kind == ModelKind::kGcn) {
    // Recompute pre-ReLU values with the full-layer ops (cheap here).
    Matrix z1;
    matmul(s.ax, m.gcn.gcn1.W, z1);
    add_row_broadcast(z1, m.gcn.gcn1.b);
    for (std::size_t i = 0; i < z1.size(); ++i)
      best = std::min(best, std::fabs(z1.data()[i]));
    Matrix h1 = relu(z1);
    Matrix ah1, z2;
    matmul(s.a, h1, ah1);
    matmul(ah1, m.gcn.gcn2.W, z2);
    add_row_broadcast(z2, m.gcn.gcn2.b);
    const double* z2c = z2.row(s.central);
    for (int j = 0; j < kHiddenSize; ++j)
      best = std::min(best, std::fabs(z2c[j]));
  } else {
    Matrix z1;
    matmul(s.x, m.mlp.hidden.W, z1);
    add_row_broadcast(z1, m.mlp.hidden.b);
    for (std::size_t i = 0; i < z1.size(); ++i)
      best = std::min(best, std::fabs(z1.data()[i]));
  }
  return best;
}

TrainSample random_instance(ModelKind kind, std::uint64_t seed) {
  Rng rng(seed);
  const int label = static_cast<int>(rng.uniform_int(2));
  if (kind == ModelKind::kGcn) {
    GridSpec grid;
    grid.n_rows = 3;
    grid.n_cols = 3;
    FeatureTable table(grid);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const bool central = r == 1 && c == 1;
        // Keep a random subset of neighbors so all graph sizes get exercised.
        if (!central && rng.uniform() < 0.25) continue;
        CellRecord rec;
        rec.row = r;
        rec.col = c;
        for (int f = 0; f < kFeatureCount; ++f) rec.features[f] = rng.normal();
        table.add(rec);
      }
    }
    return make_train_sample(kind, table, 1, 1, label);
  }
  const int in =
      kind == ModelKind::kMlpNeighbors ? kNeighborInputDim : kFeatureCount;
  TrainSample s;
  s.label = label;
  s.x.resize(1, in);
  for (int f = 0; f < in; ++f) s.x(0, f) = rng.normal();
  return s;
}

}  // namespace

double gradcheck_model(ModelKind kind, std::uint64_t seed,
                       bool corrupt_gradient, double epsilon) {
  constexpr double kKinkTol = 1e-4;
  Model model;
  TrainSample sample;
  bool found = false;
  for (std::uint64_t attempt = 0; attempt < 64 && !found; ++attempt) {
    sample = random_instance(kind, derive_seed(seed, 101, attempt));
    Rng init_rng(derive_seed(seed, 102, attempt));
    model = init_model(kind, init_rng);
    found = min_abs_preactivation(model, sample) > kKinkTol;
  }
  if (!found)
    throw Error("gradcheck_model: could not find a kink-free instance");

  Model grads = zero_grads_like(model);
  TrainWorkspace w;
  w.refresh(model);
  forward_backward(model, sample, 1.0, grads, w);
  if (corrupt_gradient) {
    double& g0 = grads.params()[0]->data()[0];
    g0 += 0.5 * (std::fabs(g0) + 1.0);
  }

  auto params = model.params();
  std::vector<const Matrix*> analytic;
  for (Matrix* g : grads.params()) analytic.push_back(g);
  TrainWorkspace lw;
  const auto loss_fn = [&]() { return forward_loss(model, sample, lw); };
  return gradcheck(params, analytic, loss_fn, epsilon);
}

}  // namespace ismap
