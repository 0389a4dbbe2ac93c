#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "ismap/grid.hpp"
#include "ismap/local_graph.hpp"
#include "ismap/models.hpp"
#include "ismap/rng.hpp"

using namespace ismap;

namespace {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Mat to_mat(const Matrix& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

Mat mul(const Mat& a, const Mat& b) {
  Mat c(a.size(), Vec(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j)
        c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Plain transcription of the forward pass: A_hat from the edge list with
// self-loops and symmetric degree normalization, two propagate+transform+relu
// layers, dense head on the central row.
std::array<double, 2> dense_gcn_forward(const GCNClassifier& m,
                                        const LocalGraph& g) {
  const std::size_t k = static_cast<std::size_t>(g.node_count());
  Mat a_hat(k, Vec(k, 0.0));
  Vec deg(k, 1.0);  // self-loop
  for (const auto& [i, j] : g.edges) {
    deg[static_cast<std::size_t>(i)] += 1.0;
    deg[static_cast<std::size_t>(j)] += 1.0;
  }
  for (std::size_t i = 0; i < k; ++i) a_hat[i][i] = 1.0;
  for (const auto& [i, j] : g.edges)
    a_hat[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
        a_hat[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      a_hat[i][j] /= std::sqrt(deg[i]) * std::sqrt(deg[j]);

  Mat h = to_mat(g.node_features);
  for (const GCNLayerParams* layer : {&m.gcn1, &m.gcn2}) {
    Mat z = mul(mul(a_hat, h), to_mat(layer->W));
    for (std::size_t i = 0; i < z.size(); ++i)
      for (std::size_t j = 0; j < z[0].size(); ++j) {
        z[i][j] += layer->b(0, static_cast<int>(j));
        if (z[i][j] < 0.0) z[i][j] = 0.0;
      }
    h = z;
  }
  const Vec& central = h[static_cast<std::size_t>(g.central_index)];
  std::array<double, 2> logits{};
  for (int c = 0; c < 2; ++c) {
    double s = m.head.b(0, c);
    for (std::size_t j = 0; j < central.size(); ++j)
      s += central[j] * m.head.W(static_cast<int>(j), c);
    logits[c] = s;
  }
  return logits;
}

std::array<double, 2> dense_mlp_forward(const MLPBaseline& m, const Vec& x) {
  const int hidden = m.hidden.W.cols();
  Vec h(static_cast<std::size_t>(hidden));
  for (int j = 0; j < hidden; ++j) {
    double s = m.hidden.b(0, j);
    for (std::size_t i = 0; i < x.size(); ++i)
      s += x[i] * m.hidden.W(static_cast<int>(i), j);
    h[static_cast<std::size_t>(j)] = s > 0.0 ? s : 0.0;
  }
  std::array<double, 2> logits{};
  for (int c = 0; c < 2; ++c) {
    double s = m.head.b(0, c);
    for (int j = 0; j < hidden; ++j)
      s += h[static_cast<std::size_t>(j)] * m.head.W(j, c);
    logits[c] = s;
  }
  return logits;
}

FeatureTable random_table(Rng& rng, int rows, int cols, double keep) {
  GridSpec g;
  g.n_rows = rows;
  g.n_cols = cols;
  FeatureTable t(g);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (rng.uniform() >= keep) continue;
      CellRecord rec;
      rec.row = r;
      rec.col = c;
      for (int i = 0; i < kFeatureCount; ++i)
        rec.features[i] = rng.normal();
      t.add(rec);
    }
  return t;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("model kind names parse both ways") {
  CHECK(parse_model_kind("gcn") == ModelKind::kGcn);
  CHECK(parse_model_kind("mlp-local") == ModelKind::kMlpLocal);
  CHECK(parse_model_kind("mlp-neighbors") == ModelKind::kMlpNeighbors);
  CHECK(std::string(model_kind_name(ModelKind::kGcn)) == "gcn");
  try {
    parse_model_kind("resnet");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("gcn") != std::string::npos);
    CHECK(msg.find("mlp-local") != std::string::npos);
    CHECK(msg.find("mlp-neighbors") != std::string::npos);
  }
}

TEST_CASE("parameter counts match the architectures") {
  Rng rng(1);
  CHECK(init_model(ModelKind::kGcn, rng).parameter_count() == 4930);
  CHECK(init_model(ModelKind::kMlpLocal, rng).parameter_count() == 770);
  CHECK(init_model(ModelKind::kMlpNeighbors, rng).parameter_count() == 5378);
}

TEST_CASE("gcn forward matches an independent dense transcription") {
  Rng rng(5);
  for (int trial = 0; trial < 25; ++trial) {
    const FeatureTable t = random_table(rng, 5, 5, 0.75);
    const Model m = init_model(ModelKind::kGcn, rng);
    for (const CellRecord& rec : t.records()) {
      const LocalGraph g = build_local_graph(t, rec.row, rec.col);
      const Prediction got = gcn_predict(m.gcn, g);
      const auto want = dense_gcn_forward(m.gcn, g);
      CHECK(got.logits[0] == doctest::Approx(want[0]).epsilon(1e-12));
      CHECK(got.logits[1] == doctest::Approx(want[1]).epsilon(1e-12));
    }
  }
}

TEST_CASE("mlp forward matches an independent dense transcription") {
  Rng rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const Model local = init_model(ModelKind::kMlpLocal, rng);
    Vec x(static_cast<std::size_t>(kFeatureCount));
    for (double& v : x) v = rng.normal();
    const Prediction got = mlp_predict(local.mlp, x);
    const auto want = dense_mlp_forward(local.mlp, x);
    CHECK(got.logits[0] == doctest::Approx(want[0]).epsilon(1e-12));
    CHECK(got.logits[1] == doctest::Approx(want[1]).epsilon(1e-12));

    const Model nbr = init_model(ModelKind::kMlpNeighbors, rng);
    Vec xn(static_cast<std::size_t>(kNeighborInputDim));
    for (double& v : xn) v = rng.normal();
    const Prediction got_n = mlp_predict(nbr.mlp, xn);
    const auto want_n = dense_mlp_forward(nbr.mlp, xn);
    CHECK(got_n.logits[0] == doctest::Approx(want_n[0]).epsilon(1e-12));
    CHECK(got_n.logits[1] == doctest::Approx(want_n[1]).epsilon(1e-12));
  }
}

TEST_CASE("single-node gcn equals the two-layer mlp with the same weights") {
  Rng rng(9);
  const Model gm = init_model(ModelKind::kGcn, rng);

  GridSpec spec;
  spec.n_rows = 3;
  spec.n_cols = 3;
  FeatureTable t(spec);
  CellRecord rec;
  rec.row = 1;
  rec.col = 1;
  for (int i = 0; i < kFeatureCount; ++i) rec.features[i] = rng.normal();
  t.add(rec);
  const LocalGraph g = build_local_graph(t, 1, 1);
  REQUIRE(g.node_count() == 1);
  const Prediction from_gcn = gcn_predict(gm.gcn, g);

  // On one node A_hat = [1], so the network is hidden1 -> relu -> hidden2 ->
  // relu -> head. Chain the equivalent dense layers by hand.
  Vec x(rec.features.begin(), rec.features.end());
  const auto mid = [&]() {
    // relu(x W1 + b1) W2 + b2, then relu, then head.
    Vec h1(64), h2(64);
    for (int j = 0; j < 64; ++j) {
      double s = gm.gcn.gcn1.b(0, j);
      for (int i = 0; i < kFeatureCount; ++i)
        s += x[static_cast<std::size_t>(i)] * gm.gcn.gcn1.W(i, j);
      h1[static_cast<std::size_t>(j)] = s > 0 ? s : 0;
    }
    for (int j = 0; j < 64; ++j) {
      double s = gm.gcn.gcn2.b(0, j);
      for (int i = 0; i < 64; ++i)
        s += h1[static_cast<std::size_t>(i)] * gm.gcn.gcn2.W(i, j);
      h2[static_cast<std::size_t>(j)] = s > 0 ? s : 0;
    }
    std::array<double, 2> logits{};
    for (int c = 0; c < 2; ++c) {
      double s = gm.gcn.head.b(0, c);
      for (int j = 0; j < 64; ++j)
        s += h2[static_cast<std::size_t>(j)] * gm.gcn.head.W(j, c);
      logits[c] = s;
    }
    return logits;
  }();
  CHECK(from_gcn.logits[0] == doctest::Approx(mid[0]).epsilon(1e-12));
  CHECK(from_gcn.logits[1] == doctest::Approx(mid[1]).epsilon(1e-12));
}

TEST_CASE("neighbor input assembly zero-pads absent window slots") {
  Rng rng(12);
  const FeatureTable t = random_table(rng, 4, 4, 1.0);
  const std::vector<double> x = assemble_neighbor_input(t, 0, 0);
  REQUIRE(x.size() == static_cast<std::size_t>(kNeighborInputDim));
  const CellRecord* center = t.find(0, 0);
  for (int i = 0; i < kFeatureCount; ++i) CHECK(x[i] == center->features[i]);
  // Window order: slots for (-1,-1),(-1,0),(-1,1),(0,-1) are off-grid.
  for (int slot = 0; slot < 4; ++slot)
    for (int i = 0; i < kFeatureCount; ++i)
      CHECK(x[9 * (slot + 1) + i] == 0.0);
  // Slot 4 is (0,1).
  const CellRecord* east = t.find(0, 1);
  for (int i = 0; i < kFeatureCount; ++i)
    CHECK(x[9 * 5 + i] == east->features[i]);
}

TEST_CASE("predict_cell dispatches to the right architecture") {
  Rng rng(13);
  const FeatureTable t = random_table(rng, 4, 4, 1.0);
  const Model gm = init_model(ModelKind::kGcn, rng);
  const Model lm = init_model(ModelKind::kMlpLocal, rng);
  const Model nm = init_model(ModelKind::kMlpNeighbors, rng);

  const LocalGraph g = build_local_graph(t, 2, 2);
  CHECK(predict_cell(gm, t, 2, 2).logits[0] ==
        doctest::Approx(gcn_predict(gm.gcn, g).logits[0]));
  const CellRecord* rec = t.find(2, 2);
  const std::vector<double> xl(rec->features.begin(), rec->features.end());
  CHECK(predict_cell(lm, t, 2, 2).logits[1] ==
        doctest::Approx(mlp_predict(lm.mlp, xl).logits[1]));
  CHECK(predict_cell(nm, t, 2, 2).logits[1] ==
        doctest::Approx(
            mlp_predict(nm.mlp, assemble_neighbor_input(t, 2, 2)).logits[1]));
}

TEST_CASE("training forward agrees with the prediction path") {
  Rng rng(14);
  const FeatureTable t = random_table(rng, 5, 5, 0.8);
  for (ModelKind kind :
       {ModelKind::kGcn, ModelKind::kMlpLocal, ModelKind::kMlpNeighbors}) {
    const Model m = init_model(kind, rng);
    TrainWorkspace w;
    w.refresh(m);
    for (const CellRecord& rec : t.records()) {
      const TrainSample s = make_train_sample(kind, t, rec.row, rec.col, 1);
      const double loss = forward_loss(m, s, w);
      const Prediction p = predict_cell(m, t, rec.row, rec.col);
      CHECK(loss == doctest::Approx(-std::log(p.probs[1])).epsilon(1e-12));
    }
  }
}

TEST_CASE("finite differences confirm the backward pass") {
  for (ModelKind kind :
       {ModelKind::kGcn, ModelKind::kMlpLocal, ModelKind::kMlpNeighbors})
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL})
      CHECK(gradcheck_model(kind, seed) <= 1e-5);
}

TEST_CASE("a corrupted gradient fails the check") {
  CHECK(gradcheck_model(ModelKind::kGcn, 4, /*corrupt_gradient=*/true) > 1e-5);
  CHECK(gradcheck_model(ModelKind::kMlpLocal, 4, true) > 1e-5);
}

TEST_CASE("checkpoint json round trip") {
  Rng rng(21);
  const Model m = init_model(ModelKind::kGcn, rng);
  const std::string text = model_to_json(m, 21, "round trip");
  const Model back = model_from_json(text);
  CHECK(back.kind == ModelKind::kGcn);
  const auto orig = m.params();
  const auto copy = back.params();
  REQUIRE(orig.size() == copy.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    REQUIRE(copy[i]->same_shape(*orig[i]));
    for (int r = 0; r < orig[i]->rows(); ++r)
      for (int c = 0; c < orig[i]->cols(); ++c)
        CHECK((*copy[i])(r, c) == (*orig[i])(r, c));
  }
  CHECK_THROWS_AS(model_from_json("{\"kind\": \"pants\"}"), InputError);
}

}  // TEST_SUITE
