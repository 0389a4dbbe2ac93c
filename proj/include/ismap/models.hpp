#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ismap/grid.hpp"
#include "ismap/local_graph.hpp"
#include "ismap/nn.hpp"

namespace ismap {

inline constexpr int kHiddenSize = 64;
inline constexpr int kNumClasses = 2;
// Central cell plus the 8 window slots, zero-padded where absent.
inline constexpr int kNeighborInputDim = kFeatureCount * 9;  // 81

enum class ModelKind { kGcn, kMlpLocal, kMlpNeighbors };

const char* model_kind_name(ModelKind kind);
// Accepts "gcn", "mlp-local", "mlp-neighbors"; anything else -> ConfigError
// listing the valid names.
ModelKind parse_model_kind(const std::string& name);

// Two graph-convolution layers (9->64->64) and a dense head (64->2) read from
// the central node. 4930 parameters.
struct GCNClassifier {
  GCNLayerParams gcn1;
  GCNLayerParams gcn2;
  DenseParams head;
};

// Single hidden layer (9 or 81 -> 64) and head (64 -> 2).
struct MLPBaseline {
  DenseParams hidden;
  DenseParams head;
  bool neighbors = false;
};

// Tagged union of the architectures; only the member matching `kind` is used.
struct Model {
  ModelKind kind = ModelKind::kGcn;
  GCNClassifier gcn;
  MLPBaseline mlp;

  // Fixed order: (gcn1|hidden).W, .b, [gcn2.W, gcn2.b,] head.W, head.b.
  std::vector<Matrix*> params();
  std::vector<const Matrix*> params() const;
  long long parameter_count() const;
};

// Fresh Glorot weights / zero biases for the given architecture.
Model init_model(ModelKind kind, Rng& rng);

// Same shapes as m, all entries zero (gradient accumulator).
Model zero_grads_like(const Model& m);
void zero_params(Model& m);

struct Prediction {
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
  int label() const { return probs[1] > probs[0] ? 1 : 0; }
};

// H1 = relu(gcn_layer(A,X,gcn1)); H2 = relu(gcn_layer(A,H1,gcn2));
// logits = dense(H2[central], head). Feature dim must be 9.
Prediction gcn_predict(const GCNClassifier& m, const LocalGraph& g);

// 81-vector: slots 0-8 the central features, slots 9k+9..9k+17 the k-th window
// neighbor (kKingOffsets order), zeros where the neighbor cell is absent.
std::vector<double> assemble_neighbor_input(const FeatureTable& table, int row,
                                            int col);

Prediction mlp_predict(const MLPBaseline& m, const std::vector<double>& x);

// Assembles the right input for the model kind and predicts cell (row, col).
Prediction predict_cell(const Model& m, const FeatureTable& table, int row,
                        int col);

// ---------------------------------------------------------------------------
// Training path. Inputs are preassembled once per fold, then reused across
// epochs; the backward pass exploits that only the central row reaches the
// head (so layer 2 runs on one row) and is exact.

struct TrainSample {
  // GCN payload.
  Matrix a;   // k x k normalized adjacency
  Matrix ax;  // k x 9, adjacency-propagated node features
  int central = 0;
  // MLP payload.
  Matrix x;  // 1 x (9 or 81)
  int label = 0;
};

TrainSample make_train_sample(ModelKind kind, const FeatureTable& table,
                              int row, int col, int label);

struct TrainWorkspace {
  Matrix w2t;  // gcn2.W transposed; refresh() after every parameter update
  Matrix z1, ah1c, z2c, dz2c, dah1c, dz1;
  std::array<double, 2> logits{};
  void refresh(const Model& m);
};

// Accumulates weight * dloss/dparam into grads (shapes of zero_grads_like) and
// returns the unweighted sample loss. Call w.refresh(m) whenever parameters
// changed since the last call.
double forward_backward(const Model& m, const TrainSample& s, double weight,
                        Model& grads, TrainWorkspace& w);

// Loss only; shares the forward code with forward_backward.
double forward_loss(const Model& m, const TrainSample& s, TrainWorkspace& w);

// ---------------------------------------------------------------------------
// Checkpoints: JSON with layer shapes, row-major weights, seed and note.

std::string model_to_json(const Model& m, std::uint64_t seed,
                          const std::string& note);
Model model_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Finite-difference check of the full backward pass on one random instance
// (kink-free by construction: instances whose pre-activations sit within
// 1e-4 of a ReLU corner are re-drawn). corrupt_gradient deliberately damages
// one analytic entry, as a negative control.
double gradcheck_model(ModelKind kind, std::uint64_t seed,
                       bool corrupt_gradient = false, double epsilon = 1e-5);

}  // namespace ismap
