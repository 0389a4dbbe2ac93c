#pragma once

#include <string>
#include <vector>

#include "ismap/grid.hpp"
#include "ismap/matrix.hpp"

namespace ismap {

// The 3x3 neighborhood graph around one target cell. Node 0 is the central
// cell; the neighbors that exist in the table follow in row-major window
// order. Edges are the king-adjacent pairs among included cells.
struct LocalGraph {
  Matrix node_features;                       // k x 9, k <= 9
  std::vector<std::pair<int, int>> edges;     // unordered index pairs, i < j
  int central_index = 0;
  std::vector<std::pair<int, int>> node_coords;

  int node_count() const { return node_features.rows(); }
};

// Throws when (row, col) has no record in the table.
LocalGraph build_local_graph(const FeatureTable& table, int row, int col);

// Symmetric renormalized adjacency with self-loops:
// A_norm = D^{-1/2} (A + I) D^{-1/2}, with D the degree matrix of A + I.
// Dense k x k, symmetric by construction, diagonal 1/(deg_i + 1).
Matrix normalized_adjacency(const LocalGraph& g);

// Debug dump: {"nodes": [{"row","col","features"}...], "edges", "central_index"}.
std::string local_graph_to_json(const LocalGraph& g);

}  // namespace ismap
