#include "ismap/local_graph.hpp"

#include <cmath>
#include <sstream>

#include "ismap/io_util.hpp"
#include "json.hpp"

namespace ismap {

LocalGraph build_local_graph(const FeatureTable& table, int row, int col) {
  const CellRecord* center = table.find(row, col);
  if (!center) {
    std::ostringstream os;
    os << "build_local_graph: no record for central cell (" << row << ", " << col
       << ")";
    throw BoundsError(os.str());
  }

  LocalGraph g;
  g.node_coords.push_back({row, col});
  std::vector<const CellRecord*> records{center};
  // Neighbors in row-major window order, skipping absent cells.
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const CellRecord* rec = table.find(row + dr, col + dc);
      if (!rec) continue;
      g.node_coords.push_back({row + dr, col + dc});
      records.push_back(rec);
    }
  }

  const int k = static_cast<int>(records.size());
  g.node_features.resize(k, kFeatureCount);
  for (int i = 0; i < k; ++i)
    for (int f = 0; f < kFeatureCount; ++f) g.node_features(i, f) = records[i]->features[f];

  g.central_index = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const int dr = g.node_coords[i].first - g.node_coords[j].first;
      const int dc = g.node_coords[i].second - g.node_coords[j].second;
      if (dr >= -1 && dr <= 1 && dc >= -1 && dc <= 1) g.edges.push_back({i, j});
    }
  }
  return g;
}

Matrix normalized_adjacency(const LocalGraph& g) {
  const int k = g.node_count();
  std::vector<int> deg(k, 0);
  for (const auto& [i, j] : g.edges) {
    ++deg[i];
    ++deg[j];
  }
  std::vector<double> inv_sqrt(k);
  for (int i = 0; i < k; ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i] + 1.0);

  Matrix a(k, k);
  for (int i = 0; i < k; ++i) a(i, i) = 1.0 / (deg[i] + 1.0);
  for (const auto& [i, j] : g.edges) {
    const double w = inv_sqrt[i] * inv_sqrt[j];
    a(i, j) = w;
    a(j, i) = w;
  }
  return a;
}

std::string local_graph_to_json(const LocalGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i < g.node_count(); ++i) {
    nlohmann::json feats = nlohmann::json::array();
    for (int f = 0; f < kFeatureCount; ++f) feats.push_back(g.node_features(i, f));
    nodes.push_back({{"row", g.node_coords[i].first},
                     {"col", g.node_coords[i].second},
                     {"features", feats}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : g.edges) edges.push_back({i, j});
  nlohmann::json doc{{"central_index", g.central_index},
                     {"nodes", nodes},
                     {"edges", edges}};
  return doc.dump(2) + "\n";
}

}  // namespace ismap
