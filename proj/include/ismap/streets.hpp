#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "ismap/errors.hpp"

namespace ismap {

struct StreetNode {
  std::int64_t id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct StreetSegment {
  std::int64_t node_a = 0;
  std::int64_t node_b = 0;
  std::vector<std::pair<double, double>> polyline;  // >= 2 points
};

class StreetNetwork {
 public:
  // Throws on duplicate node ids.
  void add_node(const StreetNode& n);
  // Throws when endpoint ids are unknown or the polyline ends do not
  // coincide with the named nodes' coordinates.
  void add_segment(StreetSegment s);

  const std::vector<StreetNode>& nodes() const { return nodes_; }
  const std::vector<StreetSegment>& segments() const { return segments_; }

  // Number of segments incident to the node, over the full network.
  int degree(std::int64_t node_id) const;

 private:
  std::vector<StreetNode> nodes_;
  std::vector<StreetSegment> segments_;
  std::unordered_map<std::int64_t, std::size_t> node_index_;
  std::unordered_map<std::int64_t, int> degree_;
};

// Nodes: CSV `id,x,y` with header. Segments: CSV `node_a,node_b,wkt_linestring`
// with header, geometry as `LINESTRING (x y, x y, ...)`.
StreetNetwork load_street_network(const std::string& nodes_path,
                                  const std::string& segments_path);
StreetNetwork parse_street_network(const std::string& nodes_csv,
                                   const std::string& segments_csv,
                                   const std::string& nodes_origin,
                                   const std::string& segments_origin);

std::vector<std::pair<double, double>> parse_wkt_linestring(
    const std::string& wkt, const std::string& context);

}  // namespace ismap
