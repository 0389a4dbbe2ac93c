#include "ismap/streets.hpp"

#include <cmath>
#include <sstream>

#include "ismap/io_util.hpp"

namespace ismap {

namespace {
// Endpoints must sit on their named nodes; small slack absorbs decimal
// round-tripping of coordinates.
constexpr double kEndpointTol = 1e-6;
}  // namespace

void StreetNetwork::add_node(const StreetNode& n) {
  if (node_index_.count(n.id))
    throw ParseError("duplicate street node id " + std::to_string(n.id));
  node_index_.emplace(n.id, nodes_.size());
  nodes_.push_back(n);
}

void StreetNetwork::add_segment(StreetSegment s) {
  if (s.polyline.size() < 2)
    throw ParseError("segment polyline needs at least 2 points");
  auto check_end = [&](std::int64_t id, const std::pair<double, double>& p) {
    auto it = node_index_.find(id);
    if (it == node_index_.end())
      throw ParseError("segment references unknown node " + std::to_string(id));
    const StreetNode& n = nodes_[it->second];
    if (std::abs(n.x - p.first) > kEndpointTol ||
        std::abs(n.y - p.second) > kEndpointTol) {
      std::ostringstream os;
      os << "segment endpoint (" << p.first << "," << p.second
         << ") does not coincide with node " << id << " at (" << n.x << ","
         << n.y << ")";
      throw ParseError(os.str());
    }
  };
  check_end(s.node_a, s.polyline.front());
  check_end(s.node_b, s.polyline.back());
  ++degree_[s.node_a];
  ++degree_[s.node_b];
  segments_.push_back(std::move(s));
}

int StreetNetwork::degree(std::int64_t node_id) const {
  auto it = degree_.find(node_id);
  return it == degree_.end() ? 0 : it->second;
}

std::vector<std::pair<double, double>> parse_wkt_linestring(
    const std::string& wkt, const std::string& context) {
  const std::string t = trim(wkt);
  const std::string kw = "LINESTRING";
  if (t.compare(0, kw.size(), kw) != 0)
    throw ParseError(context + ": geometry must be a LINESTRING, got '" + t +
                     "'");
  const std::size_t open = t.find('(', kw.size());
  const std::size_t close = t.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ParseError(context + ": malformed LINESTRING parentheses");
  const std::string body = t.substr(open + 1, close - open - 1);

  std::vector<std::pair<double, double>> pts;
  for (const std::string& pair : split(body, ',')) {
    std::istringstream ps(trim(pair));
    double x, y;
    if (!(ps >> x >> y))
      throw ParseError(context + ": bad coordinate pair '" + trim(pair) + "'");
    std::string rest;
    if (ps >> rest)
      throw ParseError(context + ": unexpected token '" + rest +
                       "' in coordinate pair");
    pts.emplace_back(x, y);
  }
  if (pts.size() < 2)
    throw ParseError(context + ": LINESTRING needs at least 2 points");
  return pts;
}

StreetNetwork parse_street_network(const std::string& nodes_csv,
                                   const std::string& segments_csv,
                                   const std::string& nodes_origin,
                                   const std::string& segments_origin) {
  StreetNetwork net;

  {
    std::istringstream in(nodes_csv);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) || trim(line) != "id,x,y")
      throw ParseError(nodes_origin + ":1: expected header 'id,x,y'");
    ++line_no;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const std::vector<std::string> f = split(line, ',');
      const std::string ctx = nodes_origin + ":" + std::to_string(line_no);
      if (f.size() != 3)
        throw ParseError(ctx + ": expected 3 fields, got " +
                         std::to_string(f.size()));
      try {
        StreetNode n;
        n.id = parse_long(f[0], "id");
        n.x = parse_double(f[1], "x");
        n.y = parse_double(f[2], "y");
        net.add_node(n);
      } catch (const ParseError& e) {
        throw ParseError(ctx + ": " + e.what());
      }
    }
  }

  {
    std::istringstream in(segments_csv);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line) ||
        trim(line) != "node_a,node_b,wkt_linestring")
      throw ParseError(segments_origin +
                       ":1: expected header 'node_a,node_b,wkt_linestring'");
    ++line_no;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const std::string ctx = segments_origin + ":" + std::to_string(line_no);
      // The WKT field contains commas; split off the first two fields only.
      const std::size_t c1 = line.find(',');
      const std::size_t c2 = c1 == std::string::npos
                                 ? std::string::npos
                                 : line.find(',', c1 + 1);
      if (c2 == std::string::npos)
        throw ParseError(ctx + ": expected 'node_a,node_b,wkt_linestring'");
      try {
        StreetSegment s;
        s.node_a = parse_long(line.substr(0, c1), "node_a");
        s.node_b = parse_long(line.substr(c1 + 1, c2 - c1 - 1), "node_b");
        s.polyline = parse_wkt_linestring(line.substr(c2 + 1), "geometry");
        net.add_segment(std::move(s));
      } catch (const ParseError& e) {
        throw ParseError(ctx + ": " + e.what());
      }
    }
  }

  return net;
}

StreetNetwork load_street_network(const std::string& nodes_path,
                                  const std::string& segments_path) {
  return parse_street_network(read_text_file(nodes_path),
                              read_text_file(segments_path), nodes_path,
                              segments_path);
}

}  // namespace ismap
