#include "ismap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "ismap/io_util.hpp"

namespace ismap {

void GridSpec::validate() const {
  if (!(cell_size > 0.0))
    throw ConfigError("grid cell_size must be > 0");
  if (n_rows < 1 || n_cols < 1)
    throw ConfigError("grid must have at least one row and one column");
}

std::vector<std::pair<int, int>> neighbors_king(int row, int col,
                                                const GridSpec& grid) {
  if (!grid.in_bounds(row, col)) {
    std::ostringstream os;
    os << "cell (" << row << "," << col << ") outside grid "
       << grid.n_rows << "x" << grid.n_cols;
    throw BoundsError(os.str());
  }
  std::vector<std::pair<int, int>> out;
  out.reserve(8);
  for (const auto& [dr, dc] : kKingOffsets) {
    const int r = row + dr;
    const int c = col + dc;
    if (grid.in_bounds(r, c)) out.emplace_back(r, c);
  }
  return out;
}

void FeatureTable::add(const CellRecord& rec) {
  if (!grid_.in_bounds(rec.row, rec.col)) {
    std::ostringstream os;
    os << "record (" << rec.row << "," << rec.col << ") outside grid "
       << grid_.n_rows << "x" << grid_.n_cols;
    throw BoundsError(os.str());
  }
  for (int i = 0; i < kFeatureCount; ++i) {
    if (!std::isfinite(rec.features[i])) {
      std::ostringstream os;
      os << "record (" << rec.row << "," << rec.col << "): feature "
         << kFeatureNames[i] << " is not finite";
      throw ParseError(os.str());
    }
  }
  if (rec.label && *rec.label != 0 && *rec.label != 1) {
    std::ostringstream os;
    os << "record (" << rec.row << "," << rec.col << "): label "
       << *rec.label << " outside {0,1}";
    throw ParseError(os.str());
  }
  const std::uint64_t k = key(rec.row, rec.col);
  if (index_.count(k)) {
    std::ostringstream os;
    os << "duplicate record for cell (" << rec.row << "," << rec.col << ")";
    throw ParseError(os.str());
  }
  index_.emplace(k, records_.size());
  records_.push_back(rec);
}

const CellRecord* FeatureTable::find(int row, int col) const {
  if (!grid_.in_bounds(row, col)) return nullptr;
  auto it = index_.find(key(row, col));
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::vector<int> FeatureTable::zones() const {
  std::set<int> zs;
  for (const CellRecord& r : records_)
    if (r.zone) zs.insert(*r.zone);
  return std::vector<int>(zs.begin(), zs.end());
}

ClassCounts class_counts(const FeatureTable& table) {
  ClassCounts c;
  for (const CellRecord& r : table.records()) {
    if (!r.label)
      ++c.n_unlabeled;
    else if (*r.label == 1)
      ++c.n_favela;
    else
      ++c.n_nonfavela;
  }
  return c;
}

namespace {

const char* kCsvHeader =
    "row,col,zone,label,veg_prop,entropy,slope,profile_convexity,"
    "street_nodes,street_length,deg_mean,deg_min,deg_max";

struct RawRow {
  int row, col;
  std::optional<int> zone, label;
  std::array<double, kFeatureCount> features;
};

RawRow parse_row(const std::string& line, std::size_t line_no,
                 const std::string& origin) {
  const std::vector<std::string> f = split(line, ',');
  auto fail = [&](const std::string& what) -> ParseError {
    std::ostringstream os;
    os << origin << ":" << line_no << ": " << what;
    return ParseError(os.str());
  };
  if (f.size() != 4 + kFeatureCount)
    throw fail("expected " + std::to_string(4 + kFeatureCount) +
               " fields, got " + std::to_string(f.size()));
  RawRow r;
  try {
    r.row = static_cast<int>(parse_long(f[0], "row"));
    r.col = static_cast<int>(parse_long(f[1], "col"));
    if (r.row < 0 || r.col < 0) throw ParseError("negative cell index");
    if (!trim(f[2]).empty())
      r.zone = static_cast<int>(parse_long(f[2], "zone"));
    if (!trim(f[3]).empty()) {
      const long lab = parse_long(f[3], "label");
      if (lab != 0 && lab != 1)
        throw ParseError("label " + std::to_string(lab) + " outside {0,1}");
      r.label = static_cast<int>(lab);
    }
    for (int i = 0; i < kFeatureCount; ++i) {
      const double v = parse_double(f[4 + i], kFeatureNames[i]);
      if (!std::isfinite(v))
        throw ParseError(std::string("column ") + kFeatureNames[i] +
                         " is not finite");
      r.features[i] = v;
    }
  } catch (const ParseError& e) {
    throw fail(e.what());
  }
  return r;
}

}  // namespace

FeatureTable parse_feature_table_csv(const std::string& text,
                                     const std::string& origin,
                                     const GridSpec* grid_hint) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line))
    throw ParseError(origin + ": empty file, header required");
  ++line_no;
  if (trim(line) != kCsvHeader)
    throw ParseError(origin + ":1: bad header, expected '" +
                     std::string(kCsvHeader) + "'");

  std::vector<RawRow> rows;
  int max_row = -1, max_col = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    RawRow r = parse_row(line, line_no, origin);
    max_row = std::max(max_row, r.row);
    max_col = std::max(max_col, r.col);
    rows.push_back(std::move(r));
  }

  GridSpec grid;
  if (grid_hint) {
    grid = *grid_hint;
  } else {
    // The CSV carries only cell indices; geometry is implicit. Cell size
    // defaults to the tool-wide 150 m and the origin to (0, 0).
    grid.n_rows = max_row + 1;
    grid.n_cols = max_col + 1;
    if (rows.empty()) grid.n_rows = grid.n_cols = 1;
  }
  FeatureTable table(grid);
  std::size_t data_line = 1;
  for (const RawRow& r : rows) {
    ++data_line;
    CellRecord rec;
    rec.row = r.row;
    rec.col = r.col;
    rec.zone = r.zone;
    rec.label = r.label;
    rec.features = r.features;
    try {
      table.add(rec);
    } catch (const Error& e) {
      std::ostringstream os;
      os << origin << ": " << e.what();
      throw ParseError(os.str());
    }
  }
  return table;
}

std::string feature_table_to_csv(const FeatureTable& table) {
  // Row-major cell order; records() already preserves insertion order, but
  // loaders and generators both insert row-major. Sort defensively so the
  // serialized form is a function of the table contents alone.
  std::vector<const CellRecord*> recs;
  recs.reserve(table.size());
  for (const CellRecord& r : table.records()) recs.push_back(&r);
  std::sort(recs.begin(), recs.end(),
            [](const CellRecord* a, const CellRecord* b) {
              return a->row != b->row ? a->row < b->row : a->col < b->col;
            });

  std::ostringstream os;
  os << kCsvHeader << "\n";
  for (const CellRecord* r : recs) {
    os << r->row << "," << r->col << ",";
    if (r->zone) os << *r->zone;
    os << ",";
    if (r->label) os << *r->label;
    for (int i = 0; i < kFeatureCount; ++i)
      os << "," << format_g9(r->features[i]);
    os << "\n";
  }
  return os.str();
}

FeatureTable load_feature_table(const std::string& path) {
  return parse_feature_table_csv(read_text_file(path), path);
}

void save_feature_table(const FeatureTable& table, const std::string& path) {
  write_text_file(path, feature_table_to_csv(table));
}

}  // namespace ismap
