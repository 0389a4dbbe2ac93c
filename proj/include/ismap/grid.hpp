#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ismap/errors.hpp"

namespace ismap {

inline constexpr int kFeatureCount = 9;

// Canonical feature order; indices 0..8 everywhere in the tool.
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "veg_prop",     "entropy",       "slope",    "profile_convexity",
    "street_nodes", "street_length", "deg_mean", "deg_min",
    "deg_max"};

// Regular orthogonal grid. Cell (r, c) covers the half-open square
// [origin_x + c*s, origin_x + (c+1)*s) x [origin_y + r*s, origin_y + (r+1)*s),
// so every point belongs to exactly one cell. Row 0 is the southernmost row.
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 150.0;
  int n_rows = 0;
  int n_cols = 0;

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < n_rows && col >= 0 && col < n_cols;
  }
  void validate() const;
};

struct CellRecord {
  int row = 0;
  int col = 0;
  std::array<double, kFeatureCount> features{};
  std::optional<int> label;  // 1 = favela, 0 = urban non-favela
  std::optional<int> zone;
};

// The 8 king-adjacent indices of (row, col) that fall inside the grid, in
// fixed row-major window order (center excluded). Throws BoundsError when
// (row, col) itself is outside.
std::vector<std::pair<int, int>> neighbors_king(int row, int col,
                                                const GridSpec& grid);

// All 8 window offsets in the same fixed order, for callers that need the
// absent positions too (zero-padded baselines).
inline constexpr std::array<std::pair<int, int>, 8> kKingOffsets = {{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

// Immutable after construction; cells may be absent (holes in the urban
// mask) and absent cells never appear as graph nodes.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(GridSpec grid) : grid_(grid) { grid_.validate(); }

  const GridSpec& grid() const { return grid_; }

  // Throws on duplicate or out-of-bounds (row, col).
  void add(const CellRecord& rec);

  const CellRecord* find(int row, int col) const;
  bool has(int row, int col) const { return find(row, col) != nullptr; }

  // Records in row-major order.
  const std::vector<CellRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  // Distinct zone ids present, ascending.
  std::vector<int> zones() const;

  // Returns a copy with every record's features replaced by f(record).
  template <typename F>
  FeatureTable transformed(F&& f) const {
    FeatureTable out(grid_);
    for (const CellRecord& r : records_) {
      CellRecord t = r;
      t.features = f(r);
      out.add(t);
    }
    return out;
  }

 private:
  std::uint64_t key(int row, int col) const {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
           static_cast<std::uint32_t>(col);
  }

  GridSpec grid_;
  std::vector<CellRecord> records_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

struct ClassCounts {
  std::size_t n_favela = 0;
  std::size_t n_nonfavela = 0;
  std::size_t n_unlabeled = 0;
};

ClassCounts class_counts(const FeatureTable& table);

// Canonical CSV, header:
// row,col,zone,label,veg_prop,...,deg_max
// zone and label may be empty. Parse errors name the 1-based line number.
FeatureTable load_feature_table(const std::string& path);
void save_feature_table(const FeatureTable& table, const std::string& path);

// In-memory variants (used by the loaders and by tests).
FeatureTable parse_feature_table_csv(const std::string& text,
                                     const std::string& origin_name,
                                     const GridSpec* grid_hint = nullptr);
std::string feature_table_to_csv(const FeatureTable& table);

}  // namespace ismap
