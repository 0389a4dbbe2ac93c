#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ismap/grid.hpp"
#include "ismap/raster.hpp"
#include "ismap/streets.hpp"

namespace ismap {

// Half-open cell footprint [x0, x1) x [y0, y1) in map meters.
struct CellRect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
};

CellRect cell_rect(const GridSpec& grid, int row, int col);

// (nir - red) / (nir + red) per pixel; nodata where either input is nodata
// or the denominator is zero. Inputs must share geometry.
Raster ndvi(const Raster& red, const Raster& nir);

// Fraction of valid in-cell pixels with NDVI >= 0.6 (threshold inclusive).
double vegetation_proportion(const CellRect& cell, const Raster& ndvi_raster);

// Mean over bands of the base-2 Shannon entropy of the 256-bin histogram of
// in-cell values, bins spanning the band's global min..max, normalized by
// log2(256). A band with a degenerate global range contributes 0.
double cell_entropy(const CellRect& cell, const MultibandRaster& image);

// Mean Horn-method slope (degrees) over in-cell pixels. Border pixels use
// edge replication; a pixel only counts when its whole 3x3 window is valid.
double slope(const CellRect& cell, const Raster& dem);

// Mean Zevenbergen-Thorne profile curvature over in-cell pixels. Pixels with
// zero gradient contribute 0.
double profile_convexity(const CellRect& cell, const Raster& dem);

// Length of segment [p1,p2] clipped to the half-open cell rectangle
// (Liang-Barsky). A segment lying exactly on a max edge belongs to the
// neighboring cell and contributes 0 here.
double clip_segment_length(std::pair<double, double> p1,
                           std::pair<double, double> p2,
                           const CellRect& cell);

struct StreetFeatures {
  double node_count = 0.0;
  double total_length = 0.0;
  double deg_mean = 0.0;
  double deg_min = 0.0;
  double deg_max = 0.0;
};

// Node membership by half-open cell containment; degrees are counted over
// the full network. Degree statistics are 0 when the cell has no nodes;
// total_length is the clipped sum either way.
StreetFeatures street_features(const CellRect& cell, const StreetNetwork& net);

using CellMask = std::function<bool(int row, int col)>;

struct BuildReport {
  FeatureTable table;
  std::vector<std::string> warnings;  // dropped cells and why
};

// Computes all 9 features for every masked cell. Cells where any feature is
// undefined (e.g. all-nodata DEM) are omitted and reported in warnings.
// red_index / nir_index select the NDVI input bands.
BuildReport build_feature_table(const MultibandRaster& image,
                                const Raster& dem, const StreetNetwork& net,
                                const GridSpec& grid, int red_index,
                                int nir_index, const CellMask& mask = {});

}  // namespace ismap
