#include "ismap/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ismap {

namespace {

constexpr double kDegPerRad = 57.295779513082320876798154814105;
constexpr int kEntropyBins = 256;
constexpr double kNdviVegThreshold = 0.6;

// Loose pixel index range for a coordinate interval; each candidate center
// is then tested exactly against the half-open rect.
struct PixelSpan {
  int lo, hi;  // inclusive candidate range, may be empty (lo > hi)
};

PixelSpan span_for(double c0, double c1, double origin, double pixel_size,
                   int count) {
  int lo = static_cast<int>(std::floor((c0 - origin) / pixel_size)) - 1;
  int hi = static_cast<int>(std::ceil((c1 - origin) / pixel_size)) + 1;
  lo = std::max(lo, 0);
  hi = std::min(hi, count - 1);
  return {lo, hi};
}

// Calls f(row, col) for every pixel of r whose center lies in the cell.
template <typename F>
void for_each_pixel_in(const CellRect& cell, const Raster& r, F&& f) {
  const PixelSpan rows =
      span_for(cell.y0, cell.y1, r.origin_y(), r.pixel_size(), r.height());
  const PixelSpan cols =
      span_for(cell.x0, cell.x1, r.origin_x(), r.pixel_size(), r.width());
  for (int i = rows.lo; i <= rows.hi; ++i) {
    const double cy = r.center_y(i);
    if (cy < cell.y0 || cy >= cell.y1) continue;
    for (int j = cols.lo; j <= cols.hi; ++j) {
      const double cx = r.center_x(j);
      if (cx < cell.x0 || cx >= cell.x1) continue;
      f(i, j);
    }
  }
}

// 3x3 window with edge replication. Returns false when any entry is nodata.
bool window3x3(const Raster& r, int row, int col, double z[3][3]) {
  for (int dr = -1; dr <= 1; ++dr) {
    const int rr = std::clamp(row + dr, 0, r.height() - 1);
    for (int dc = -1; dc <= 1; ++dc) {
      const int cc = std::clamp(col + dc, 0, r.width() - 1);
      const double v = r.at(rr, cc);
      if (r.is_nodata(v)) return false;
      z[dr + 1][dc + 1] = v;
    }
  }
  return true;
}

}  // namespace

CellRect cell_rect(const GridSpec& grid, int row, int col) {
  if (!grid.in_bounds(row, col))
    throw BoundsError("cell_rect: index outside grid");
  CellRect rect;
  rect.x0 = grid.origin_x + col * grid.cell_size;
  rect.y0 = grid.origin_y + row * grid.cell_size;
  rect.x1 = rect.x0 + grid.cell_size;
  rect.y1 = rect.y0 + grid.cell_size;
  return rect;
}

Raster ndvi(const Raster& red, const Raster& nir) {
  if (!red.same_geometry(nir))
    throw ShapeError("ndvi: red and nir rasters differ in geometry");
  Raster out(red.width(), red.height(), red.pixel_size(), red.origin_x(),
             red.origin_y(), red.nodata());
  for (int i = 0; i < red.height(); ++i) {
    for (int j = 0; j < red.width(); ++j) {
      const double r = red.at(i, j);
      const double n = nir.at(i, j);
      if (red.is_nodata(r) || nir.is_nodata(n) || n + r == 0.0) continue;
      out.set(i, j, (n - r) / (n + r));
    }
  }
  return out;
}

double vegetation_proportion(const CellRect& cell, const Raster& ndvi_raster) {
  long valid = 0, veg = 0;
  for_each_pixel_in(cell, ndvi_raster, [&](int i, int j) {
    const double v = ndvi_raster.at(i, j);
    if (ndvi_raster.is_nodata(v)) return;
    ++valid;
    if (v >= kNdviVegThreshold) ++veg;
  });
  if (valid == 0)
    throw FeatureUndefinedError("vegetation_proportion: no valid pixels");
  return static_cast<double>(veg) / static_cast<double>(valid);
}

namespace {

void band_range(const Raster& band, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < band.height(); ++i)
    for (int j = 0; j < band.width(); ++j) {
      const double v = band.at(i, j);
      if (band.is_nodata(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
}

double band_entropy(const CellRect& cell, const Raster& band, double lo,
                    double hi) {
  if (!(hi > lo)) return 0.0;  // degenerate global range
  long counts[kEntropyBins] = {0};
  long total = 0;
  const double scale = kEntropyBins / (hi - lo);
  for_each_pixel_in(cell, band, [&](int i, int j) {
    const double v = band.at(i, j);
    if (band.is_nodata(v)) return;
    int bin = static_cast<int>((v - lo) * scale);
    bin = std::clamp(bin, 0, kEntropyBins - 1);
    ++counts[bin];
    ++total;
  });
  if (total == 0)
    throw FeatureUndefinedError("cell_entropy: band has no valid pixels");
  double h = 0.0;
  for (long c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h / 8.0;  // log2(256)
}

}  // namespace

double cell_entropy(const CellRect& cell, const MultibandRaster& image) {
  if (image.empty()) throw ShapeError("cell_entropy: no bands");
  double sum = 0.0;
  for (int b = 0; b < image.band_count(); ++b) {
    double lo, hi;
    band_range(image.band(b), lo, hi);
    sum += band_entropy(cell, image.band(b), lo, hi);
  }
  return sum / image.band_count();
}

namespace {

// Horn's method on the replicated 3x3 window. z is indexed [north..south]
// x [west..east] as filled by window3x3 with raster row 0 in the south:
// z[2][*] is the north row.
void horn_gradient(const double z[3][3], double pixel_size, double& gx,
                   double& gy) {
  const double a = z[2][0], b = z[2][1], c = z[2][2];
  const double d = z[1][0], f = z[1][2];
  const double g = z[0][0], h = z[0][1], i = z[0][2];
  gx = ((c + 2.0 * f + i) - (a + 2.0 * d + g)) / (8.0 * pixel_size);
  gy = ((a + 2.0 * b + c) - (g + 2.0 * h + i)) / (8.0 * pixel_size);
}

}  // namespace

double slope(const CellRect& cell, const Raster& dem) {
  double sum = 0.0;
  long n = 0;
  for_each_pixel_in(cell, dem, [&](int i, int j) {
    double z[3][3];
    if (!window3x3(dem, i, j, z)) return;
    double gx, gy;
    horn_gradient(z, dem.pixel_size(), gx, gy);
    sum += std::atan(std::sqrt(gx * gx + gy * gy)) * kDegPerRad;
    ++n;
  });
  if (n == 0) throw FeatureUndefinedError("slope: no valid pixels");
  return sum / static_cast<double>(n);
}

double profile_convexity(const CellRect& cell, const Raster& dem) {
  const double L = dem.pixel_size();
  double sum = 0.0;
  long n = 0;
  for_each_pixel_in(cell, dem, [&](int i, int j) {
    double z[3][3];
    if (!window3x3(dem, i, j, z)) return;
    // Zevenbergen-Thorne quadratic fit on the window. Central differences:
    const double e = z[1][1];
    const double north = z[2][1], south = z[0][1];
    const double west = z[1][0], east = z[1][2];
    const double nw = z[2][0], ne = z[2][2], sw = z[0][0], se = z[0][2];
    const double D = (east - west) / (2.0 * L);
    const double E = (north - south) / (2.0 * L);
    const double r = (west - 2.0 * e + east) / (L * L);
    const double t = (north - 2.0 * e + south) / (L * L);
    const double s = (ne - nw - se + sw) / (4.0 * L * L);
    const double g2 = D * D + E * E;
    double curv = 0.0;
    if (g2 > 0.0)
      curv = -2.0 * (r * D * D + t * E * E + 2.0 * s * D * E) /
             (g2 * (1.0 + g2));
    sum += curv;
    ++n;
  });
  if (n == 0)
    throw FeatureUndefinedError("profile_convexity: no valid pixels");
  return sum / static_cast<double>(n);
}

double clip_segment_length(std::pair<double, double> p1,
                           std::pair<double, double> p2,
                           const CellRect& cell) {
  const double dx = p2.first - p1.first;
  const double dy = p2.second - p1.second;
  double t0 = 0.0, t1 = 1.0;

  // Liang-Barsky parameter clipping. `open_max` marks the half-open edges:
  // a segment running exactly along a max edge belongs to the next cell.
  auto clip_edge = [&](double p, double q, bool open_max) -> bool {
    if (p == 0.0) return open_max ? q > 0.0 : q >= 0.0;
    const double t = q / p;
    if (p < 0.0) {
      if (t > t1) return false;
      if (t > t0) t0 = t;
    } else {
      if (t < t0) return false;
      if (t < t1) t1 = t;
    }
    return true;
  };

  if (!clip_edge(-dx, p1.first - cell.x0, false)) return 0.0;
  if (!clip_edge(dx, cell.x1 - p1.first, true)) return 0.0;
  if (!clip_edge(-dy, p1.second - cell.y0, false)) return 0.0;
  if (!clip_edge(dy, cell.y1 - p1.second, true)) return 0.0;

  if (t1 <= t0) return 0.0;
  return (t1 - t0) * std::hypot(dx, dy);
}

StreetFeatures street_features(const CellRect& cell,
                               const StreetNetwork& net) {
  StreetFeatures out;

  for (const StreetSegment& s : net.segments())
    for (std::size_t k = 0; k + 1 < s.polyline.size(); ++k)
      out.total_length +=
          clip_segment_length(s.polyline[k], s.polyline[k + 1], cell);

  long n = 0;
  double deg_sum = 0.0;
  double deg_min = std::numeric_limits<double>::infinity();
  double deg_max = -std::numeric_limits<double>::infinity();
  for (const StreetNode& node : net.nodes()) {
    if (!cell.contains(node.x, node.y)) continue;
    const double deg = net.degree(node.id);
    ++n;
    deg_sum += deg;
    deg_min = std::min(deg_min, deg);
    deg_max = std::max(deg_max, deg);
  }
  out.node_count = static_cast<double>(n);
  if (n > 0) {
    out.deg_mean = deg_sum / static_cast<double>(n);
    out.deg_min = deg_min;
    out.deg_max = deg_max;
  }
  return out;
}

namespace {

bool raster_covers(const Raster& r, const GridSpec& grid) {
  const double gx0 = grid.origin_x;
  const double gy0 = grid.origin_y;
  const double gx1 = grid.origin_x + grid.n_cols * grid.cell_size;
  const double gy1 = grid.origin_y + grid.n_rows * grid.cell_size;
  return r.extent_x0() <= gx0 && r.extent_y0() <= gy0 &&
         r.extent_x1() >= gx1 && r.extent_y1() >= gy1;
}

}  // namespace

BuildReport build_feature_table(const MultibandRaster& image,
                                const Raster& dem, const StreetNetwork& net,
                                const GridSpec& grid, int red_index,
                                int nir_index, const CellMask& mask) {
  grid.validate();
  if (image.empty()) throw ConfigError("build_feature_table: no image bands");
  if (red_index < 0 || red_index >= image.band_count() || nir_index < 0 ||
      nir_index >= image.band_count())
    throw ConfigError("build_feature_table: red/nir band index out of range");
  if (!raster_covers(image.band(0), grid))
    throw ExtentError("image does not cover the grid extent");
  if (!raster_covers(dem, grid))
    throw ExtentError("DEM does not cover the grid extent");

  const Raster ndvi_raster = ndvi(image.band(red_index), image.band(nir_index));

  std::vector<std::pair<double, double>> ranges(image.band_count());
  for (int b = 0; b < image.band_count(); ++b)
    band_range(image.band(b), ranges[b].first, ranges[b].second);

  BuildReport report{FeatureTable(grid), {}};
  for (int row = 0; row < grid.n_rows; ++row) {
    for (int col = 0; col < grid.n_cols; ++col) {
      if (mask && !mask(row, col)) continue;
      const CellRect rect = cell_rect(grid, row, col);
      CellRecord rec;
      rec.row = row;
      rec.col = col;
      try {
        rec.features[0] = vegetation_proportion(rect, ndvi_raster);
        double esum = 0.0;
        for (int b = 0; b < image.band_count(); ++b)
          esum += band_entropy(rect, image.band(b), ranges[b].first,
                               ranges[b].second);
        rec.features[1] = esum / image.band_count();
        rec.features[2] = slope(rect, dem);
        rec.features[3] = profile_convexity(rect, dem);
        const StreetFeatures sf = street_features(rect, net);
        rec.features[4] = sf.node_count;
        rec.features[5] = sf.total_length;
        rec.features[6] = sf.deg_mean;
        rec.features[7] = sf.deg_min;
        rec.features[8] = sf.deg_max;
      } catch (const FeatureUndefinedError& e) {
        std::ostringstream os;
        os << "cell (" << row << "," << col << ") dropped: " << e.what();
        report.warnings.push_back(os.str());
        continue;
      }
      report.table.add(rec);
    }
  }
  return report;
}

}  // namespace ismap
