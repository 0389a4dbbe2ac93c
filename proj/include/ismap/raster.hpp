#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ismap/errors.hpp"

namespace ismap {

// Single-band raster. Row 0 is the southernmost pixel row, so the center of
// pixel (i, j) sits at origin + (j + 0.5, i + 0.5) * pixel_size. ESRI ASCII
// files store rows north-first; the reader flips them into this convention.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, double pixel_size, double origin_x,
         double origin_y, double nodata = -9999.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double pixel_size() const { return pixel_size_; }
  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  double nodata() const { return nodata_; }

  double at(int row, int col) const { return values_[idx(row, col)]; }
  void set(int row, int col, double v) { values_[idx(row, col)] = v; }
  bool is_nodata(double v) const { return v == nodata_ || std::isnan(v); }
  bool valid_at(int row, int col) const { return !is_nodata(at(row, col)); }

  double center_x(int col) const { return origin_x_ + (col + 0.5) * pixel_size_; }
  double center_y(int row) const { return origin_y_ + (row + 0.5) * pixel_size_; }

  // Pixel row/col whose cell contains (x, y); -1 when outside.
  int row_of_y(double y) const;
  int col_of_x(double x) const;

  bool same_geometry(const Raster& other) const;

  // Extent as [x0, x1) x [y0, y1).
  double extent_x0() const { return origin_x_; }
  double extent_y0() const { return origin_y_; }
  double extent_x1() const { return origin_x_ + width_ * pixel_size_; }
  double extent_y1() const { return origin_y_ + height_ * pixel_size_; }

 private:
  std::size_t idx(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int width_ = 0;
  int height_ = 0;
  double pixel_size_ = 1.0;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double nodata_ = -9999.0;
  std::vector<double> values_;
};

// Ordered list of bands sharing one geometry.
class MultibandRaster {
 public:
  void add_band(Raster band);
  const Raster& band(int i) const { return bands_.at(i); }
  int band_count() const { return static_cast<int>(bands_.size()); }
  bool empty() const { return bands_.empty(); }

 private:
  std::vector<Raster> bands_;
};

// ESRI ASCII grid I/O (ncols/nrows/xllcorner/yllcorner/cellsize/NODATA_value
// header, then nrows lines of ncols values, top row first).
Raster read_esri_ascii(const std::string& path);
Raster parse_esri_ascii(const std::string& text, const std::string& origin);
void write_esri_ascii(const Raster& r, const std::string& path);
std::string esri_ascii_to_string(const Raster& r);

// Band manifest: JSON {"bands": ["b1.asc", ...], "roles": {"red": i,
// "nir": j}}. Band paths are resolved relative to the manifest's directory.
struct BandManifest {
  std::vector<std::string> band_paths;  // resolved
  int red_index = -1;                   // -1 when the manifest names no role
  int nir_index = -1;
};

BandManifest read_band_manifest(const std::string& path);
MultibandRaster load_bands(const BandManifest& manifest);

}  // namespace ismap
