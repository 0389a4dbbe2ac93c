#include "ismap/raster.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "ismap/io_util.hpp"

namespace ismap {

Raster::Raster(int width, int height, double pixel_size, double origin_x,
               double origin_y, double nodata)
    : width_(width),
      height_(height),
      pixel_size_(pixel_size),
      origin_x_(origin_x),
      origin_y_(origin_y),
      nodata_(nodata) {
  if (width <= 0 || height <= 0)
    throw ConfigError("raster dimensions must be positive");
  if (!(pixel_size > 0.0))
    throw ConfigError("raster pixel size must be > 0");
  values_.assign(static_cast<std::size_t>(width) * height, nodata_);
}

int Raster::row_of_y(double y) const {
  const double t = (y - origin_y_) / pixel_size_;
  if (t < 0.0 || t >= height_) return -1;
  return static_cast<int>(t);
}

int Raster::col_of_x(double x) const {
  const double t = (x - origin_x_) / pixel_size_;
  if (t < 0.0 || t >= width_) return -1;
  return static_cast<int>(t);
}

bool Raster::same_geometry(const Raster& other) const {
  return width_ == other.width_ && height_ == other.height_ &&
         pixel_size_ == other.pixel_size_ && origin_x_ == other.origin_x_ &&
         origin_y_ == other.origin_y_;
}

void MultibandRaster::add_band(Raster band) {
  if (!bands_.empty() && !bands_.front().same_geometry(band))
    throw ShapeError("band geometry differs from the first band");
  bands_.push_back(std::move(band));
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Raster parse_esri_ascii(const std::string& text, const std::string& origin) {
  std::istringstream in(text);

  long ncols = -1, nrows = -1;
  double xll = 0.0, yll = 0.0, cellsize = 0.0, nodata = -9999.0;
  bool have_xll = false, have_yll = false, have_cell = false;

  // Header: key/value lines until the first line starting with a number.
  std::string key;
  while (true) {
    std::streampos pos = in.tellg();
    if (!(in >> key)) throw ParseError(origin + ": truncated header");
    const std::string k = lower(key);
    if (k == "ncols") {
      if (!(in >> ncols)) throw ParseError(origin + ": bad ncols");
    } else if (k == "nrows") {
      if (!(in >> nrows)) throw ParseError(origin + ": bad nrows");
    } else if (k == "xllcorner") {
      if (!(in >> xll)) throw ParseError(origin + ": bad xllcorner");
      have_xll = true;
    } else if (k == "yllcorner") {
      if (!(in >> yll)) throw ParseError(origin + ": bad yllcorner");
      have_yll = true;
    } else if (k == "cellsize") {
      if (!(in >> cellsize)) throw ParseError(origin + ": bad cellsize");
      have_cell = true;
    } else if (k == "nodata_value") {
      if (!(in >> nodata)) throw ParseError(origin + ": bad NODATA_value");
    } else {
      // Start of the data block.
      in.clear();
      in.seekg(pos);
      break;
    }
  }

  if (ncols <= 0 || nrows <= 0)
    throw ParseError(origin + ": ncols/nrows missing or not positive");
  if (!have_xll || !have_yll || !have_cell)
    throw ParseError(origin + ": xllcorner/yllcorner/cellsize required");
  if (!(cellsize > 0.0)) throw ParseError(origin + ": cellsize must be > 0");

  Raster r(static_cast<int>(ncols), static_cast<int>(nrows), cellsize, xll,
           yll, nodata);
  // File rows run north to south; raster row 0 is the southernmost.
  for (long i = 0; i < nrows; ++i) {
    const int row = static_cast<int>(nrows - 1 - i);
    for (long j = 0; j < ncols; ++j) {
      double v;
      if (!(in >> v)) {
        std::ostringstream os;
        os << origin << ": data ended early at file row " << i << ", col "
           << j;
        throw ParseError(os.str());
      }
      r.set(row, static_cast<int>(j), v);
    }
  }
  double extra;
  if (in >> extra)
    throw ParseError(origin + ": trailing data after " +
                     std::to_string(nrows * ncols) + " values");
  return r;
}

Raster read_esri_ascii(const std::string& path) {
  return parse_esri_ascii(read_text_file(path), path);
}

std::string esri_ascii_to_string(const Raster& r) {
  std::ostringstream os;
  os << "ncols " << r.width() << "\n";
  os << "nrows " << r.height() << "\n";
  os << "xllcorner " << format_g9(r.origin_x()) << "\n";
  os << "yllcorner " << format_g9(r.origin_y()) << "\n";
  os << "cellsize " << format_g9(r.pixel_size()) << "\n";
  os << "NODATA_value " << format_g9(r.nodata()) << "\n";
  for (int row = r.height() - 1; row >= 0; --row) {
    for (int col = 0; col < r.width(); ++col) {
      if (col) os << ' ';
      os << format_g9(r.at(row, col));
    }
    os << "\n";
  }
  return os.str();
}

void write_esri_ascii(const Raster& r, const std::string& path) {
  write_text_file(path, esri_ascii_to_string(r));
}

namespace {

std::string dirname_of(const std::string& path) {
  const std::size_t pos = path.find_last_of("/\\");
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

}  // namespace

BandManifest read_band_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!j.contains("bands") || !j["bands"].is_array() || j["bands"].empty())
    throw ParseError(path + ": manifest needs a non-empty 'bands' array");

  BandManifest m;
  const std::string dir = dirname_of(path);
  for (const auto& b : j["bands"]) {
    if (!b.is_string())
      throw ParseError(path + ": band entries must be file names");
    std::string p = b.get<std::string>();
    if (!p.empty() && p.front() != '/') p = dir + "/" + p;
    m.band_paths.push_back(p);
  }
  if (j.contains("roles")) {
    const auto& roles = j["roles"];
    auto role_index = [&](const char* name) -> int {
      if (!roles.contains(name)) return -1;
      const int idx = roles[name].get<int>();
      if (idx < 0 || idx >= static_cast<int>(m.band_paths.size()))
        throw ParseError(path + ": role '" + name +
                         "' references band index " + std::to_string(idx) +
                         " outside the manifest");
      return idx;
    };
    m.red_index = role_index("red");
    m.nir_index = role_index("nir");
  }
  return m;
}

MultibandRaster load_bands(const BandManifest& manifest) {
  MultibandRaster mb;
  for (const std::string& p : manifest.band_paths) mb.add_band(read_esri_ascii(p));
  return mb;
}

}  // namespace ismap
