#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "ismap/features.hpp"
#include "ismap/io_util.hpp"
#include "ismap/raster.hpp"

using namespace ismap;

namespace {

const char* kSmallAsc =
    "ncols 3\n"
    "nrows 2\n"
    "xllcorner 10\n"
    "yllcorner 20\n"
    "cellsize 5\n"
    "NODATA_value -9999\n"
    "1 2 3\n"
    "4 5 -9999\n";

std::filesystem::path temp_dir() {
  auto d = std::filesystem::temp_directory_path() / "ismap_raster_tests";
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_SUITE("raster") {

TEST_CASE("esri ascii parse flips rows to south-first") {
  const Raster r = parse_esri_ascii(kSmallAsc, "small");
  CHECK(r.width() == 3);
  CHECK(r.height() == 2);
  CHECK(r.pixel_size() == 5.0);
  CHECK(r.origin_x() == 10.0);
  CHECK(r.origin_y() == 20.0);
  // File top line is the northern row; storage row 0 is the southern row.
  CHECK(r.at(1, 0) == 1.0);
  CHECK(r.at(1, 2) == 3.0);
  CHECK(r.at(0, 0) == 4.0);
  CHECK(r.is_nodata(r.at(0, 2)));
  CHECK(r.valid_at(1, 0));
  CHECK_FALSE(r.valid_at(0, 2));
  CHECK(r.center_x(0) == doctest::Approx(12.5));
  CHECK(r.center_y(0) == doctest::Approx(22.5));
}

TEST_CASE("pixel lookup by coordinate") {
  const Raster r = parse_esri_ascii(kSmallAsc, "small");
  CHECK(r.col_of_x(10.0) == 0);
  CHECK(r.col_of_x(24.999) == 2);
  CHECK(r.col_of_x(25.0) == -1);
  CHECK(r.row_of_y(20.0) == 0);
  CHECK(r.row_of_y(29.999) == 1);
  CHECK(r.row_of_y(19.999) == -1);
}

TEST_CASE("esri ascii write/parse round trip") {
  const Raster r = parse_esri_ascii(kSmallAsc, "small");
  const Raster back = parse_esri_ascii(esri_ascii_to_string(r), "back");
  REQUIRE(back.same_geometry(r));
  for (int i = 0; i < r.height(); ++i)
    for (int j = 0; j < r.width(); ++j)
      CHECK(back.at(i, j) == r.at(i, j));
}

TEST_CASE("esri ascii header errors") {
  CHECK_THROWS_AS(parse_esri_ascii("ncols 3\nnrows 2\n1 2 3\n", "h"),
                  ParseError);
  CHECK_THROWS_AS(
      parse_esri_ascii("ncols 0\nnrows 2\nxllcorner 0\nyllcorner 0\n"
                       "cellsize 1\n",
                       "h"),
      ParseError);
  // Wrong number of values.
  CHECK_THROWS_AS(
      parse_esri_ascii("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\n"
                       "cellsize 1\n1 2 3\n",
                       "h"),
      ParseError);
  // Trailing junk.
  CHECK_THROWS_AS(
      parse_esri_ascii("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\n"
                       "cellsize 1\n1\n2\n",
                       "h"),
      ParseError);
}

TEST_CASE("ndvi formula with nodata propagation") {
  Raster red(2, 1, 1.0, 0.0, 0.0);
  Raster nir(2, 1, 1.0, 0.0, 0.0);
  red.set(0, 0, 1.0);
  nir.set(0, 0, 3.0);
  red.set(0, 1, 0.0);
  nir.set(0, 1, 0.0);  // zero denominator
  const Raster v = ndvi(red, nir);
  CHECK(v.at(0, 0) == doctest::Approx(0.5));
  CHECK(v.is_nodata(v.at(0, 1)));

  red.set(0, 0, red.nodata());
  const Raster v2 = ndvi(red, nir);
  CHECK(v2.is_nodata(v2.at(0, 0)));

  Raster other(3, 1, 1.0, 0.0, 0.0);
  CHECK_THROWS_AS(ndvi(red, other), Error);
}

TEST_CASE("band manifest loads and validates") {
  namespace fs = std::filesystem;
  const fs::path dir = temp_dir();
  Raster band(2, 2, 1.0, 0.0, 0.0);
  band.set(0, 0, 1);
  band.set(0, 1, 2);
  band.set(1, 0, 3);
  band.set(1, 1, 4);
  write_esri_ascii(band, (dir / "b0.asc").string());
  write_esri_ascii(band, (dir / "b1.asc").string());

  SUBCASE("valid manifest with roles") {
    write_text_file((dir / "m.json").string(),
                    "{\"bands\": [\"b0.asc\", \"b1.asc\"], "
                    "\"roles\": {\"red\": 0, \"nir\": 1}}");
    const BandManifest m = read_band_manifest((dir / "m.json").string());
    REQUIRE(m.band_paths.size() == 2);
    CHECK(m.red_index == 0);
    CHECK(m.nir_index == 1);
    const MultibandRaster mb = load_bands(m);
    CHECK(mb.band_count() == 2);
    CHECK(mb.band(0).at(0, 0) == 1.0);  // write/read round-trips exactly
    CHECK(mb.band(0).at(1, 0) == 3.0);
  }
  SUBCASE("missing band file names it") {
    write_text_file((dir / "bad.json").string(),
                    "{\"bands\": [\"missing_band.asc\"], "
                    "\"roles\": {\"red\": 0, \"nir\": 0}}");
    try {
      load_bands(read_band_manifest((dir / "bad.json").string()));
      FAIL("expected an error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("missing_band.asc") !=
            std::string::npos);
    }
  }
  SUBCASE("manifest without roles reports -1") {
    write_text_file((dir / "noroles.json").string(),
                    "{\"bands\": [\"b0.asc\"]}");
    const BandManifest m = read_band_manifest((dir / "noroles.json").string());
    CHECK(m.red_index == -1);
    CHECK(m.nir_index == -1);
  }
  SUBCASE("role index out of range") {
    write_text_file((dir / "range.json").string(),
                    "{\"bands\": [\"b0.asc\"], "
                    "\"roles\": {\"red\": 3, \"nir\": 0}}");
    CHECK_THROWS_AS(read_band_manifest((dir / "range.json").string()),
                    ParseError);
  }
}

TEST_CASE("format_g9 round-trips nine significant digits") {
  CHECK(format_g9(0.1) == "0.1");
  CHECK(format_g9(123456789.0) == "123456789");
  const double v = 0.123456789;
  CHECK(parse_double(format_g9(v), "t") == doctest::Approx(v).epsilon(1e-12));
}

}  // TEST_SUITE
