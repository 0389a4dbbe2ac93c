#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

// Each case gets a throwaway directory; stdout/stderr land in files there.
fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "ismap_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "cannot read " << p.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  REQUIRE(out.good());
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out_path = dir / "stdout.txt";
  const fs::path err_path = dir / "stderr.txt";
  const std::string cmd = std::string(ISMAP_BIN) + " " + args + " >" +
                          out_path.string() + " 2>" + err_path.string();
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

// ESRI ASCII writer for fixtures; value(row, col) gets south-first rows.
void write_asc(const fs::path& p, int ncols, int nrows, double xll, double yll,
               double cellsize,
               const std::function<double(int, int)>& value) {
  std::ostringstream os;
  os << "ncols " << ncols << "\n"
     << "nrows " << nrows << "\n"
     << "xllcorner " << xll << "\n"
     << "yllcorner " << yll << "\n"
     << "cellsize " << cellsize << "\n"
     << "NODATA_value -9999\n";
  for (int i = nrows - 1; i >= 0; --i) {
    for (int j = 0; j < ncols; ++j) os << (j ? " " : "") << value(i, j);
    os << "\n";
  }
  spit(p, os.str());
}

// Deterministic 2x2-cell scene: 20x20 pixel rasters on a 10-unit grid,
// vegetation in the west half, a tilted DEM, three street nodes.
void write_feature_fixture(const fs::path& dir) {
  write_asc(dir / "red.asc", 20, 20, 0, 0, 1, [](int i, int j) {
    return 50.0 + ((i * 7 + j * 3) % 40);
  });
  write_asc(dir / "nir.asc", 20, 20, 0, 0, 1, [](int i, int j) {
    const double red = 50.0 + ((i * 7 + j * 3) % 40);
    return j < 10 ? 5.0 * red : red;  // west half clears the NDVI threshold
  });
  write_asc(dir / "dem.asc", 20, 20, 0, 0, 1,
            [](int i, int j) { return 5.0 + 0.3 * j + 0.1 * i; });
  spit(dir / "manifest.json",
       "{\"bands\": [\"red.asc\", \"nir.asc\"], "
       "\"roles\": {\"red\": 0, \"nir\": 1}}\n");
  spit(dir / "nodes.csv",
       "id,x,y\n"
       "1,3,3\n"
       "2,17,3\n"
       "3,17,17\n");
  spit(dir / "segments.csv",
       "node_a,node_b,wkt_linestring\n"
       "1,2,LINESTRING (3 3, 17 3)\n"
       "2,3,LINESTRING (17 3, 17 17)\n");
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("version flag") {
  const fs::path dir = scratch("version");
  const RunResult r = run_cli("--version", dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("ismap 0.1.0") != std::string::npos);
}

TEST_CASE("no subcommand is a usage error") {
  const fs::path dir = scratch("nosub");
  const RunResult r = run_cli("", dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("synth is deterministic and manifests carry no timestamps") {
  const fs::path dir = scratch("synth_det");
  const std::string common =
      "synth --rows 120 --cols 120 --zones 3 --seed 6 --out ";
  const fs::path a = dir / "a.csv";
  const fs::path b = dir / "b.csv";

  const RunResult r1 = run_cli(common + a.string(), dir);
  REQUIRE(r1.exit_code == 0);
  CHECK(r1.out.find("achieved imbalance") != std::string::npos);
  const std::string manifest_first = slurp(dir / "a.csv.manifest.json");

  const RunResult r2 = run_cli(common + a.string(), dir);
  REQUIRE(r2.exit_code == 0);
  // Identical flags, identical artifacts, byte for byte.
  CHECK(slurp(dir / "a.csv.manifest.json") == manifest_first);

  const RunResult r3 = run_cli(common + b.string(), dir);
  REQUIRE(r3.exit_code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(dir / "a.csv.sidecar.json") == slurp(dir / "b.csv.sidecar.json"));

  const auto m = nlohmann::json::parse(manifest_first);
  CHECK(m.at("tool") == "ismap");
  CHECK(m.at("version") == "0.1.0");
  CHECK(m.at("command") == "synth");
  CHECK(m.at("seeds").at("base") == 6);
  CHECK(m.at("config").at("rows") == 120);
  CHECK(m.contains("formats"));
  CHECK(m.contains("inputs"));
  CHECK(m.at("outputs").size() == 2);
  for (const char* banned : {"time", "date", "stamp"})
    CHECK(manifest_first.find(banned) == std::string::npos);

  const auto sidecar = nlohmann::json::parse(slurp(dir / "a.csv.sidecar.json"));
  const double ratio = sidecar.at("labels").at("achieved_imbalance");
  CHECK(ratio >= 25.0);
  CHECK(ratio <= 35.0);
}

TEST_CASE("synth rejects an out-of-range lambda") {
  const fs::path dir = scratch("synth_bad");
  const RunResult r = run_cli(
      "synth --lambda 1.5 --out " + (dir / "x.csv").string(), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error:") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "x.csv"));
}

TEST_CASE("crossval writes report, summary and manifest") {
  const fs::path dir = scratch("crossval");
  const fs::path table = dir / "city.csv";
  REQUIRE(run_cli("synth --rows 100 --cols 100 --zones 2 --imbalance 8 "
                  "--seed 3 --out " + table.string(), dir).exit_code == 0);

  const fs::path out = dir / "report";
  const RunResult r = run_cli(
      "crossval --table " + table.string() +
      " --model mlp-local --repetitions 1 --epochs 30 --batch-size 16 "
      "--jobs 2 --seed 5 --maps --out " + out.string(), dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("crossval mlp-local:") != std::string::npos);
  CHECK(r.out.find("global:") != std::string::npos);

  const std::string csv = slurp(out / "report_mlp-local.csv");
  CHECK(csv.rfind("zone,repetition,model,precision,recall,f1,kappa\n", 0) == 0);
  std::size_t lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 3);  // header + one fold per zone

  const auto summary =
      nlohmann::json::parse(slurp(out / "summary_mlp-local.json"));
  CHECK(summary.at("model") == "mlp-local");
  CHECK(summary.at("global").at("mean").contains("kappa"));

  const auto manifest =
      nlohmann::json::parse(slurp(out / "manifest_mlp-local.json"));
  CHECK(manifest.at("command") == "crossval");
  CHECK(manifest.at("seeds").at("base") == 5);
  CHECK(manifest.at("inputs").at("table").contains("digest"));
  CHECK(manifest.at("outputs").size() == 3);

  const std::string pgm = slurp(out / "map_mlp-local.pgm");
  CHECK(pgm.rfind("P5\n", 0) == 0);
}

TEST_CASE("crossval rejects an unknown model naming the valid ones") {
  const fs::path dir = scratch("badmodel");
  const fs::path table = dir / "city.csv";
  REQUIRE(run_cli("synth --rows 60 --cols 60 --zones 2 --imbalance 5 "
                  "--out " + table.string(), dir).exit_code == 0);
  const RunResult r = run_cli(
      "crossval --table " + table.string() + " --model resnet --out " +
      (dir / "rep").string(), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("gcn") != std::string::npos);
  CHECK(r.err.find("mlp-local") != std::string::npos);
  CHECK(r.err.find("mlp-neighbors") != std::string::npos);
}

TEST_CASE("crossval on a missing table is a usage error") {
  const fs::path dir = scratch("notable");
  const RunResult r = run_cli(
      "crossval --table " + (dir / "nope.csv").string() +
      " --model gcn --out " + (dir / "rep").string(), dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("crossval zone subset flag is validated") {
  const fs::path dir = scratch("zones");
  const fs::path table = dir / "city.csv";
  REQUIRE(run_cli("synth --rows 90 --cols 90 --zones 3 --imbalance 6 "
                  "--out " + table.string(), dir).exit_code == 0);
  const RunResult bad = run_cli(
      "crossval --table " + table.string() +
      " --model mlp-local --zones 1 --out " + (dir / "r1").string(), dir);
  CHECK(bad.exit_code == 2);

  const RunResult good = run_cli(
      "crossval --table " + table.string() +
      " --model mlp-local --zones 2 --repetitions 1 --epochs 10 "
      "--batch-size 16 --out " + (dir / "r2").string(), dir);
  REQUIRE_MESSAGE(good.exit_code == 0, good.err);
  const auto manifest =
      nlohmann::json::parse(slurp(dir / "r2" / "manifest_mlp-local.json"));
  CHECK(manifest.at("config").at("zones") == nlohmann::json({0, 1}));
}

TEST_CASE("gradcheck passes clean and fails corrupted") {
  const fs::path dir = scratch("gradcheck");
  const RunResult ok = run_cli("gradcheck gcn --seed 7", dir);
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  CHECK(ok.out.find("max relative error") != std::string::npos);

  const RunResult bad = run_cli("gradcheck gcn --seed 4 --corrupt", dir);
  CHECK(bad.exit_code == 1);
  CHECK(bad.out.find("FAIL") != std::string::npos);

  const RunResult usage = run_cli("gradcheck", dir);
  CHECK(usage.exit_code == 2);
}

TEST_CASE("features matches the golden table byte for byte") {
  const fs::path dir = scratch("features");
  write_feature_fixture(dir);
  const fs::path out = dir / "features.csv";
  const RunResult r = run_cli(
      "features --image " + (dir / "manifest.json").string() +
      " --dem " + (dir / "dem.asc").string() +
      " --streets-nodes " + (dir / "nodes.csv").string() +
      " --streets-segments " + (dir / "segments.csv").string() +
      " --origin-x 0 --origin-y 0 --cell-size 10 --rows 2 --cols 2 "
      "--out " + out.string(), dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  CHECK(r.out.find("features: wrote 4 cells") != std::string::npos);

  const std::string golden_path =
      std::string(ISMAP_TEST_DATA) + "/features_golden.csv";
  CHECK(slurp(out) == slurp(golden_path));

  const auto manifest = nlohmann::json::parse(slurp(dir / "features.csv.manifest.json"));
  CHECK(manifest.at("command") == "features");
  CHECK(manifest.at("inputs").at("dem").contains("digest"));
}

TEST_CASE("features without a nir role is rejected") {
  const fs::path dir = scratch("features_norole");
  write_feature_fixture(dir);
  spit(dir / "manifest.json",
       "{\"bands\": [\"red.asc\", \"nir.asc\"], \"roles\": {\"red\": 0}}\n");
  const RunResult r = run_cli(
      "features --image " + (dir / "manifest.json").string() +
      " --dem " + (dir / "dem.asc").string() +
      " --streets-nodes " + (dir / "nodes.csv").string() +
      " --streets-segments " + (dir / "segments.csv").string() +
      " --rows 2 --cols 2 --cell-size 10 --out " + (dir / "f.csv").string(),
      dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("nir") != std::string::npos);
}

TEST_CASE("features outside the raster extent is rejected") {
  const fs::path dir = scratch("features_extent");
  write_feature_fixture(dir);
  const RunResult r = run_cli(
      "features --image " + (dir / "manifest.json").string() +
      " --dem " + (dir / "dem.asc").string() +
      " --streets-nodes " + (dir / "nodes.csv").string() +
      " --streets-segments " + (dir / "segments.csv").string() +
      " --rows 4 --cols 4 --cell-size 10 --out " + (dir / "f.csv").string(),
      dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("config file supplies defaults and flags override it") {
  const fs::path dir = scratch("config");
  const fs::path table = dir / "city.csv";
  REQUIRE(run_cli("synth --rows 80 --cols 80 --zones 2 --imbalance 6 "
                  "--out " + table.string(), dir).exit_code == 0);
  spit(dir / "run.ini",
       "[crossval]\n"
       "seed=9\n"
       "repetitions=1\n"
       "epochs=8\n"
       "batch-size=16\n");

  const std::string base =
      "--config " + (dir / "run.ini").string() + " crossval --table " +
      table.string() + " --model mlp-local --out ";
  const RunResult from_file = run_cli(base + (dir / "rA").string(), dir);
  REQUIRE_MESSAGE(from_file.exit_code == 0, from_file.err);
  const auto ma =
      nlohmann::json::parse(slurp(dir / "rA" / "manifest_mlp-local.json"));
  CHECK(ma.at("seeds").at("base") == 9);
  CHECK(ma.at("config").at("epochs") == 8);

  const RunResult overridden =
      run_cli(base + (dir / "rB").string() + " --seed 11", dir);
  REQUIRE_MESSAGE(overridden.exit_code == 0, overridden.err);
  const auto mb =
      nlohmann::json::parse(slurp(dir / "rB" / "manifest_mlp-local.json"));
  CHECK(mb.at("seeds").at("base") == 11);
  CHECK(mb.at("config").at("epochs") == 8);
}

}  // TEST_SUITE
