// ismap: informal-settlement mapping tool.
//
// Subcommands:
//   features   raster + street inputs -> canonical feature-table CSV
//   synth      seeded synthetic city -> feature-table CSV + sidecar
//   crossval   feature table -> spatial cross-validation report
//   gradcheck  finite-difference check of a model's backward pass
//
// Exit codes: 0 success, 1 runtime/experiment failure, 2 usage or bad input.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ismap/errors.hpp"
#include "ismap/experiment.hpp"
#include "ismap/features.hpp"
#include "ismap/grid.hpp"
#include "ismap/io_util.hpp"
#include "ismap/models.hpp"
#include "ismap/raster.hpp"
#include "ismap/streets.hpp"
#include "ismap/synthetic.hpp"
#include "ismap/version.hpp"

namespace {

using nlohmann::ordered_json;

std::string version_string() {
  std::string s = "ismap ";
  s += ismap::kVersion;
  s += " (formats: table-csv " + std::to_string(ismap::kTableCsvFormat);
  s += ", report " + std::to_string(ismap::kReportFormat);
  s += ", checkpoint " + std::to_string(ismap::kCheckpointFormat) + ")";
  return s;
}

// Every command that produces artifacts writes one manifest next to them.
// The manifest pins the full configuration, the seeds, and a digest of every
// input file, and lists every artifact the run produced; an artifact's
// manifest is found by the fixed naming scheme (<primary output> +
// ".manifest.json", or manifest_<model>.json inside a report directory).
// No timestamps: reruns with identical flags and inputs are byte-identical.
ordered_json manifest_skeleton(const std::string& command) {
  ordered_json m;
  m["tool"] = "ismap";
  m["version"] = ismap::kVersion;
  m["formats"] = {{"table_csv", ismap::kTableCsvFormat},
                  {"report", ismap::kReportFormat},
                  {"checkpoint", ismap::kCheckpointFormat}};
  m["command"] = command;
  return m;
}

ordered_json input_entry(const std::string& path) {
  return ordered_json{{"path", path}, {"digest", ismap::file_digest_hex(path)}};
}

void write_manifest(const ordered_json& manifest, const std::string& path) {
  ismap::write_text_file(path, manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// features

struct FeaturesArgs {
  std::string image_manifest;
  std::string dem;
  std::string streets_nodes;
  std::string streets_segments;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 150.0;
  int rows = 0;
  int cols = 0;
  std::string out;
};

int run_features(const FeaturesArgs& a) {
  ismap::GridSpec grid;
  grid.origin_x = a.origin_x;
  grid.origin_y = a.origin_y;
  grid.cell_size = a.cell_size;
  grid.n_rows = a.rows;
  grid.n_cols = a.cols;
  grid.validate();

  const ismap::BandManifest bands = ismap::read_band_manifest(a.image_manifest);
  if (bands.red_index < 0 || bands.nir_index < 0)
    throw ismap::ConfigError("band manifest " + a.image_manifest +
                             " must assign the \"red\" and \"nir\" roles");
  const ismap::MultibandRaster image = ismap::load_bands(bands);
  const ismap::Raster dem = ismap::read_esri_ascii(a.dem);
  const ismap::StreetNetwork net =
      ismap::load_street_network(a.streets_nodes, a.streets_segments);

  const ismap::BuildReport built = ismap::build_feature_table(
      image, dem, net, grid, bands.red_index, bands.nir_index);
  for (const std::string& w : built.warnings)
    std::cerr << "warning: " << w << "\n";
  ismap::save_feature_table(built.table, a.out);

  ordered_json m = manifest_skeleton("features");
  m["config"] = {{"origin_x", a.origin_x}, {"origin_y", a.origin_y},
                 {"cell_size", a.cell_size}, {"rows", a.rows},
                 {"cols", a.cols},          {"red_band", bands.red_index},
                 {"nir_band", bands.nir_index}};
  m["seeds"] = ordered_json::object();
  ordered_json inputs;
  inputs["image_manifest"] = input_entry(a.image_manifest);
  for (std::size_t i = 0; i < bands.band_paths.size(); ++i)
    inputs["band_" + std::to_string(i)] = input_entry(bands.band_paths[i]);
  inputs["dem"] = input_entry(a.dem);
  inputs["streets_nodes"] = input_entry(a.streets_nodes);
  inputs["streets_segments"] = input_entry(a.streets_segments);
  m["inputs"] = inputs;
  m["outputs"] = {a.out};
  write_manifest(m, a.out + ".manifest.json");

  std::cout << "features: wrote " << built.table.size() << " cells to "
            << a.out << " (" << built.warnings.size() << " dropped)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  ismap::SynthConfig config;
  std::string out;
};

int run_synth(const SynthArgs& a) {
  a.config.validate();
  const ismap::FeatureTable table = ismap::generate_city(a.config);
  ismap::save_feature_table(table, a.out);
  const std::string sidecar_path = a.out + ".sidecar.json";
  ismap::write_text_file(sidecar_path, ismap::synth_sidecar_json(a.config, table));

  ordered_json m = manifest_skeleton("synth");
  m["config"] = {{"rows", a.config.n_rows},       {"cols", a.config.n_cols},
                 {"zones", a.config.n_zones},     {"imbalance", a.config.imbalance},
                 {"lambda", a.config.lambda},     {"sigma", a.config.sigma}};
  m["seeds"] = {{"base", a.config.seed}};
  m["inputs"] = ordered_json::object();
  m["outputs"] = {a.out, sidecar_path};
  write_manifest(m, a.out + ".manifest.json");

  const ismap::SynthInfo info = ismap::synth_info(table);
  std::cout << "synth: wrote " << info.n_cells << " cells (" << info.n_favela
            << " favela, achieved imbalance "
            << ismap::format_g9(info.achieved_imbalance) << ") to " << a.out
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// crossval

struct CrossvalArgs {
  std::string table;
  std::string model;
  std::uint64_t seed = 1;
  int repetitions = 10;
  int zones = 0;  // 0 = every zone in the table
  int jobs = 1;
  int epochs = 400;
  int batch_size = 32;
  double learning_rate = 0.001;
  bool natural_test = false;
  bool no_standardize = false;
  bool maps = false;
  std::string out;
};

int run_crossval(const CrossvalArgs& a) {
  const ismap::ModelKind kind = ismap::parse_model_kind(a.model);
  const ismap::FeatureTable table = ismap::load_feature_table(a.table);

  std::vector<int> zones = table.zones();
  if (zones.size() < 2)
    throw ismap::ConfigError("cross-validation needs at least 2 zones, table has " +
                             std::to_string(zones.size()));
  if (a.zones < 0 || a.zones == 1 ||
      a.zones > static_cast<int>(zones.size()))
    throw ismap::ConfigError(
        "--zones must be 0 (all) or 2.." + std::to_string(zones.size()) +
        " for this table");
  if (a.zones >= 2) zones.resize(static_cast<std::size_t>(a.zones));

  ismap::CrossvalConfig cc;
  cc.train.epochs = a.epochs;
  cc.train.batch_size = a.batch_size;
  cc.train.learning_rate = a.learning_rate;
  cc.train.seed = a.seed;
  cc.train.standardize = !a.no_standardize;
  cc.train.validate();
  cc.repetitions = a.repetitions;
  cc.jobs = a.jobs;
  cc.natural_test = a.natural_test;
  cc.collect_maps = a.maps;
  if (cc.repetitions < 1) throw ismap::ConfigError("--repetitions must be >= 1");
  if (cc.jobs < 1) throw ismap::ConfigError("--jobs must be >= 1");

  const ismap::MetricsReport report =
      ismap::spatial_crossval(table, zones, kind, cc);

  std::filesystem::create_directories(a.out);
  const std::string tag = ismap::model_kind_name(kind);
  const std::string report_path = a.out + "/report_" + tag + ".csv";
  const std::string summary_path = a.out + "/summary_" + tag + ".json";
  const std::string manifest_path = a.out + "/manifest_" + tag + ".json";
  ismap::write_text_file(report_path, ismap::report_to_csv(report));
  ismap::write_text_file(summary_path, ismap::report_summary_json(report));
  std::vector<std::string> outputs = {report_path, summary_path};
  if (a.maps) {
    const std::string map_path = a.out + "/map_" + tag + ".pgm";
    ismap::write_text_file(map_path,
                           ismap::prediction_map_pgm(report, table.grid()));
    outputs.push_back(map_path);
  }

  ordered_json m = manifest_skeleton("crossval");
  m["config"] = {{"model", tag},
                 {"repetitions", a.repetitions},
                 {"zones", zones},
                 {"jobs", a.jobs},
                 {"epochs", a.epochs},
                 {"batch_size", a.batch_size},
                 {"learning_rate", a.learning_rate},
                 {"natural_test", a.natural_test},
                 {"standardize", !a.no_standardize},
                 {"maps", a.maps}};
  m["seeds"] = {{"base", a.seed}};
  ordered_json inputs;
  inputs["table"] = input_entry(a.table);
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  write_manifest(m, manifest_path);

  const int n_folds = static_cast<int>(report.folds.size());
  std::cout << "crossval " << tag << ": seed=" << a.seed << " zones="
            << zones.size() << " repetitions=" << a.repetitions << " folds="
            << n_folds << " failed=" << report.failed_folds << "\n";
  for (const ismap::ZoneSummary& z : report.per_zone)
    std::cout << "  zone " << z.zone << ": kappa "
              << ismap::format_g9(z.stats.mean[ismap::kKappa]) << " +- "
              << ismap::format_g9(z.stats.stdev[ismap::kKappa]) << " (n="
              << z.stats.n << ")\n";
  std::cout << "  global: precision "
            << ismap::format_g9(report.global.mean[ismap::kPrecision])
            << ", recall " << ismap::format_g9(report.global.mean[ismap::kRecall])
            << ", f1 " << ismap::format_g9(report.global.mean[ismap::kF1])
            << ", kappa " << ismap::format_g9(report.global.mean[ismap::kKappa])
            << " +- " << ismap::format_g9(report.global.stdev[ismap::kKappa])
            << "\n";
  for (const std::string& p : outputs) std::cout << "  wrote " << p << "\n";
  if (report.failed_folds > 0) {
    for (const ismap::FoldResult& f : report.folds)
      if (!f.ok)
        std::cerr << "fold zone=" << f.zone << " repetition=" << f.repetition
                  << " failed: " << f.error << "\n";
  }
  return report.failed_folds < n_folds ? 0 : 1;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  std::string model;
  std::uint64_t seed = 1;
  bool corrupt = false;  // negative-control test hook
};

int run_gradcheck(const GradcheckArgs& a) {
  const ismap::ModelKind kind = ismap::parse_model_kind(a.model);
  const double tolerance = 1e-5;
  const double err = ismap::gradcheck_model(kind, a.seed, a.corrupt);
  const bool pass = err <= tolerance;
  std::printf("gradcheck %s seed=%llu: max relative error %.3e (tolerance %.0e) %s\n",
              ismap::model_kind_name(kind),
              static_cast<unsigned long long>(a.seed), err, tolerance,
              pass ? "PASS" : "FAIL");
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ismap: neighbor-aware informal-settlement classification"};
  app.set_version_flag("--version", version_string());
  app.set_config("--config")
      ->description("key=value config file ([subcommand] sections; "
                    "command-line flags override");
  app.require_subcommand(1);

  FeaturesArgs fa;
  CLI::App* features = app.add_subcommand(
      "features", "Extract the 9-feature table from rasters and streets");
  features->add_option("--image", fa.image_manifest,
                       "band manifest JSON (multiband image)")->required();
  features->add_option("--dem", fa.dem, "DEM, ESRI ASCII grid")->required();
  features->add_option("--streets-nodes", fa.streets_nodes,
                       "street nodes CSV (id,x,y)")->required();
  features->add_option("--streets-segments", fa.streets_segments,
                       "street segments CSV (node_a,node_b,wkt)")->required();
  features->add_option("--origin-x", fa.origin_x, "grid origin x (map units)");
  features->add_option("--origin-y", fa.origin_y, "grid origin y (map units)");
  features->add_option("--cell-size", fa.cell_size, "cell side (map units)")
      ->default_val(150.0);
  features->add_option("--rows", fa.rows, "grid rows")->required();
  features->add_option("--cols", fa.cols, "grid columns")->required();
  features->add_option("--out", fa.out, "output feature-table CSV")->required();

  SynthArgs sa;
  CLI::App* synth = app.add_subcommand(
      "synth", "Generate a seeded synthetic labeled city");
  synth->add_option("--rows", sa.config.n_rows, "grid rows")->default_val(200);
  synth->add_option("--cols", sa.config.n_cols, "grid columns")->default_val(200);
  synth->add_option("--zones", sa.config.n_zones, "vertical zone bands")
      ->default_val(5);
  synth->add_option("--imbalance", sa.config.imbalance,
                    "target non-favela:favela ratio")->default_val(30.0);
  synth->add_option("--lambda", sa.config.lambda,
                    "context strength in [0,1]")->default_val(0.6);
  synth->add_option("--sigma", sa.config.sigma,
                    "feature noise, class-separation units")->default_val(0.9);
  synth->add_option("--seed", sa.config.seed, "base seed")->default_val(1);
  synth->add_option("--out", sa.out, "output feature-table CSV")->required();

  CrossvalArgs ca;
  CLI::App* crossval = app.add_subcommand(
      "crossval", "Spatial cross-validation of one model on a feature table");
  crossval->add_option("--table", ca.table, "feature-table CSV")->required();
  crossval->add_option("--model", ca.model,
                       "gcn | mlp-local | mlp-neighbors")->required();
  crossval->add_option("--seed", ca.seed, "base seed")->default_val(1);
  crossval->add_option("--repetitions", ca.repetitions,
                       "repetitions per zone")->default_val(10);
  crossval->add_option("--zones", ca.zones,
                       "run only the first N zones (0 = all)")->default_val(0);
  crossval->add_option("--jobs", ca.jobs, "concurrent folds")->default_val(1);
  crossval->add_option("--epochs", ca.epochs, "training epochs")
      ->default_val(400);
  crossval->add_option("--batch-size", ca.batch_size, "minibatch size")
      ->default_val(32);
  crossval->add_option("--learning-rate", ca.learning_rate, "Adam step size")
      ->default_val(0.001);
  crossval->add_flag("--natural-test", ca.natural_test,
                     "evaluate at natural prevalence (off-protocol)");
  crossval->add_flag("--no-standardize", ca.no_standardize,
                     "skip per-feature z-scoring (ablation)");
  crossval->add_flag("--maps", ca.maps, "write a PGM prediction map");
  crossval->add_option("--out", ca.out, "output directory")->required();

  GradcheckArgs ga;
  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of the backward pass");
  gradcheck->add_option("model", ga.model, "gcn | mlp-local | mlp-neighbors")
      ->required();
  gradcheck->add_option("--seed", ga.seed, "instance seed")->default_val(1);
  gradcheck->add_flag("--corrupt", ga.corrupt,
                      "deliberately damage one gradient entry (negative control)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message to stderr
    return 2;
  }

  try {
    if (features->parsed()) return run_features(fa);
    if (synth->parsed()) return run_synth(sa);
    if (crossval->parsed()) return run_crossval(ca);
    if (gradcheck->parsed()) return run_gradcheck(ga);
  } catch (const ismap::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable: require_subcommand(1)
}
