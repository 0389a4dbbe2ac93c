#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "ismap/grid.hpp"
#include "ismap/metrics.hpp"
#include "ismap/models.hpp"

namespace ismap {

struct TrainConfig {
  int epochs = 400;
  int batch_size = 32;
  double learning_rate = 0.001;
  std::uint64_t seed = 0;
  bool standardize = true;

  void validate() const;  // ConfigError on non-positive values
};

struct SplitSpec {
  int test_zone = 0;
  std::vector<int> train_zones;

  void validate() const;  // ConfigError when test_zone is also a train zone
};

// Balanced subset: the minority class kept whole, the majority sampled
// without replacement; output preserves input order. Throws BalanceError when
// either class is empty.
std::vector<const CellRecord*> undersample(
    const std::vector<const CellRecord*>& records, Rng& rng);

// Per-feature z-score statistics. A feature whose train std falls below
// 1e-12 is only centered (std is stored as 1 and flagged degenerate).
struct StandardizeStats {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> std{};
  std::array<bool, kFeatureCount> degenerate{};
};

StandardizeStats identity_stats();
StandardizeStats compute_standardize_stats(
    const std::vector<const CellRecord*>& train);
FeatureTable apply_standardize(const FeatureTable& table,
                               const StandardizeStats& stats);

// A model trained on one fold plus everything needed to evaluate it the same
// way: the standardization fitted on its balanced train set, and audit data.
struct FoldModel {
  Model model;
  StandardizeStats stats;
  std::vector<double> loss_trace;  // per-epoch mean train loss
  std::size_t n_train = 0;         // balanced train size
  bool train_balanced = false;
  long long cross_zone_train_neighbors = 0;
  std::vector<std::uint64_t> train_keys;  // (row<<32|col) of train cells
};

// Undersamples the train zones, fits standardization on the balanced train
// records, trains from a fresh Glorot initialization. Sub-streams of
// config.seed: 1 undersampling, 2 initialization, 3 batch shuffling.
FoldModel train_model(ModelKind kind, const FeatureTable& table,
                      const SplitSpec& split, const TrainConfig& config);

struct EvalAudit {
  std::size_t n_test = 0;
  bool test_balanced = false;
  long long cross_zone_test_neighbors = 0;
  std::vector<std::uint64_t> test_keys;
};

// Balanced (default) or natural-prevalence evaluation of the held-out zone.
ConfusionMatrix evaluate(const FoldModel& fm, const FeatureTable& table,
                         const SplitSpec& split, Rng& rng,
                         bool natural_prevalence = false,
                         EvalAudit* audit = nullptr);

struct CrossvalConfig {
  TrainConfig train;      // .seed is the base seed for the whole sweep
  int repetitions = 10;
  int jobs = 1;
  bool natural_test = false;  // evaluate at natural prevalence (off-protocol)
  bool collect_maps = false;  // keep repetition-0 predictions per zone
};

struct FoldResult {
  int zone = 0;
  int repetition = 0;
  bool ok = false;
  std::string error;
  ConfusionMatrix cm;
  Metrics metrics;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  bool train_balanced = false;
  bool test_balanced = false;
  bool disjoint = false;  // train/test cell keys never overlap
  long long cross_zone_train_neighbors = 0;
  long long cross_zone_test_neighbors = 0;
  double first_epoch_loss = 0.0;
  double final_epoch_loss = 0.0;
  // (row, col, predicted label) for every labeled cell of the test zone;
  // only filled on repetition 0 when collect_maps is set.
  std::vector<std::tuple<int, int, int>> map_predictions;
};

enum MetricIndex { kPrecision = 0, kRecall = 1, kF1 = 2, kKappa = 3 };

struct AggStats {
  std::array<double, 4> mean{};
  std::array<double, 4> stdev{};  // population standard deviation
  int n = 0;
};

struct ZoneSummary {
  int zone = 0;
  AggStats stats;
};

struct MetricsReport {
  ModelKind kind = ModelKind::kGcn;
  std::uint64_t seed = 0;
  int repetitions = 0;
  bool natural_test = false;
  bool standardize = true;
  TrainConfig train;
  std::vector<int> zones;
  std::vector<FoldResult> folds;       // ordered by (zone, repetition)
  std::vector<ZoneSummary> per_zone;   // over successful folds
  AggStats global;                     // over the per-zone means
  int failed_folds = 0;
  int degenerate_folds = 0;
};

// One fold per (zone in `zones`, repetition). Fold seed =
// derive_seed(config.train.seed, repetition, zone); evaluation undersampling
// uses its sub-stream 4. Folds run on up to config.jobs threads; the report
// is identical for any job count. A fold whose zone lacks a class is recorded
// as failed and the sweep continues.
MetricsReport spatial_crossval(const FeatureTable& table,
                               const std::vector<int>& zones, ModelKind kind,
                               const CrossvalConfig& config);

// CSV with header zone,repetition,model,precision,recall,f1,kappa; one row
// per successful fold, %.9g values.
std::string report_to_csv(const MetricsReport& report);

// Ordered-key JSON: config echo, per-zone and global mean/std, audit block.
std::string report_summary_json(const MetricsReport& report);

// Binary PGM over the full grid, north row first: 0 = predicted non-favela,
// 255 = predicted favela, 128 = no prediction. Predictions come from the
// repetition-0 map_predictions of every zone's fold (each zone predicted by
// the model that held it out).
std::string prediction_map_pgm(const MetricsReport& report,
                               const GridSpec& grid);

}  // namespace ismap
