#pragma once

#include <cstdint>
#include <string>

#include "ismap/grid.hpp"

namespace ismap {

// Seeded synthetic city. An organic urban extent (smooth random field,
// quantile-thresholded per zone so every zone keeps the same urban fraction)
// decides which grid cells exist, so windows near the city edge are
// incomplete, as on a real irregular grid. Labels come from thresholding the
// 3x3-smoothed value of a low-frequency random field at a per-zone quantile
// chosen to hit the imbalance target inside every zone, so favelas form
// contiguous blobs and every zone's folds are balanced by construction.
// Each favela cell draws one of six settlement varieties that concentrates
// the class contrast on its own feature subset; features are the
// class-conditional prototypes mixed with the 3x3 neighborhood prototype
// mean (weight `lambda`), shifted per zone, plus i.i.d. heavy-tailed
// Student-t noise scaled to `sigma` class-separation units per feature.
struct SynthConfig {
  int n_rows = 200;
  int n_cols = 200;
  int n_zones = 5;
  double imbalance = 30.0;  // target non-favela : favela ratio
  double lambda = 0.6;      // context strength, in [0, 1]
  double sigma = 0.9;       // feature noise, in separation units
  std::uint64_t seed = 1;

  void validate() const;  // ConfigError on violations
};

// One record per in-extent cell, labeled, with its vertical-band zone
// (ids 0..n_zones-1). Deterministic in config.
FeatureTable generate_city(const SynthConfig& config);

struct OracleMetrics {
  double kappa = 0.0;        // balanced: acc_favela + acc_formal - 1
  double acc_favela = 0.0;
  double acc_formal = 0.0;
  std::size_t n_samples = 0;
};

// Monte-Carlo estimate of the balanced-test kappa of the generative model's
// own posterior P(central label | all 9 window feature vectors): the
// unobserved neighbor-label configurations are marginalized over the
// construction's prior, using label patches harvested from auxiliary cities
// of the same config, and the evaluation averages over auxiliary cities as
// well. Harvesting and evaluation use cells whose full 5x5 patch exists, so
// the closed-form window likelihood is exact. No window-based classifier can
// beat this rule except by chance. Setups with no such complete interior
// patch yield an all-zero estimate (n_samples = 0) rather than an error.
OracleMetrics oracle_metrics(const SynthConfig& config);

struct SynthInfo {
  std::size_t n_cells = 0;
  std::size_t n_favela = 0;
  double favela_fraction = 0.0;
  double achieved_imbalance = 0.0;
};

SynthInfo synth_info(const FeatureTable& table);

// Config + achieved label stats + oracle metrics, ordered-key JSON.
std::string synth_sidecar_json(const SynthConfig& config,
                               const FeatureTable& table);

}  // namespace ismap
