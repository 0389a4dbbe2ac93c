#include "ismap/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

#include "ismap/io_util.hpp"
#include "ismap/rng.hpp"
#include "json.hpp"

namespace ismap {

namespace {

constexpr std::uint64_t kStreamUndersampleTrain = 1;
constexpr std::uint64_t kStreamInit = 2;
constexpr std::uint64_t kStreamShuffle = 3;
constexpr std::uint64_t kStreamUndersampleTest = 4;

std::uint64_t cell_key(int row, int col) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
         static_cast<std::uint32_t>(col);
}

std::vector<const CellRecord*> labeled_in_zones(const FeatureTable& table,
                                                const std::set<int>& zones) {
  std::vector<const CellRecord*> out;
  for (const CellRecord& r : table.records())
    if (r.label && r.zone && zones.count(*r.zone)) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const CellRecord* a, const CellRecord* b) {
              return a->row != b->row ? a->row < b->row : a->col < b->col;
            });
  return out;
}

// Window cells present in the table whose zone is missing or outside `side`.
long long cross_zone_window_cells(const FeatureTable& table, int row, int col,
                                  const std::set<int>& side) {
  long long n = 0;
  for (const auto& [dr, dc] : kKingOffsets) {
    const CellRecord* rec = table.find(row + dr, col + dc);
    if (rec && (!rec->zone || !side.count(*rec->zone))) ++n;
  }
  return n;
}

bool is_balanced(const std::vector<const CellRecord*>& records) {
  std::size_t pos = 0, neg = 0;
  for (const CellRecord* r : records) (*r->label == 1 ? pos : neg)++;
  return pos == neg && pos > 0;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

void SplitSpec::validate() const {
  if (train_zones.empty()) throw ConfigError("split needs at least one train zone");
  for (int z : train_zones)
    if (z == test_zone)
      throw ConfigError("test zone " + std::to_string(test_zone) +
                        " also appears as a train zone");
}

std::vector<const CellRecord*> undersample(
    const std::vector<const CellRecord*>& records, Rng& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i]->label)
      throw BalanceError("undersample: record without label");
    (*records[i]->label == 1 ? pos : neg).push_back(i);
  }
  if (pos.empty()) throw BalanceError("undersample: no favela records");
  if (neg.empty()) throw BalanceError("undersample: no non-favela records");

  const std::size_t m = std::min(pos.size(), neg.size());
  std::vector<char> keep(records.size(), 0);
  auto select = [&](const std::vector<std::size_t>& cls) {
    if (cls.size() == m) {
      for (std::size_t i : cls) keep[i] = 1;
      return;
    }
    for (std::size_t j : rng.sample_indices(cls.size(), m)) keep[cls[j]] = 1;
  };
  select(pos);
  select(neg);

  std::vector<const CellRecord*> out;
  out.reserve(2 * m);
  for (std::size_t i = 0; i < records.size(); ++i)
    if (keep[i]) out.push_back(records[i]);
  return out;
}

StandardizeStats identity_stats() {
  StandardizeStats s;
  s.std.fill(1.0);
  return s;
}

StandardizeStats compute_standardize_stats(
    const std::vector<const CellRecord*>& train) {
  if (train.empty())
    throw ConfigError("standardize: empty train set");
  StandardizeStats s;
  const double n = static_cast<double>(train.size());
  for (const CellRecord* r : train)
    for (int f = 0; f < kFeatureCount; ++f) s.mean[f] += r->features[f];
  for (int f = 0; f < kFeatureCount; ++f) s.mean[f] /= n;
  std::array<double, kFeatureCount> var{};
  for (const CellRecord* r : train)
    for (int f = 0; f < kFeatureCount; ++f) {
      const double d = r->features[f] - s.mean[f];
      var[f] += d * d;
    }
  for (int f = 0; f < kFeatureCount; ++f) {
    const double sd = std::sqrt(var[f] / n);
    if (sd < 1e-12) {
      s.std[f] = 1.0;
      s.degenerate[f] = true;
    } else {
      s.std[f] = sd;
    }
  }
  return s;
}

FeatureTable apply_standardize(const FeatureTable& table,
                               const StandardizeStats& stats) {
  return table.transformed([&](const CellRecord& r) {
    std::array<double, kFeatureCount> f = r.features;
    for (int i = 0; i < kFeatureCount; ++i)
      f[i] = (f[i] - stats.mean[i]) / stats.std[i];
    return f;
  });
}

FoldModel train_model(ModelKind kind, const FeatureTable& table,
                      const SplitSpec& split, const TrainConfig& config) {
  config.validate();
  split.validate();
  const std::set<int> train_side(split.train_zones.begin(),
                                 split.train_zones.end());

  const std::vector<const CellRecord*> candidates =
      labeled_in_zones(table, train_side);
  Rng rng_us(derive_seed(config.seed, kStreamUndersampleTrain));
  const std::vector<const CellRecord*> balanced = undersample(candidates, rng_us);

  FoldModel fm;
  fm.stats = config.standardize ? compute_standardize_stats(balanced)
                                : identity_stats();
  const FeatureTable std_table = apply_standardize(table, fm.stats);

  const bool uses_window = kind != ModelKind::kMlpLocal;
  std::vector<TrainSample> samples;
  samples.reserve(balanced.size());
  for (const CellRecord* r : balanced) {
    samples.push_back(
        make_train_sample(kind, std_table, r->row, r->col, *r->label));
    fm.train_keys.push_back(cell_key(r->row, r->col));
    if (uses_window)
      fm.cross_zone_train_neighbors +=
          cross_zone_window_cells(table, r->row, r->col, train_side);
  }
  fm.n_train = samples.size();
  fm.train_balanced = is_balanced(balanced);

  Rng rng_init(derive_seed(config.seed, kStreamInit));
  fm.model = init_model(kind, rng_init);

  const std::vector<Matrix*> params = fm.model.params();
  Model grads = zero_grads_like(fm.model);
  std::vector<const Matrix*> grad_list;
  for (Matrix* g : grads.params()) grad_list.push_back(g);
  AdamState adam;
  adam.init(params);
  TrainWorkspace ws;
  ws.refresh(fm.model);

  Rng rng_shuffle(derive_seed(config.seed, kStreamShuffle));
  const std::size_t n = samples.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  fm.loss_trace.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng_shuffle.shuffle(perm);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t bn =
          std::min<std::size_t>(config.batch_size, n - start);
      zero_params(grads);
      const double w = 1.0 / static_cast<double>(bn);
      for (std::size_t i = 0; i < bn; ++i)
        epoch_loss +=
            forward_backward(fm.model, samples[perm[start + i]], w, grads, ws);
      adam_step(params, grad_list, adam, config.learning_rate);
      ws.refresh(fm.model);
    }
    fm.loss_trace.push_back(epoch_loss / static_cast<double>(n));
  }
  return fm;
}

ConfusionMatrix evaluate(const FoldModel& fm, const FeatureTable& table,
                         const SplitSpec& split, Rng& rng,
                         bool natural_prevalence, EvalAudit* audit) {
  split.validate();
  const std::set<int> test_side{split.test_zone};
  const std::vector<const CellRecord*> candidates =
      labeled_in_zones(table, test_side);
  std::vector<const CellRecord*> eval_set;
  if (natural_prevalence) {
    if (candidates.empty())
      throw BalanceError("evaluate: test zone has no labeled cells");
    eval_set = candidates;
  } else {
    eval_set = undersample(candidates, rng);
  }

  const FeatureTable std_table = apply_standardize(table, fm.stats);
  const bool uses_window = fm.model.kind != ModelKind::kMlpLocal;

  ConfusionMatrix cm;
  for (const CellRecord* r : eval_set) {
    const Prediction p = predict_cell(fm.model, std_table, r->row, r->col);
    cm.add(*r->label, p.label());
    if (audit) {
      audit->test_keys.push_back(cell_key(r->row, r->col));
      if (uses_window)
        audit->cross_zone_test_neighbors +=
            cross_zone_window_cells(table, r->row, r->col, test_side);
    }
  }
  if (audit) {
    audit->n_test = eval_set.size();
    audit->test_balanced = is_balanced(eval_set);
  }
  return cm;
}

namespace {

struct FoldTask {
  int zone = 0;
  int repetition = 0;
};

FoldResult run_fold(const FeatureTable& table, const std::vector<int>& zones,
                    ModelKind kind, const CrossvalConfig& cfg,
                    const FoldTask& task) {
  FoldResult fr;
  fr.zone = task.zone;
  fr.repetition = task.repetition;
  try {
    SplitSpec split;
    split.test_zone = task.zone;
    for (int z : zones)
      if (z != task.zone) split.train_zones.push_back(z);

    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.train.seed,
                          static_cast<std::uint64_t>(task.repetition),
                          static_cast<std::uint64_t>(
                              static_cast<std::uint32_t>(task.zone)));
    const FoldModel fm = train_model(kind, table, split, tc);

    Rng rng_eval(derive_seed(tc.seed, kStreamUndersampleTest));
    EvalAudit audit;
    fr.cm = evaluate(fm, table, split, rng_eval, cfg.natural_test, &audit);
    fr.metrics = compute_metrics(fr.cm);

    fr.n_train = fm.n_train;
    fr.n_test = audit.n_test;
    fr.train_balanced = fm.train_balanced;
    fr.test_balanced = audit.test_balanced;
    fr.cross_zone_train_neighbors = fm.cross_zone_train_neighbors;
    fr.cross_zone_test_neighbors = audit.cross_zone_test_neighbors;
    std::set<std::uint64_t> train_keys(fm.train_keys.begin(),
                                       fm.train_keys.end());
    fr.disjoint = true;
    for (std::uint64_t k : audit.test_keys)
      if (train_keys.count(k)) fr.disjoint = false;
    if (!fm.loss_trace.empty()) {
      fr.first_epoch_loss = fm.loss_trace.front();
      fr.final_epoch_loss = fm.loss_trace.back();
    }

    if (cfg.collect_maps && task.repetition == 0) {
      const FeatureTable std_table = apply_standardize(table, fm.stats);
      const std::set<int> side{task.zone};
      for (const CellRecord* r : labeled_in_zones(table, side))
        fr.map_predictions.emplace_back(
            r->row, r->col,
            predict_cell(fm.model, std_table, r->row, r->col).label());
    }
    fr.ok = true;
  } catch (const std::exception& e) {
    fr.ok = false;
    fr.error = e.what();
  }
  return fr;
}

AggStats aggregate(const std::vector<std::array<double, 4>>& rows) {
  AggStats s;
  s.n = static_cast<int>(rows.size());
  if (rows.empty()) return s;
  for (const auto& r : rows)
    for (int k = 0; k < 4; ++k) s.mean[k] += r[k];
  for (int k = 0; k < 4; ++k) s.mean[k] /= s.n;
  for (const auto& r : rows)
    for (int k = 0; k < 4; ++k) {
      const double d = r[k] - s.mean[k];
      s.stdev[k] += d * d;
    }
  for (int k = 0; k < 4; ++k) s.stdev[k] = std::sqrt(s.stdev[k] / s.n);
  return s;
}

std::array<double, 4> metric_row(const Metrics& m) {
  return {m.precision, m.recall, m.f1, m.kappa};
}

}  // namespace

MetricsReport spatial_crossval(const FeatureTable& table,
                               const std::vector<int>& zones, ModelKind kind,
                               const CrossvalConfig& config) {
  config.train.validate();
  if (config.repetitions <= 0)
    throw ConfigError("repetitions must be positive");
  std::vector<int> zs = zones;
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  if (zs.size() < 2)
    throw ConfigError("spatial cross-validation needs at least 2 zones");

  std::vector<FoldTask> tasks;
  for (int z : zs)
    for (int r = 0; r < config.repetitions; ++r) tasks.push_back({z, r});

  std::vector<FoldResult> results(tasks.size());
  const int jobs = std::max(
      1, std::min<int>(config.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      results[i] = run_fold(table, zs, kind, config, tasks[i]);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        results[i] = run_fold(table, zs, kind, config, tasks[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  MetricsReport rep;
  rep.kind = kind;
  rep.seed = config.train.seed;
  rep.repetitions = config.repetitions;
  rep.natural_test = config.natural_test;
  rep.standardize = config.train.standardize;
  rep.train = config.train;
  rep.zones = zs;
  rep.folds = std::move(results);

  std::vector<std::array<double, 4>> zone_means;
  for (int z : zs) {
    std::vector<std::array<double, 4>> rows;
    for (const FoldResult& fr : rep.folds)
      if (fr.zone == z && fr.ok) rows.push_back(metric_row(fr.metrics));
    ZoneSummary zsum;
    zsum.zone = z;
    zsum.stats = aggregate(rows);
    rep.per_zone.push_back(zsum);
    if (zsum.stats.n > 0) zone_means.push_back(zsum.stats.mean);
  }
  rep.global = aggregate(zone_means);
  for (const FoldResult& fr : rep.folds) {
    if (!fr.ok) ++rep.failed_folds;
    if (fr.ok && fr.metrics.degenerate) ++rep.degenerate_folds;
  }
  return rep;
}

std::string report_to_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "zone,repetition,model,precision,recall,f1,kappa\n";
  for (const FoldResult& fr : report.folds) {
    if (!fr.ok) continue;
    os << fr.zone << ',' << fr.repetition << ',' << model_kind_name(report.kind)
       << ',' << format_g9(fr.metrics.precision) << ','
       << format_g9(fr.metrics.recall) << ',' << format_g9(fr.metrics.f1)
       << ',' << format_g9(fr.metrics.kappa) << '\n';
  }
  return os.str();
}

std::string report_summary_json(const MetricsReport& report) {
  static const std::array<const char*, 4> names = {"precision", "recall", "f1",
                                                   "kappa"};
  auto stats_json = [&](const AggStats& s) {
    nlohmann::json mean, stdev;
    for (int k = 0; k < 4; ++k) {
      mean[names[k]] = s.mean[k];
      stdev[names[k]] = s.stdev[k];
    }
    return nlohmann::json{{"n", s.n}, {"mean", mean}, {"std", stdev}};
  };

  nlohmann::json per_zone = nlohmann::json::array();
  for (const ZoneSummary& z : report.per_zone) {
    nlohmann::json j = stats_json(z.stats);
    j["zone"] = z.zone;
    per_zone.push_back(j);
  }

  bool all_disjoint = true, all_balanced = true;
  long long cross_train = 0, cross_test = 0;
  nlohmann::json errors = nlohmann::json::array();
  for (const FoldResult& fr : report.folds) {
    if (!fr.ok) {
      errors.push_back("zone " + std::to_string(fr.zone) + " repetition " +
                       std::to_string(fr.repetition) + ": " + fr.error);
      continue;
    }
    all_disjoint = all_disjoint && fr.disjoint;
    if (!report.natural_test)
      all_balanced = all_balanced && fr.train_balanced && fr.test_balanced;
    else
      all_balanced = all_balanced && fr.train_balanced;
    cross_train += fr.cross_zone_train_neighbors;
    cross_test += fr.cross_zone_test_neighbors;
  }

  nlohmann::json doc{
      {"model", model_kind_name(report.kind)},
      {"seed", report.seed},
      {"repetitions", report.repetitions},
      {"zones", report.zones},
      {"natural_test", report.natural_test},
      {"train",
       {{"epochs", report.train.epochs},
        {"batch_size", report.train.batch_size},
        {"learning_rate", report.train.learning_rate},
        {"standardize", report.standardize}}},
      {"per_zone", per_zone},
      {"global", stats_json(report.global)},
      {"audit",
       {{"train_test_disjoint", all_disjoint},
        {"balanced", all_balanced},
        {"cross_zone_train_neighbors", cross_train},
        {"cross_zone_test_neighbors", cross_test},
        {"degenerate_folds", report.degenerate_folds},
        {"failed_folds", report.failed_folds},
        {"errors", errors}}}};
  return doc.dump(2) + "\n";
}

std::string prediction_map_pgm(const MetricsReport& report,
                               const GridSpec& grid) {
  std::vector<unsigned char> img(
      static_cast<std::size_t>(grid.n_rows) * grid.n_cols, 128);
  for (const FoldResult& fr : report.folds) {
    if (fr.repetition != 0) continue;
    for (const auto& [row, col, pred] : fr.map_predictions)
      if (grid.in_bounds(row, col))
        img[static_cast<std::size_t>(row) * grid.n_cols + col] =
            pred == 1 ? 255 : 0;
  }
  std::ostringstream os;
  os << "P5\n" << grid.n_cols << ' ' << grid.n_rows << "\n255\n";
  for (int r = grid.n_rows - 1; r >= 0; --r)
    os.write(reinterpret_cast<const char*>(
                 img.data() + static_cast<std::size_t>(r) * grid.n_cols),
             grid.n_cols);
  return os.str();
}

}  // namespace ismap
