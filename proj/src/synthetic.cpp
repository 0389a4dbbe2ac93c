#include "ismap/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "ismap/rng.hpp"
#include "json.hpp"

namespace ismap {

namespace {

// Class prototypes per feature: [feature][label]. Favelas: little vegetation,
// high texture entropy, steep terrain, dense short street segments.
constexpr double kProto[kFeatureCount][2] = {
    {0.35, 0.08},    // veg_prop
    {0.45, 0.75},    // entropy
    {6.0, 16.0},     // slope
    {-0.05, 0.05},   // profile_convexity
    {3.0, 9.0},      // street_nodes
    {380.0, 620.0},  // street_length
    {2.2, 3.1},      // deg_mean
    {1.0, 2.0},      // deg_min
    {3.5, 5.0},      // deg_max
};

// Each cell realizes the class contrast through one of several settlement
// varieties (texture-led, terrain-led, street-led, ...), drawn independently
// per cell. A variety keeps every feature on its class's side of the base
// prototypes but concentrates the separation on a subset of features, so
// per-cell class evidence is multi-modal: reading a neighborhood requires a
// library of per-cell detectors rather than a single linear contrast.
constexpr int kVarietyCount = 6;
constexpr std::uint8_t kVarietyMask[kVarietyCount][kFeatureCount] = {
    {1, 1, 0, 0, 0, 0, 0, 0, 0},  // vegetation & texture
    {0, 0, 1, 1, 0, 0, 0, 0, 0},  // terrain
    {0, 0, 0, 0, 1, 1, 0, 0, 0},  // street density
    {0, 0, 0, 0, 0, 0, 1, 1, 1},  // street topology
    {1, 0, 1, 0, 1, 0, 0, 1, 0},  // mixed morphology A
    {0, 1, 0, 1, 0, 1, 1, 0, 1},  // mixed morphology B
};
constexpr double kVarietyWeak = 0.0;

// Feature noise is i.i.d. Student-t with kNoiseNu degrees of freedom, scaled
// so its standard deviation is sigma * |d_f|. Survey-derived features (slope,
// texture, street stats) are outlier-rich, and heavy tails are what make the
// per-cell evidence fragile enough that aggregating a window pays off.
constexpr double kNoiseNu = 4.0;

// Standard deviation of a unit-scale Student-t with kNoiseNu dof.
const double kNoiseSd = std::sqrt(kNoiseNu / (kNoiseNu - 2.0));

double student_t_draw(Rng& rng) {
  const double z = rng.normal();
  double q = 0.0;
  for (int i = 0; i < static_cast<int>(kNoiseNu); ++i) {
    const double w = rng.normal();
    q += w * w;
  }
  return z / std::sqrt(q / kNoiseNu);
}

// Contrast multiplier of feature f under variety v, normalized so every
// variety has the same whitened class separation as the base prototype pair.
double variety_strength(int v, int f) {
  static const auto table = [] {
    std::array<std::array<double, kFeatureCount>, kVarietyCount> t{};
    for (int vv = 0; vv < kVarietyCount; ++vv) {
      int n = 0;
      for (int ff = 0; ff < kFeatureCount; ++ff) n += kVarietyMask[vv][ff];
      const double strong = std::sqrt(
          (kFeatureCount - kVarietyWeak * kVarietyWeak * (kFeatureCount - n)) /
          n);
      for (int ff = 0; ff < kFeatureCount; ++ff)
        t[vv][ff] = kVarietyMask[vv][ff] ? strong : kVarietyWeak;
    }
    return t;
  }();
  return table[v][f];
}

// Zone morphology follows the case study: outer zones are coherent (large
// compact settlement blobs), middle zones fragmented (small scattered ones).
// The label field blends a coarse and a fine random field with a per-zone
// coherence weight.
constexpr int kFieldSpacingCoarse = 16;
constexpr int kFieldSpacingFine = 16;
constexpr int kExtentSpacing = 32;         // urban-extent field spacing
constexpr double kUrbanCoverage = 0.18;   // fraction of grid cells kept
constexpr double kZoneOffsetScale = 0.15;  // zone shift, in separation units
// Informal settlements concentrate on the steep city periphery, so the latent
// field is pulled up where the 5x5 patch has cells outside the urban extent.
constexpr double kPeripheryPull = 0.0;

// RNG sub-streams of SynthConfig::seed (derive_seed(seed, stream, index)).
constexpr std::uint64_t kStreamField = 11;
constexpr std::uint64_t kStreamNoise = 12;
constexpr std::uint64_t kStreamZoneOffsets = 13;
constexpr std::uint64_t kStreamExtent = 14;
constexpr std::uint64_t kStreamVariety = 15;
constexpr std::uint64_t kStreamHarvestField = 21;
constexpr std::uint64_t kStreamHarvestExtent = 22;
constexpr std::uint64_t kStreamEvalField = 31;
constexpr std::uint64_t kStreamEvalNoise = 32;
constexpr std::uint64_t kStreamEvalOffsets = 33;
constexpr std::uint64_t kStreamEvalExtent = 34;
constexpr std::uint64_t kStreamEvalVariety = 35;
constexpr std::uint64_t kStreamEvalSample = 41;
constexpr std::uint64_t kStreamPatchSample = 51;

constexpr int kHarvestCities = 2;
constexpr int kEvalCities = 4;
constexpr std::size_t kMaxPatchesPerClass = 4096;

double separation(int f) { return std::fabs(kProto[f][1] - kProto[f][0]); }

int zone_of(int col, int n_cols, int n_zones) {
  return static_cast<int>(static_cast<long long>(col) * n_zones / n_cols);
}

struct LabelGrid {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> y;     // valid only where kept
  std::vector<std::uint8_t> kept;  // inside the urban extent
  long long n_favela = 0;
  long long n_kept = 0;

  int at(int r, int c) const {
    return y[static_cast<std::size_t>(r) * cols + c];
  }
  bool is_kept(int r, int c) const {
    return kept[static_cast<std::size_t>(r) * cols + c] != 0;
  }
};

// Low-frequency field: bilinear interpolation of coarse seeded normals laid
// out every `spacing` cells.
std::vector<double> smooth_field(int rows, int cols, int spacing,
                                 std::uint64_t seed) {
  const int gr = rows / spacing + 3;
  const int gc = cols / spacing + 3;
  std::vector<double> coarse(static_cast<std::size_t>(gr) * gc);
  Rng rng(seed);
  for (double& v : coarse) v = rng.normal();
  const auto cg = [&](int i, int j) {
    return coarse[static_cast<std::size_t>(i) * gc + j];
  };

  std::vector<double> u(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    const double pr = (r + 0.5) / spacing;
    const int i0 = static_cast<int>(pr);
    const double fr = pr - i0;
    for (int c = 0; c < cols; ++c) {
      const double pc = (c + 0.5) / spacing;
      const int j0 = static_cast<int>(pc);
      const double fc = pc - j0;
      u[static_cast<std::size_t>(r) * cols + c] =
          cg(i0, j0) * (1.0 - fr) * (1.0 - fc) +
          cg(i0 + 1, j0) * fr * (1.0 - fc) +
          cg(i0, j0 + 1) * (1.0 - fr) * fc + cg(i0 + 1, j0 + 1) * fr * fc;
    }
  }
  return u;
}

// Keep the densest kUrbanCoverage fraction of each zone band under an
// independent smooth field: the city has an organic outline with bays and
// holes, like a real urban extent, while every zone stays populated.
std::vector<std::uint8_t> make_extent(int rows, int cols, int n_zones,
                                      std::uint64_t extent_seed) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  const std::vector<double> v =
      smooth_field(rows, cols, kExtentSpacing, extent_seed);
  std::vector<std::uint8_t> kept(n, 0);
  std::vector<double> band;
  for (int z = 0; z < n_zones; ++z) {
    band.clear();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        if (zone_of(c, cols, n_zones) == z)
          band.push_back(v[static_cast<std::size_t>(r) * cols + c]);
    const long long n_keep = std::max<long long>(
        1, std::llround(kUrbanCoverage * static_cast<double>(band.size())));
    const std::size_t cut = band.size() - static_cast<std::size_t>(n_keep);
    std::nth_element(band.begin(), band.begin() + cut, band.end());
    const double tau = band[cut];

    long long have = 0;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        if (zone_of(c, cols, n_zones) != z) continue;
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        kept[i] = v[i] >= tau ? 1 : 0;
        have += kept[i];
      }
    // Ties at the threshold could keep a few extra cells; drop them from the
    // end so the count is exact and deterministic.
    for (int r = rows; have > n_keep && r-- > 0;)
      for (int c = cols; have > n_keep && c-- > 0;) {
        if (zone_of(c, cols, n_zones) != z) continue;
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        if (kept[i] && v[i] == tau) {
          kept[i] = 0;
          --have;
        }
      }
  }
  return kept;
}

// Coherence of a zone's settlement morphology: 1 at the outer zones (pure
// coarse field, compact blobs), 0 at the middle (pure fine field, fragmented).
double zone_coherence(int z, int n_zones) {
  if (n_zones < 2) return 0.5;
  return std::fabs(2.0 * z / (n_zones - 1) - 1.0);
}

// Label field (per-zone variance-preserving blend of a coarse and a fine
// smooth random field), 3x3-mean smoothed, thresholded at the quantile
// hitting the imbalance target over the kept cells.
LabelGrid make_labels(int rows, int cols, int n_zones, double imbalance,
                      std::uint64_t field_seed, std::uint64_t extent_seed) {
  const long long n = static_cast<long long>(rows) * cols;

  LabelGrid lg;
  lg.rows = rows;
  lg.cols = cols;
  lg.kept = make_extent(rows, cols, n_zones, extent_seed);
  for (std::uint8_t k : lg.kept) lg.n_kept += k;

  if (std::llround(lg.n_kept / (1.0 + imbalance)) < 1 ||
      imbalance < 1.0)
    throw ConfigError("imbalance target " + std::to_string(imbalance) +
                      " is unachievable on a " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " grid");

  const std::vector<double> coarse =
      smooth_field(rows, cols, kFieldSpacingCoarse, derive_seed(field_seed, 1));
  const std::vector<double> fine =
      smooth_field(rows, cols, kFieldSpacingFine, derive_seed(field_seed, 2));
  std::vector<double> u(static_cast<std::size_t>(n));
  for (int c = 0; c < cols; ++c) {
    const double w = zone_coherence(zone_of(c, cols, n_zones), n_zones);
    const double wf = std::sqrt(1.0 - w * w);
    for (int r = 0; r < rows; ++r) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      u[i] = w * coarse[i] + wf * fine[i];
    }
  }
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      int missing = 0;
      for (int dr = -2; dr <= 2; ++dr)
        for (int dc = -2; dc <= 2; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols ||
              !lg.is_kept(rr, cc))
            ++missing;
        }
      u[static_cast<std::size_t>(r) * cols + c] +=
          kPeripheryPull * missing / 24.0;
    }
  std::vector<double> smooth(static_cast<std::size_t>(n));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double s = 0.0;
      int w = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          s += u[static_cast<std::size_t>(rr) * cols + cc];
          ++w;
        }
      smooth[static_cast<std::size_t>(r) * cols + c] = s / w;
    }

  // The imbalance target is enforced within each zone, so every zone carries
  // its share of settlements on every seed (as in the case study, where all
  // districts contain favelas).
  lg.y.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> sorted;
  for (int z = 0; z < n_zones; ++z) {
    sorted.clear();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        if (lg.kept[i] && zone_of(c, cols, n_zones) == z)
          sorted.push_back(smooth[i]);
      }
    const long long n_fav =
        std::llround(static_cast<double>(sorted.size()) / (1.0 + imbalance));
    if (n_fav < 1 || static_cast<std::size_t>(n_fav) >= sorted.size())
      throw ConfigError("imbalance target " + std::to_string(imbalance) +
                        " is unachievable in zone " + std::to_string(z));
    const std::size_t cut = sorted.size() - static_cast<std::size_t>(n_fav) - 1;
    std::nth_element(sorted.begin(), sorted.begin() + cut, sorted.end());
    const double tau = sorted[cut];
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        if (lg.kept[i] && zone_of(c, cols, n_zones) == z && smooth[i] > tau)
          lg.y[i] = 1;
      }
  }
  for (std::size_t i = 0; i < lg.y.size(); ++i) lg.n_favela += lg.y[i];
  return lg;
}

using Offsets = std::vector<std::array<double, kFeatureCount>>;

Offsets make_zone_offsets(int n_zones, std::uint64_t off_seed) {
  Offsets off(n_zones);
  Rng rng(off_seed);
  for (int z = 0; z < n_zones; ++z)
    for (int f = 0; f < kFeatureCount; ++f)
      off[z][f] = kZoneOffsetScale * separation(f) * rng.normal();
  return off;
}

// Label mix coefficient of cell (r, c): mu_f = proto_f(0) + d_f * gamma + off.
// The neighborhood mean runs over the window cells that exist (kept and in
// bounds); the cell itself is always kept when this is called.
double gamma_at(const LabelGrid& lg, int r, int c, double lambda) {
  double k = 0.0;
  int w = 0;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) {
      const int rr = r + dr, cc = c + dc;
      if (rr < 0 || rr >= lg.rows || cc < 0 || cc >= lg.cols) continue;
      if (!lg.is_kept(rr, cc)) continue;
      k += lg.at(rr, cc);
      ++w;
    }
  return (1.0 - lambda) * lg.at(r, c) + lambda * k / w;
}

struct CityData {
  LabelGrid labels;
  Offsets zone_off;
  // Row-major per cell.
  std::vector<std::array<double, kFeatureCount>> features;
};

CityData make_city(const SynthConfig& cfg, std::uint64_t field_seed,
                   std::uint64_t noise_seed, std::uint64_t off_seed,
                   std::uint64_t extent_seed, std::uint64_t variety_seed) {
  CityData city;
  city.labels = make_labels(cfg.n_rows, cfg.n_cols, cfg.n_zones, cfg.imbalance,
                            field_seed, extent_seed);
  city.zone_off = make_zone_offsets(cfg.n_zones, off_seed);
  city.features.resize(static_cast<std::size_t>(cfg.n_rows) * cfg.n_cols);
  Rng noise(noise_seed);
  Rng vrng(variety_seed);
  for (int r = 0; r < cfg.n_rows; ++r)
    for (int c = 0; c < cfg.n_cols; ++c) {
      if (!city.labels.is_kept(r, c)) continue;
      const double g = gamma_at(city.labels, r, c, cfg.lambda);
      const int z = zone_of(c, cfg.n_cols, cfg.n_zones);
      const int v = static_cast<int>(vrng.uniform_int(kVarietyCount));
      auto& feat = city.features[static_cast<std::size_t>(r) * cfg.n_cols + c];
      for (int f = 0; f < kFeatureCount; ++f) {
        const double d =
            (kProto[f][1] - kProto[f][0]) * variety_strength(v, f);
        feat[f] = kProto[f][0] + d * g + city.zone_off[z][f] +
                  cfg.sigma * separation(f) * student_t_draw(noise) / kNoiseSd;
      }
    }
  return city;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_rows < 5 || n_cols < 5)
    throw ConfigError("synthetic grid must be at least 5x5");
  if (n_zones < 1) throw ConfigError("n_zones must be positive");
  if (n_cols < n_zones)
    throw ConfigError("need at least one column per zone");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("lambda must lie in [0, 1]");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (!(imbalance >= 1.0)) throw ConfigError("imbalance must be >= 1");
}

FeatureTable generate_city(const SynthConfig& config) {
  config.validate();
  const CityData city =
      make_city(config, derive_seed(config.seed, kStreamField, 0),
                derive_seed(config.seed, kStreamNoise, 0),
                derive_seed(config.seed, kStreamZoneOffsets, 0),
                derive_seed(config.seed, kStreamExtent, 0),
                derive_seed(config.seed, kStreamVariety, 0));

  GridSpec grid;
  grid.n_rows = config.n_rows;
  grid.n_cols = config.n_cols;
  FeatureTable table(grid);
  for (int r = 0; r < config.n_rows; ++r)
    for (int c = 0; c < config.n_cols; ++c) {
      if (!city.labels.is_kept(r, c)) continue;
      CellRecord rec;
      rec.row = r;
      rec.col = c;
      rec.features =
          city.features[static_cast<std::size_t>(r) * config.n_cols + c];
      rec.label = city.labels.at(r, c);
      rec.zone = zone_of(c, config.n_cols, config.n_zones);
      table.add(rec);
    }
  return table;
}

namespace {

// On a complete patch every window cell's mix coefficient is
// gamma = (1 - lambda) * y + lambda * k / 9 with y in {0, 1} and k in 0..9
// the window's favela count, so gamma takes at most 20 discrete levels.
// Signatures store the level index y * 10 + k per window position, which
// dedups exactly and lets the evaluator precompute per-level likelihoods.
constexpr int kGammaLevels = 20;

double gamma_of_level(int idx, double lambda) {
  return (1.0 - lambda) * (idx / 10) + lambda * (idx % 10) / 9.0;
}

using PatchSig = std::array<std::uint8_t, 9>;

// Deduplicated (y, k) level signatures of interior 3x3 windows, conditioned
// on the central label, with multiplicities.
struct PatchSet {
  std::vector<PatchSig> sig;
  std::vector<double> weight;
};

// Requires a complete 5x5 patch around (r, c) so every window cell's own
// window is fully inside the urban extent.
PatchSig window_signature(const LabelGrid& lg, int r, int c) {
  PatchSig s{};
  int i = 0;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc, ++i) {
      const int rr = r + dr, cc = c + dc;
      int k = 0;
      for (int er = -1; er <= 1; ++er)
        for (int ec = -1; ec <= 1; ++ec) k += lg.at(rr + er, cc + ec);
      s[i] = static_cast<std::uint8_t>(lg.at(rr, cc) * 10 + k);
    }
  return s;
}

// The oracle's closed-form window likelihood assumes every cell of the 5x5
// patch around (r, c) exists, so the 3x3 window's mix coefficients are exact.
bool patch_complete(const LabelGrid& lg, int r, int c) {
  for (int dr = -2; dr <= 2; ++dr)
    for (int dc = -2; dc <= 2; ++dc)
      if (!lg.is_kept(r + dr, c + dc)) return false;
  return true;
}

std::array<PatchSet, 2> harvest_patches(const SynthConfig& cfg) {
  std::array<std::vector<PatchSig>, 2> raw;
  for (int t = 0; t < kHarvestCities; ++t) {
    const LabelGrid lg =
        make_labels(cfg.n_rows, cfg.n_cols, cfg.n_zones, cfg.imbalance,
                    derive_seed(cfg.seed, kStreamHarvestField, t),
                    derive_seed(cfg.seed, kStreamHarvestExtent, t));
    for (int r = 2; r < cfg.n_rows - 2; ++r)
      for (int c = 2; c < cfg.n_cols - 2; ++c) {
        if (!patch_complete(lg, r, c)) continue;
        raw[lg.at(r, c)].push_back(window_signature(lg, r, c));
      }
  }

  Rng rng(derive_seed(cfg.seed, kStreamPatchSample, 0));
  std::array<PatchSet, 2> out;
  for (int b = 0; b < 2; ++b) {
    std::vector<PatchSig>& list = raw[b];
    if (list.size() > kMaxPatchesPerClass) {
      std::vector<PatchSig> picked;
      picked.reserve(kMaxPatchesPerClass);
      for (std::size_t j :
           rng.sample_indices(list.size(), kMaxPatchesPerClass))
        picked.push_back(list[j]);
      list = std::move(picked);
    }
    std::map<PatchSig, double> dedup;
    for (const auto& g : list) dedup[g] += 1.0;
    for (const auto& [g, w] : dedup) {
      out[b].sig.push_back(g);
      out[b].weight.push_back(w);
    }
  }
  return out;
}

}  // namespace

OracleMetrics oracle_metrics(const SynthConfig& config) {
  config.validate();
  // Degenerate setups (grid too small for complete interior patches) yield an
  // empty estimate rather than an error.
  if (config.n_rows < 7 || config.n_cols < 7) return {};
  const std::array<PatchSet, 2> patches = harvest_patches(config);
  if (patches[0].sig.empty() || patches[1].sig.empty()) return {};

  // Per-feature whitening in units of the Student-t scale
  // s_f = sigma * |d_f| / kNoiseSd; the whitened class contrast of the base
  // prototypes is then sign(d_f) * kNoiseSd / sigma per feature.
  std::array<double, kFeatureCount> inv_s{}, unit_d{};
  for (int f = 0; f < kFeatureCount; ++f) {
    const double d = kProto[f][1] - kProto[f][0];
    const double s = config.sigma * std::fabs(d) / kNoiseSd;
    inv_s[f] = 1.0 / s;
    unit_d[f] = d / s;
  }

  long long correct[2] = {0, 0}, total[2] = {0, 0};

  for (int t = 0; t < kEvalCities; ++t) {
    const CityData city =
        make_city(config, derive_seed(config.seed, kStreamEvalField, t),
                  derive_seed(config.seed, kStreamEvalNoise, t),
                  derive_seed(config.seed, kStreamEvalOffsets, t),
                  derive_seed(config.seed, kStreamEvalExtent, t),
                  derive_seed(config.seed, kStreamEvalVariety, t));

    std::vector<std::pair<int, int>> favela, formal;
    for (int r = 2; r < config.n_rows - 2; ++r)
      for (int c = 2; c < config.n_cols - 2; ++c) {
        if (!patch_complete(city.labels, r, c)) continue;
        (city.labels.at(r, c) == 1 ? favela : formal).emplace_back(r, c);
      }
    if (favela.empty() || formal.empty()) continue;
    const std::size_t m = std::min(favela.size(), formal.size());
    Rng rng(derive_seed(config.seed, kStreamEvalSample, t));
    std::vector<std::pair<int, int>> sample = favela;
    if (sample.size() > m) sample.resize(m);
    for (std::size_t j : rng.sample_indices(formal.size(), m))
      sample.push_back(formal[j]);

    std::vector<double> ll;
    for (const auto& [r, c] : sample) {
      // Per window position, the log-likelihood of the observed features at
      // each gamma level, with the variety mixture marginalized out; each
      // feature contributes a Student-t log-density term.
      std::array<std::array<double, kGammaLevels>, 9> m{};
      int i = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc, ++i) {
          const int rr = r + dr, cc = c + dc;
          const int z = zone_of(cc, config.n_cols, config.n_zones);
          const auto& x =
              city.features[static_cast<std::size_t>(rr) * config.n_cols + cc];
          std::array<double, kFeatureCount> resid{};
          for (int f = 0; f < kFeatureCount; ++f)
            resid[f] = (x[f] - kProto[f][0] - city.zone_off[z][f]) * inv_s[f];
          for (int g = 0; g < kGammaLevels; ++g) {
            const double gam = gamma_of_level(g, config.lambda);
            std::array<double, kVarietyCount> ev{};
            double best = -1e300;
            for (int v = 0; v < kVarietyCount; ++v) {
              double qsum = 0.0;
              for (int f = 0; f < kFeatureCount; ++f) {
                const double u =
                    resid[f] - unit_d[f] * variety_strength(v, f) * gam;
                qsum += std::log1p(u * u / kNoiseNu);
              }
              ev[v] = -0.5 * (kNoiseNu + 1.0) * qsum;
              if (ev[v] > best) best = ev[v];
            }
            double sum = 0.0;
            for (int v = 0; v < kVarietyCount; ++v)
              sum += std::exp(ev[v] - best);
            m[i][g] = best + std::log(sum / kVarietyCount);
          }
        }

      // log p(X | y_c = b) up to a b-independent constant, marginalized over
      // harvested label patches.
      double logp[2];
      for (int b = 0; b < 2; ++b) {
        const PatchSet& ps = patches[b];
        double best = -1e300;
        ll.assign(ps.sig.size(), 0.0);
        for (std::size_t p = 0; p < ps.sig.size(); ++p) {
          const PatchSig& g = ps.sig[p];
          double s = 0.0;
          for (int j = 0; j < 9; ++j) s += m[j][g[j]];
          ll[p] = s;
          if (s > best) best = s;
        }
        double num = 0.0, den = 0.0;
        for (std::size_t p = 0; p < ps.sig.size(); ++p) {
          num += ps.weight[p] * std::exp(ll[p] - best);
          den += ps.weight[p];
        }
        logp[b] = best + std::log(num / den);
      }

      const int truth = city.labels.at(r, c);
      const int pred = logp[1] > logp[0] ? 1 : 0;
      ++total[truth];
      if (pred == truth) ++correct[truth];
    }
  }

  if (total[0] == 0 || total[1] == 0) return {};
  OracleMetrics om;
  om.n_samples = static_cast<std::size_t>(total[0] + total[1]);
  om.acc_favela = static_cast<double>(correct[1]) / total[1];
  om.acc_formal = static_cast<double>(correct[0]) / total[0];
  om.kappa = om.acc_favela + om.acc_formal - 1.0;
  return om;
}

SynthInfo synth_info(const FeatureTable& table) {
  SynthInfo info;
  info.n_cells = table.size();
  for (const CellRecord& r : table.records())
    if (r.label && *r.label == 1) ++info.n_favela;
  if (info.n_cells > 0)
    info.favela_fraction =
        static_cast<double>(info.n_favela) / static_cast<double>(info.n_cells);
  if (info.n_favela > 0)
    info.achieved_imbalance =
        static_cast<double>(info.n_cells - info.n_favela) /
        static_cast<double>(info.n_favela);
  return info;
}

std::string synth_sidecar_json(const SynthConfig& config,
                               const FeatureTable& table) {
  const SynthInfo info = synth_info(table);
  const OracleMetrics om = oracle_metrics(config);
  nlohmann::json doc{
      {"config",
       {{"rows", config.n_rows},
        {"cols", config.n_cols},
        {"zones", config.n_zones},
        {"imbalance", config.imbalance},
        {"lambda", config.lambda},
        {"sigma", config.sigma},
        {"seed", config.seed}}},
      {"labels",
       {{"n_cells", info.n_cells},
        {"n_favela", info.n_favela},
        {"favela_fraction", info.favela_fraction},
        {"achieved_imbalance", info.achieved_imbalance}}},
      {"oracle",
       {{"kappa", om.kappa},
        {"accuracy_favela", om.acc_favela},
        {"accuracy_formal", om.acc_formal},
        {"n_samples", om.n_samples}}}};
  return doc.dump(2) + "\n";
}

}  // namespace ismap
