#include "popagg/aggregation.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>

#include "popagg/error.hpp"
#include "popagg/parallel.hpp"

namespace popagg {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::string_view model_name(ModelKind m) {
  switch (m) {
    case ModelKind::Gridded: return "gridded";
    case ModelKind::SmoothLatent: return "smooth_latent";
    case ModelKind::Latent: return "latent";
    case ModelKind::Empirical: return "empirical";
  }
  return "?";
}

ModelKind parse_model(std::string_view name) {
  for (ModelKind m : kAllModels)
    if (model_name(m) == name) return m;
  throw ValidationError("unknown model '" + std::string(name) + "'");
}

std::string_view quantity_name(Quantity q) {
  switch (q) {
    case Quantity::Prevalence: return "prevalence";
    case Quantity::Burden: return "burden";
    case Quantity::RelativePrevalence: return "relative_prevalence";
  }
  return "?";
}

Quantity parse_quantity(std::string_view name) {
  for (Quantity q : kQuantities)
    if (quantity_name(q) == name) return q;
  throw ValidationError("unknown quantity '" + std::string(name) + "'");
}

std::vector<double> ArealEnsemble::defined_draws() const {
  std::vector<double> out;
  out.reserve(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i)
    if (defined[i]) out.push_back(draws[i]);
  return out;
}

double expit(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

SmoothRisk::SmoothRisk(double sigma2_eps, int quad_order) {
  POPAGG_REQUIRE(sigma2_eps >= 0.0, "sigma2_eps must be >= 0");
  if (sigma2_eps == 0.0) {
    nodes_ = {0.0};
    weights_ = {1.0};
    return;
  }
  GaussHermite gh(quad_order);
  const double s = std::sqrt(sigma2_eps);
  for (double x : gh.nodes()) nodes_.push_back(s * x);
  weights_ = gh.weights();
}

double SmoothRisk::operator()(double eta) const {
  double r = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) r += weights_[i] * expit(eta + nodes_[i]);
  return r;
}

double smooth_risk_point(double eta, double sigma2_eps, int quad_order) {
  return SmoothRisk(sigma2_eps, quad_order)(eta);
}

namespace {

AreaEstimate weighted_mean(std::span<const double> r, std::span<const double> w, double target_total) {
  double sw = 0.0, swr = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    sw += w[k];
    swr += w[k] * r[k];
  }
  if (!(sw > 0.0)) return {kNaN, 0.0, false};
  const double risk = swr / sw;
  return {risk, target_total * risk, true};
}

}  // namespace

AreaEstimate aggregate_smooth(std::span<const double> eta, std::span<const double> weights, double sigma2_eps,
                              int quad_order, double target_total) {
  POPAGG_REQUIRE(eta.size() == weights.size(), "eta/weights size mismatch");
  SmoothRisk smooth(sigma2_eps, quad_order);
  std::vector<double> r(eta.size());
  for (std::size_t k = 0; k < eta.size(); ++k) r[k] = smooth(eta[k]);
  return weighted_mean(r, weights, target_total);
}

AreaEstimate aggregate_gridded(std::span<const double> eta, std::span<const double> weights, double sigma2_eps,
                               double target_total, rng::Engine& engine) {
  POPAGG_REQUIRE(eta.size() == weights.size(), "eta/weights size mismatch");
  POPAGG_REQUIRE(sigma2_eps >= 0.0, "sigma2_eps must be >= 0");
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2_eps));
  std::vector<double> r(eta.size());
  for (std::size_t k = 0; k < eta.size(); ++k) r[k] = expit(eta[k] + (sigma2_eps > 0 ? normal(engine) : 0.0));
  return weighted_mean(r, weights, target_total);
}

namespace {

AreaEstimate frame_estimate(const SamplingFrame& frame, Level level, int area, bool use_outcomes) {
  double n = 0.0, v = 0.0;
  for (const auto& ea : frame.eas) {
    if (ea.area(level) != area) continue;
    n += static_cast<double>(ea.n_target);
    v += use_outcomes ? static_cast<double>(ea.z) : static_cast<double>(ea.n_target) * ea.risk;
  }
  if (!(n > 0.0)) return {kNaN, 0.0, false};
  return {v / n, v, true};
}

}  // namespace

AreaEstimate aggregate_latent(const SamplingFrame& frame, Level level, int area) {
  return frame_estimate(frame, level, area, false);
}

AreaEstimate aggregate_empirical(const SamplingFrame& frame, Level level, int area) {
  return frame_estimate(frame, level, area, true);
}

std::optional<double> relative_prevalence(double urban_value, double rural_value) {
  if (!std::isfinite(urban_value) || !std::isfinite(rural_value) || !(rural_value > 0.0)) return std::nullopt;
  return urban_value / rural_value;
}

AreaAccumulator::AreaAccumulator(const ArealPartition& partition) {
  std::size_t total = 0;
  for (Level l : kLevels) {
    const int i = static_cast<int>(l);
    n_[static_cast<std::size_t>(i)] = partition.n_areas(l);
    offset_[static_cast<std::size_t>(i)] = total;
    total += 2 * static_cast<std::size_t>(partition.n_areas(l));
  }
  cells_.assign(total, Cell{});
}

void AreaAccumulator::clear() { std::fill(cells_.begin(), cells_.end(), Cell{}); }

void AreaAccumulator::add(const std::array<int, 3>& area_by_level, bool urban, std::uint8_t levels, double n,
                          double z, double nr) {
  for (Level l : kLevels) {
    const auto i = static_cast<std::size_t>(l);
    const int a = area_by_level[i];
    if (!(levels & level_bit(l)) || a < 0) continue;
    auto& c = cells_[offset_[i] + 2 * static_cast<std::size_t>(a) + (urban ? 1 : 0)];
    c.n += n;
    c.z += z;
    c.nr += nr;
    ++c.count;
  }
}

void AreaAccumulator::add(const EnumerationArea& ea) {
  const double n = static_cast<double>(ea.n_target);
  add({ea.admin1, ea.admin2, stratum_area(ea.admin2, ea.urban)}, ea.urban, kAllLevels, n, static_cast<double>(ea.z),
      n * ea.risk);
}

const AreaAccumulator::Cell& AreaAccumulator::cell(Level level, int area, int stratum) const {
  const auto i = static_cast<std::size_t>(level);
  return cells_[offset_[i] + 2 * static_cast<std::size_t>(area) + static_cast<std::size_t>(stratum)];
}

AreaEstimate AreaAccumulator::estimate(Level level, int area, bool use_outcomes) const {
  const auto& r = cell(level, area, 0);
  const auto& u = cell(level, area, 1);
  const double n = r.n + u.n;
  const double v = use_outcomes ? r.z + u.z : r.nr + u.nr;
  if (!(n > 0.0)) return {kNaN, v, false};
  return {v / n, v, true};
}

std::optional<double> AreaAccumulator::relative(Level level, int area, bool use_outcomes) const {
  if (level == Level::Admin2Stratum) return std::nullopt;
  const auto& r = cell(level, area, 0);
  const auto& u = cell(level, area, 1);
  if (!(r.n > 0.0) || !(u.n > 0.0)) return std::nullopt;
  return relative_prevalence((use_outcomes ? u.z : u.nr) / u.n, (use_outcomes ? r.z : r.nr) / r.n);
}

bool AreaAccumulator::touched(Level level, int area) const {
  return cell(level, area, 0).count > 0 || cell(level, area, 1).count > 0;
}

namespace {

struct Entry {
  Level level;
  int area;
  Quantity quantity;
};

std::vector<Entry> catalog(const AreaAccumulator& acc) {
  std::vector<Entry> out;
  for (Level l : kLevels)
    for (int a = 0; a < acc.n_areas(l); ++a) {
      if (!acc.touched(l, a)) continue;
      out.push_back({l, a, Quantity::Prevalence});
      out.push_back({l, a, Quantity::Burden});
      if (l != Level::Admin2Stratum) out.push_back({l, a, Quantity::RelativePrevalence});
    }
  return out;
}

void read_out(const AreaAccumulator& acc, const std::vector<Entry>& entries, bool use_outcomes, double* values,
              std::uint8_t* defined, std::size_t stride) {
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto& en = entries[e];
    double v = kNaN;
    bool ok = false;
    if (en.quantity == Quantity::RelativePrevalence) {
      if (auto r = acc.relative(en.level, en.area, use_outcomes)) {
        v = *r;
        ok = true;
      }
    } else {
      const auto est = acc.estimate(en.level, en.area, use_outcomes);
      if (en.quantity == Quantity::Burden) {
        v = est.burden;
        ok = true;
      } else if (est.defined) {
        v = est.risk;
        ok = true;
      }
    }
    values[e * stride] = ok ? v : kNaN;
    defined[e * stride] = ok ? 1 : 0;
  }
}

std::array<int, 3> areas_of(const GridCell& c) { return {c.admin1, c.admin2, c.area(Level::Admin2Stratum)}; }

}  // namespace

std::vector<AreaQuantity> frame_quantities(const SamplingFrame& frame, const ArealPartition& partition,
                                           bool use_outcomes) {
  AreaAccumulator acc(partition);
  for (const auto& ea : frame.eas) acc.add(ea);
  const auto entries = catalog(acc);
  std::vector<double> values(entries.size());
  std::vector<std::uint8_t> defined(entries.size());
  read_out(acc, entries, use_outcomes, values.data(), defined.data(), 1);
  std::vector<AreaQuantity> out;
  out.reserve(entries.size());
  for (std::size_t e = 0; e < entries.size(); ++e)
    out.push_back({entries[e].level, entries[e].area, entries[e].quantity, values[e], defined[e] != 0});
  return out;
}

EnsembleSet predictive_ensemble(const LatentPosterior& posterior, const Grid& grid, const ArealPartition& partition,
                                const FrameConfig& frame_config, const std::vector<ModelKind>& models,
                                const ResponseParams& params, int n_draws, std::uint64_t seed,
                                const PredictOptions& options) {
  params.validate();
  POPAGG_REQUIRE(n_draws >= 1, "n_draws must be >= 1");
  POPAGG_REQUIRE(!grid.cells.empty(), "aggregation grid is empty");
  bool want[4] = {false, false, false, false};
  for (ModelKind m : models) want[static_cast<int>(m)] = true;
  const bool need_frame = want[2] || want[3];
  const auto D = static_cast<std::size_t>(n_draws);

  // Target-scaled weights: density mass spread over the configured N of each stratum.
  const auto totals = frame_config.effective();
  std::map<std::pair<int, bool>, double> stratum_n, stratum_w;
  for (const auto& s : totals) stratum_n[{s.admin1, s.urban}] = static_cast<double>(s.n);
  for (const auto& c : grid.cells)
    if (c.levels == kAllLevels) stratum_w[{c.admin1, c.urban}] += c.weight;
  std::vector<double> target(grid.cells.size(), 0.0);
  for (std::size_t k = 0; k < grid.cells.size(); ++k) {
    const auto& c = grid.cells[k];
    const auto key = std::make_pair(c.admin1, c.urban);
    const auto it = stratum_n.find(key);
    if (it == stratum_n.end()) {
      if (c.weight > 0.0)
        throw ValidationError("grid point in a stratum missing from the frame configuration (admin1 " +
                              std::to_string(c.admin1) + ")");
      continue;
    }
    const double w = stratum_w[key];
    target[k] = w > 0.0 ? c.weight * it->second / w : 0.0;
  }

  AreaAccumulator layout(partition);
  for (std::size_t k = 0; k < grid.cells.size(); ++k)
    layout.add(areas_of(grid.cells[k]), grid.cells[k].urban, grid.cells[k].levels, target[k], 0.0, 0.0);
  const auto entries = catalog(layout);
  const std::size_t E = entries.size();

  std::vector<PredictionPoint> points;
  points.reserve(grid.cells.size());
  for (const auto& c : grid.cells) points.push_back({c.center, c.urban});
  const Eigen::MatrixXd eta = posterior.sample_eta_columns(points, n_draws, rng::child(seed, 1));

  std::vector<std::vector<double>> values(4);
  std::vector<std::vector<std::uint8_t>> defined(4);
  for (int m = 0; m < 4; ++m)
    if (want[m]) {
      values[static_cast<std::size_t>(m)].assign(E * D, kNaN);
      defined[static_cast<std::size_t>(m)].assign(E * D, 0);
    }

  const int threads = std::max(1, options.threads);
  std::unique_ptr<FrameSampler> sampler;
  if (need_frame) sampler = std::make_unique<FrameSampler>(frame_config, grid);
  const SmoothRisk smooth(params.sigma2_eps, options.quad_order);
  const std::uint64_t nugget_seed = rng::child(seed, 2);
  const std::uint64_t frame_seed = rng::child(seed, 3);

  struct Workspace {
    AreaAccumulator acc;
    SamplingFrame frame;
  };
  std::vector<Workspace> work;
  for (int w = 0; w < threads; ++w) work.push_back({AreaAccumulator(partition), {}});

  parallel_for(D, threads, [&](std::size_t d, int w) {
    auto& ws = work[static_cast<std::size_t>(w)];
    const double* col = eta.col(static_cast<Eigen::Index>(d)).data();
    auto emit = [&](ModelKind m, bool use_outcomes) {
      const auto mi = static_cast<std::size_t>(m);
      read_out(ws.acc, entries, use_outcomes, values[mi].data() + d, defined[mi].data() + d, D);
    };
    if (want[static_cast<int>(ModelKind::SmoothLatent)]) {
      ws.acc.clear();
      for (std::size_t k = 0; k < grid.cells.size(); ++k) {
        const auto& c = grid.cells[k];
        ws.acc.add(areas_of(c), c.urban, c.levels, target[k], 0.0, target[k] * smooth(col[k]));
      }
      emit(ModelKind::SmoothLatent, false);
    }
    if (want[static_cast<int>(ModelKind::Gridded)]) {
      auto engine = rng::make_engine(rng::child(nugget_seed, d));
      std::normal_distribution<double> normal(0.0, std::sqrt(params.sigma2_eps));
      ws.acc.clear();
      for (std::size_t k = 0; k < grid.cells.size(); ++k) {
        const auto& c = grid.cells[k];
        const double r = expit(col[k] + (params.sigma2_eps > 0 ? normal(engine) : 0.0));
        ws.acc.add(areas_of(c), c.urban, c.levels, target[k], 0.0, target[k] * r);
      }
      emit(ModelKind::Gridded, false);
    }
    if (need_frame) {
      sampler->realize(rng::child(frame_seed, d), std::span<const double>(col, grid.cells.size()),
                       params.sigma2_eps, want[static_cast<int>(ModelKind::Empirical)], ws.frame);
      ws.acc.clear();
      for (const auto& ea : ws.frame.eas) ws.acc.add(ea);
      if (want[static_cast<int>(ModelKind::Latent)]) emit(ModelKind::Latent, false);
      if (want[static_cast<int>(ModelKind::Empirical)]) emit(ModelKind::Empirical, true);
    }
  });

  EnsembleSet out;
  for (ModelKind m : models) {
    const auto mi = static_cast<std::size_t>(m);
    for (std::size_t e = 0; e < E; ++e) {
      ArealEnsemble en;
      en.level = entries[e].level;
      en.area = entries[e].area;
      en.quantity = entries[e].quantity;
      en.model = m;
      en.draws.assign(values[mi].begin() + static_cast<std::ptrdiff_t>(e * D),
                      values[mi].begin() + static_cast<std::ptrdiff_t>((e + 1) * D));
      en.defined.assign(defined[mi].begin() + static_cast<std::ptrdiff_t>(e * D),
                        defined[mi].begin() + static_cast<std::ptrdiff_t>((e + 1) * D));
      out.ensembles.push_back(std::move(en));
    }
  }
  return out;
}

}  // namespace popagg
