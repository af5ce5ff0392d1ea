#include "popagg/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <optional>

#include "popagg/error.hpp"
#include "popagg/parallel.hpp"

namespace popagg {

namespace {

double minutes_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
}

long entry(const std::vector<long>& v, std::size_t i) { return i < v.size() ? v[i] : 0; }

void check_failures(int failed, int total, const std::string& what) {
  if (total > 0 && 10 * failed > total)
    throw Error(what + ": " + std::to_string(failed) + " of " + std::to_string(total) +
                " replicate fits failed (more than 10%)");
}

}  // namespace

FrameConfig DeskDesign::frame(double r_pop) const {
  FrameConfig f;
  f.r_pop = r_pop;
  f.fixed_per_ea = fixed_per_ea;
  f.fixed_households = std::lround(households_per_ea);
  f.fixed_target = std::lround(target_per_ea);
  const std::size_t n = std::max(eas_urban.size(), eas_rural.size());
  for (std::size_t a = 0; a < n; ++a)
    for (bool urban : {true, false}) {
      const long m = entry(urban ? eas_urban : eas_rural, a);
      if (m <= 0) continue;
      f.strata.push_back({static_cast<int>(a), urban, m, std::lround(households_per_ea * static_cast<double>(m)),
                          std::lround(target_per_ea * static_cast<double>(m))});
    }
  return f;
}

SurveyDesign DeskDesign::survey(double r_samp) const {
  SurveyDesign s;
  s.r_samp = r_samp;
  s.households_per_cluster = households_per_cluster;
  const std::size_t n = std::max(clusters_urban.size(), clusters_rural.size());
  for (std::size_t a = 0; a < n; ++a)
    for (bool urban : {true, false}) {
      const long k = entry(urban ? clusters_urban : clusters_rural, a);
      if (k > 0) s.clusters.push_back({static_cast<int>(a), urban, k});
    }
  return s;
}

DeskDesign default_gridres_design() {
  DeskDesign d;
  d.eas_urban = {800, 300, 300, 300};
  d.eas_rural = {0, 700, 700, 700};
  d.households_per_ea = 25;
  d.target_per_ea = 25;
  d.fixed_per_ea = true;
  d.clusters_urban = {80, 30, 30, 30};
  d.clusters_rural = {0, 50, 50, 50};
  return d;
}

DeskDesign default_scenario_design() {
  DeskDesign d;
  d.eas_urban = {800, 240, 240, 240};
  d.eas_rural = {0, 560, 560, 560};
  d.households_per_ea = 100;
  d.target_per_ea = 50;
  d.fixed_per_ea = false;
  d.clusters_urban = {40, 12, 12, 12};
  d.clusters_rural = {0, 28, 28, 28};
  return d;
}

TruthSimulator::TruthSimulator(const Domain& domain, const FieldParams& field, double lattice_km)
    : domain_(domain) {
  field.validate();
  POPAGG_REQUIRE(lattice_km > 0.0, "truth lattice resolution must be > 0");
  const Extent& e = domain.extent;
  const int nx = std::max(1, static_cast<int>(std::ceil(e.width() / lattice_km - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(e.height() / lattice_km - 1e-9)));
  std::vector<Point> nodes;
  nodes.reserve(static_cast<std::size_t>(nx * ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) nodes.push_back({e.xmin + (i + 0.5) * lattice_km, e.ymin + (j + 0.5) * lattice_km});
  node_of_cell_.reserve(domain.fine.cells.size());
  for (const auto& c : domain.fine.cells) {
    const int i = std::clamp(static_cast<int>(std::floor((c.center.x - e.xmin) / lattice_km)), 0, nx - 1);
    const int j = std::clamp(static_cast<int>(std::floor((c.center.y - e.ymin) / lattice_km)), 0, ny - 1);
    node_of_cell_.push_back(j * nx + i);
  }
  if (field.sigma2_s > 0.0) sampler_ = std::make_unique<FieldSampler>(nodes, field);
}

std::vector<double> TruthSimulator::field_at_cells(std::uint64_t seed) const {
  std::vector<double> u(node_of_cell_.size(), 0.0);
  if (!sampler_) return u;
  auto engine = rng::make_engine(seed);
  const Eigen::VectorXd nodes = sampler_->draw(engine);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = nodes[node_of_cell_[k]];
  return u;
}

TruthSample simulate_truth(const Domain& domain, const FrameConfig& frame, const ResponseParams& params,
                           const TruthSimulator& field, std::uint64_t seed) {
  params.validate();
  TruthSample out;
  out.eta = field.field_at_cells(rng::child(seed, 0));
  for (std::size_t k = 0; k < out.eta.size(); ++k)
    out.eta[k] += params.linear_predictor(domain.fine.cells[k].urban);
  FrameSampler sampler(frame, domain.fine);
  sampler.realize(rng::child(seed, 1), out.eta, params.sigma2_eps, true, out.frame);
  out.truth = frame_quantities(out.frame, domain.partition, true);
  return out;
}

void GridResConfig::validate() const {
  truth.validate();
  POPAGG_REQUIRE(resolutions.size() >= 2, "grid test needs at least 2 resolutions");
  for (double r : resolutions) POPAGG_REQUIRE(r > 0.0, "resolutions must be > 0");
  POPAGG_REQUIRE(n_replicates >= 0, "n_replicates must be >= 0");
  POPAGG_REQUIRE(n_draws >= 2, "n_draws must be >= 2");
  POPAGG_REQUIRE(!models.empty(), "grid test needs at least one model");
}

double GridResResult::value(ModelKind model, double resolution, const std::string& metric) const {
  for (const auto& r : rows)
    if (r.model == model && r.resolution == resolution && r.metric == metric) return r.value;
  throw ValidationError("no grid test row for " + std::string(model_name(model)) + " / " + metric);
}

namespace {

const char* const kGridMetrics[] = {"ci_width_95", "coverage_95", "ci_width_50", "coverage_50", "crps",
                                    "interval_score_95"};
constexpr std::size_t kGridMetricCount = 6;

struct GridRepScores {
  bool ok = false;
  // [resolution][model][metric]
  std::vector<std::array<std::array<double, kGridMetricCount>, 4>> values;
};

}  // namespace

GridResResult run_grid_resolution_test(const GridResConfig& config, const Domain& domain) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  GridResResult result;
  if (config.n_replicates == 0) return result;
  POPAGG_REQUIRE(config.target_admin1 >= 0 && config.target_admin1 < domain.partition.n_areas(Level::Admin1),
                 "target_admin1 out of range");

  const FrameConfig truth_frame = config.design.frame();
  const SurveyDesign survey_design = config.design.survey();
  FrameConfig predictive_frame = truth_frame;
  std::erase_if(predictive_frame.strata, [&](const StratumTotals& s) { return s.admin1 != config.target_admin1; });
  POPAGG_REQUIRE(!predictive_frame.strata.empty(), "target Admin1 has no frame strata");

  std::vector<Grid> grids;
  for (double res : config.resolutions)
    grids.push_back(restrict_to_admin1(
        ensure_area_representation(aggregation_grid(domain.fine, res), domain.partition, domain.fine),
        config.target_admin1));
  const TruthSimulator field(domain, config.truth.field, config.truth_lattice_km);

  const auto R = static_cast<std::size_t>(config.n_replicates);
  const std::size_t G = grids.size();
  std::vector<GridRepScores> reps(R);
  const int threads = std::max(1, config.threads);
  parallel_for(R, threads, [&](std::size_t r, int) {
    const std::uint64_t rep = r;
    const auto truth = simulate_truth(domain, truth_frame, config.truth, field,
                                      rng::derive(config.seed, rng::Stream::TruthFrame, rep));
    const auto obs = draw_survey(truth.frame, survey_design, rng::derive(config.seed, rng::Stream::Survey, rep));
    std::optional<LatentPosterior> post;
    try {
      post = laplace_fit(obs, config.truth, config.fit);
    } catch (const ConvergenceError&) {
      return;
    }
    std::map<std::pair<int, int>, double> truth_value;
    for (const auto& t : truth.truth)
      if (t.level == config.score_level && t.quantity == config.score_quantity && t.defined)
        truth_value[{static_cast<int>(t.level), t.area}] = t.value;

    auto& out = reps[r];
    out.values.assign(G, {});
    for (std::size_t g = 0; g < G; ++g) {
      const auto ens = predictive_ensemble(*post, grids[g], domain.partition, predictive_frame, config.models,
                                           config.truth, config.n_draws,
                                           rng::derive(config.seed, rng::Stream::PosteriorTheta, rep), {config.quad_order, 1});
      std::array<int, 4> counted{};
      for (auto& row : out.values[g]) row.fill(0.0);
      for (const auto& e : ens.ensembles) {
        if (e.level != config.score_level || e.quantity != config.score_quantity) continue;
        const auto t = truth_value.find({static_cast<int>(e.level), e.area});
        const auto draws = e.defined_draws();
        if (t == truth_value.end() || draws.empty()) continue;
        const auto s = score_area(draws, t->second);
        auto& v = out.values[g][static_cast<std::size_t>(e.model)];
        v[0] += 1000.0 * s.width95;
        v[1] += 100.0 * s.cov95;
        v[2] += 1000.0 * s.width50;
        v[3] += 100.0 * s.cov50;
        v[4] += s.crps;
        v[5] += s.is95;
        ++counted[static_cast<std::size_t>(e.model)];
      }
      for (std::size_t m = 0; m < 4; ++m)
        if (counted[m] > 0)
          for (auto& x : out.values[g][m]) x /= counted[m];
    }
    out.ok = true;
  });

  int ok = 0;
  for (const auto& r : reps) ok += r.ok ? 1 : 0;
  result.n_replicates = ok;
  result.n_failed = config.n_replicates - ok;
  check_failures(result.n_failed, config.n_replicates, "grid resolution test");
  for (ModelKind m : config.models)
    for (std::size_t g = 0; g < G; ++g)
      for (std::size_t k = 0; k < kGridMetricCount; ++k) {
        double sum = 0.0;
        for (const auto& r : reps)
          if (r.ok) sum += r.values[g][static_cast<std::size_t>(m)][k];
        result.rows.push_back({m, config.resolutions[g], kGridMetrics[k], ok > 0 ? sum / ok : 0.0});
      }
  result.runtime_minutes = minutes_since(start);
  return result;
}

void ScenarioConfig::validate() const {
  POPAGG_REQUIRE(phi >= 0.0 && std::isfinite(phi), "phi must be >= 0");
  POPAGG_REQUIRE(r_pop > 0.0 && r_samp > 0.0, "r_pop and r_samp must be > 0");
  POPAGG_REQUIRE(n_replicates >= 0, "n_replicates must be >= 0");
  response().validate();
}

ResponseParams ScenarioConfig::response() const {
  ResponseParams p;
  p.beta0 = beta0;
  p.beta_urb = beta_urb;
  p.sigma2_eps = sigma2_eps;
  p.field = FieldParams{phi * sigma2_eps, range_km, 1.0};
  return p;
}

std::vector<ScenarioConfig> default_scenarios() {
  std::vector<ScenarioConfig> out;
  for (double r_pop : {0.2, 5.0})
    for (double phi : {1.0 / 9.0, 1.0}) {
      ScenarioConfig s;
      s.r_pop = r_pop;
      s.phi = phi;
      out.push_back(s);
    }
  return out;
}

double ScenarioResult::value(double r_pop, double phi, Level level, Quantity quantity,
                             const std::string& metric) const {
  for (const auto& r : rows)
    if (r.scenario.r_pop == r_pop && r.scenario.phi == phi && r.level == level && r.quantity == quantity &&
        r.metric == metric)
      return r.relative_pct;
  throw ValidationError("no scenario row for " + metric);
}

namespace {

constexpr ModelKind kProposed[2] = {ModelKind::Empirical, ModelKind::Latent};

struct ScenarioRep {
  bool ok = false;
  // key: (level, quantity) -> [crps_emp, crps_lat, is_emp, is_lat], NaN when not computable
  std::map<std::pair<int, int>, std::array<double, 4>> rel;
};

}  // namespace

ScenarioResult run_scenario_study(const ScenarioStudyConfig& config, const Domain& domain) {
  POPAGG_REQUIRE(!config.scenarios.empty(), "scenario study needs at least one scenario");
  POPAGG_REQUIRE(config.n_draws >= 2, "n_draws must be >= 2");
  const auto start = std::chrono::steady_clock::now();
  ScenarioResult result;
  const Grid grid =
      ensure_area_representation(aggregation_grid(domain.fine, config.resolution), domain.partition, domain.fine);
  const std::vector<ModelKind> models{ModelKind::SmoothLatent, ModelKind::Latent, ModelKind::Empirical};
  const int threads = std::max(1, config.threads);

  for (std::size_t si = 0; si < config.scenarios.size(); ++si) {
    const auto& sc = config.scenarios[si];
    sc.validate();
    const ResponseParams params = sc.response();
    const FrameConfig frame = config.design.frame(sc.r_pop);
    const SurveyDesign survey = config.design.survey(sc.r_samp);
    const TruthSimulator field(domain, params.field, config.truth_lattice_km);
    std::vector<ScenarioRep> reps(static_cast<std::size_t>(sc.n_replicates));

    parallel_for(reps.size(), threads, [&](std::size_t r, int) {
      const auto truth = simulate_truth(domain, frame, params, field,
                                        rng::derive(config.seed, rng::Stream::TruthFrame, r, si));
      const auto obs = draw_survey(truth.frame, survey, rng::derive(config.seed, rng::Stream::Survey, r, si));
      std::optional<LatentPosterior> post;
      try {
        post = laplace_fit(obs, params, config.fit);
      } catch (const ConvergenceError&) {
        return;
      }
      const auto ens = predictive_ensemble(*post, grid, domain.partition, frame, models, params, config.n_draws,
                                           rng::derive(config.seed, rng::Stream::PosteriorTheta, r, si),
                                           {config.quad_order, 1});
      const auto reports = score_ensembles(ens.ensembles, truth.truth);
      std::map<std::tuple<int, int, int>, const ScoreReport*> by_key;
      for (const auto& rep : reports)
        if (rep.n_areas_scored > 0)
          by_key[{static_cast<int>(rep.level), static_cast<int>(rep.quantity), static_cast<int>(rep.model)}] = &rep;
      auto& out = reps[r];
      for (const auto& [key, ref] : by_key) {
        if (std::get<2>(key) != static_cast<int>(ModelKind::SmoothLatent)) continue;
        std::array<double, 4> v;
        v.fill(std::numeric_limits<double>::quiet_NaN());
        for (std::size_t p = 0; p < 2; ++p) {
          const auto it = by_key.find({std::get<0>(key), std::get<1>(key), static_cast<int>(kProposed[p])});
          if (it == by_key.end()) continue;
          if (ref->crps > 0.0) v[p] = relative_score(it->second->crps, ref->crps);
          if (ref->interval_score_95 > 0.0)
            v[2 + p] = relative_score(it->second->interval_score_95, ref->interval_score_95);
        }
        out.rel[{std::get<0>(key), std::get<1>(key)}] = v;
      }
      out.ok = true;
    });

    int ok = 0;
    for (const auto& r : reps) ok += r.ok ? 1 : 0;
    result.n_failed += sc.n_replicates - ok;
    check_failures(sc.n_replicates - ok, sc.n_replicates, "scenario study");

    static const char* const metrics[4] = {"crps_empirical", "crps_latent", "interval_score_95_empirical",
                                           "interval_score_95_latent"};
    for (Level l : kLevels)
      for (Quantity q : kQuantities)
        for (std::size_t k = 0; k < 4; ++k) {
          double sum = 0.0;
          int n = 0;
          for (const auto& r : reps) {
            if (!r.ok) continue;
            const auto it = r.rel.find({static_cast<int>(l), static_cast<int>(q)});
            if (it == r.rel.end() || std::isnan(it->second[k])) continue;
            sum += it->second[k];
            ++n;
          }
          if (n > 0) result.rows.push_back({sc, l, q, metrics[k], sum / n, n});
        }
  }
  result.runtime_minutes = minutes_since(start);
  return result;
}

}  // namespace popagg
