#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "popagg/aggregation.hpp"
#include "popagg/domain.hpp"
#include "popagg/latent_inference.hpp"
#include "popagg/response_survey.hpp"
#include "popagg/sampling_frame.hpp"
#include "popagg/scoring.hpp"

namespace popagg {

// Per-Admin1 frame and survey sizes. Entries with zero EAs or clusters are skipped.
struct DeskDesign {
  std::vector<long> eas_urban, eas_rural;
  double households_per_ea = 25.0;
  double target_per_ea = 25.0;
  bool fixed_per_ea = true;
  std::vector<long> clusters_urban, clusters_rural;
  int households_per_cluster = 25;

  FrameConfig frame(double r_pop = 1.0) const;
  SurveyDesign survey(double r_samp = 1.0) const;
};

DeskDesign default_gridres_design();
DeskDesign default_scenario_design();

// True field on a regular lattice over the domain; fine cells take the value of the nearest node.
// The factorization is done once and reused across replicates.
class TruthSimulator {
 public:
  TruthSimulator(const Domain& domain, const FieldParams& field, double lattice_km);
  // u at every fine grid cell for one replicate.
  std::vector<double> field_at_cells(std::uint64_t seed) const;

 private:
  const Domain& domain_;
  std::vector<int> node_of_cell_;
  std::unique_ptr<FieldSampler> sampler_;
};

struct TruthSample {
  SamplingFrame frame;
  std::vector<AreaQuantity> truth;  // all levels and quantities, from outcomes
  std::vector<double> eta;          // per fine cell, without nugget
};

// One population drawn from the empirical frame model over the domain's fine grid.
TruthSample simulate_truth(const Domain& domain, const FrameConfig& frame, const ResponseParams& params,
                           const TruthSimulator& field, std::uint64_t seed);

struct GridResConfig {
  ResponseParams truth{-2.9, -1.0, FieldParams{1.0 / 9.0, 400.0, 1.0}, 0.4};
  std::vector<double> resolutions{0.5, 2.5, 12.5, 62.5};
  int target_admin1 = 0;
  Level score_level = Level::Admin2;
  Quantity score_quantity = Quantity::Prevalence;
  std::vector<ModelKind> models{ModelKind::Gridded, ModelKind::SmoothLatent, ModelKind::Latent,
                                ModelKind::Empirical};
  DeskDesign design = default_gridres_design();
  FitOptions fit;
  int n_replicates = 100;
  int n_draws = 1000;
  int quad_order = 25;
  double truth_lattice_km = 2.5;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct GridResRow {
  ModelKind model;
  double resolution;
  std::string metric;  // ci_width_95/50 (per 1000), coverage_95/50 (percent), crps, interval_score_95
  double value;
};

struct GridResResult {
  std::vector<GridResRow> rows;  // ordered by model, resolution, metric
  int n_replicates = 0;
  int n_failed = 0;
  double runtime_minutes = 0.0;

  double value(ModelKind model, double resolution, const std::string& metric) const;
};

GridResResult run_grid_resolution_test(const GridResConfig& config, const Domain& domain);

struct ScenarioConfig {
  double beta0 = -4.0;
  double phi = 1.0 / 3.0;  // σ_S² / σ_ε²
  double r_pop = 1.0;
  double r_samp = 1.0;
  double range_km = 450.0;
  double sigma2_eps = 0.45;
  double beta_urb = -1.0;
  int n_replicates = 25;

  void validate() const;
  ResponseParams response() const;
};

struct ScenarioStudyConfig {
  std::vector<ScenarioConfig> scenarios;
  DeskDesign design = default_scenario_design();
  double resolution = 5.0;
  FitOptions fit;
  int n_draws = 500;
  int quad_order = 25;
  double truth_lattice_km = 2.5;
  std::uint64_t seed = 1;
  int threads = 1;
};

// The 2×2 sub-grid r_pop ∈ {1/5, 5} × φ ∈ {1/9, 1} around β0 = −4, r_samp = 1.
std::vector<ScenarioConfig> default_scenarios();

struct ScenarioRow {
  ScenarioConfig scenario;
  Level level;
  Quantity quantity;
  std::string metric;  // crps_<model> or interval_score_95_<model>
  double relative_pct;  // mean over replicates of 100 (S_model − S_smooth) / S_smooth
  int n_reps;
};

struct ScenarioResult {
  std::vector<ScenarioRow> rows;
  int n_failed = 0;
  double runtime_minutes = 0.0;

  double value(double r_pop, double phi, Level level, Quantity quantity, const std::string& metric) const;
};

ScenarioResult run_scenario_study(const ScenarioStudyConfig& config, const Domain& domain);

}  // namespace popagg
