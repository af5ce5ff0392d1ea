#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "popagg/latent_inference.hpp"
#include "popagg/quadrature.hpp"
#include "popagg/rng.hpp"
#include "popagg/sampling_frame.hpp"
#include "popagg/spatial_grid.hpp"

namespace popagg {

enum class ModelKind : std::uint8_t { Gridded = 0, SmoothLatent = 1, Latent = 2, Empirical = 3 };
inline constexpr ModelKind kAllModels[4] = {ModelKind::Gridded, ModelKind::SmoothLatent, ModelKind::Latent,
                                            ModelKind::Empirical};
std::string_view model_name(ModelKind model);
ModelKind parse_model(std::string_view name);

// Prevalence for the empirical model, risk for the others.
enum class Quantity : std::uint8_t { Prevalence = 0, Burden = 1, RelativePrevalence = 2 };
inline constexpr Quantity kQuantities[3] = {Quantity::Prevalence, Quantity::Burden, Quantity::RelativePrevalence};
std::string_view quantity_name(Quantity quantity);
Quantity parse_quantity(std::string_view name);

struct ArealEnsemble {
  Level level = Level::Admin1;
  int area = -1;
  Quantity quantity = Quantity::Prevalence;
  ModelKind model = ModelKind::Empirical;
  std::vector<double> draws;          // NaN where undefined
  std::vector<std::uint8_t> defined;  // per draw

  std::vector<double> defined_draws() const;
};

// One true (or point) value per area and quantity.
struct AreaQuantity {
  Level level = Level::Admin1;
  int area = -1;
  Quantity quantity = Quantity::Prevalence;
  double value = 0.0;
  bool defined = false;
};

// r_smooth(η) = E[expit(η + ε)], ε ~ N(0, σ_ε²).
class SmoothRisk {
 public:
  SmoothRisk(double sigma2_eps, int quad_order = 25);
  double operator()(double eta) const;

 private:
  std::vector<double> nodes_, weights_;
};

double expit(double x);
double smooth_risk_point(double eta, double sigma2_eps, int quad_order = 25);

struct AreaEstimate {
  double risk = 0.0;    // prevalence for the empirical estimator
  double burden = 0.0;
  bool defined = false;  // false when the area has no population (risk undefined, burden 0)
};

// Burden uses target-scaled weights w_k · N_A / Σw, i.e. N_A × risk.
AreaEstimate aggregate_smooth(std::span<const double> eta, std::span<const double> weights, double sigma2_eps,
                              int quad_order, double target_total);
AreaEstimate aggregate_gridded(std::span<const double> eta, std::span<const double> weights, double sigma2_eps,
                               double target_total, rng::Engine& engine);
AreaEstimate aggregate_latent(const SamplingFrame& frame, Level level, int area);
AreaEstimate aggregate_empirical(const SamplingFrame& frame, Level level, int area);
std::optional<double> relative_prevalence(double urban_value, double rural_value);

// Per-area, per-stratum sums (population, outcomes, population × risk) at every level.
class AreaAccumulator {
 public:
  explicit AreaAccumulator(const ArealPartition& partition);
  void clear();
  void add(const std::array<int, 3>& area_by_level, bool urban, std::uint8_t levels, double n, double z, double nr);
  void add(const EnumerationArea& ea);
  // use_outcomes: prevalence/burden from Z (empirical) instead of N·r.
  AreaEstimate estimate(Level level, int area, bool use_outcomes) const;
  std::optional<double> relative(Level level, int area, bool use_outcomes) const;
  bool touched(Level level, int area) const;
  int n_areas(Level level) const { return n_[static_cast<int>(level)]; }

 private:
  struct Cell {
    double n = 0, z = 0, nr = 0;
    long count = 0;
  };
  const Cell& cell(Level level, int area, int stratum) const;
  std::array<int, 3> n_{};
  std::array<std::size_t, 3> offset_{};
  std::vector<Cell> cells_;
};

// Eq. (1) quantities of a realized frame for every area with at least one EA.
std::vector<AreaQuantity> frame_quantities(const SamplingFrame& frame, const ArealPartition& partition,
                                           bool use_outcomes = true);

struct PredictOptions {
  int quad_order = 25;
  int threads = 1;
};

struct EnsembleSet {
  std::vector<ArealEnsemble> ensembles;  // ordered by model, level, area, quantity
};

// Per posterior draw: Gridded/SmoothLatent evaluate η on the grid, Latent/Empirical draw a fresh
// frame from it. Draw d uses streams derived from (seed, d) only, so results do not depend on
// the thread count; Latent and Empirical share the frame of each draw.
EnsembleSet predictive_ensemble(const LatentPosterior& posterior, const Grid& grid, const ArealPartition& partition,
                                const FrameConfig& frame_config, const std::vector<ModelKind>& models,
                                const ResponseParams& params, int n_draws, std::uint64_t seed,
                                const PredictOptions& options = {});

}  // namespace popagg
