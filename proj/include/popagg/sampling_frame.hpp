#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "popagg/latent_inference.hpp"
#include "popagg/rng.hpp"
#include "popagg/spatial_grid.hpp"

namespace popagg {

inline constexpr int kMinHouseholds = 25;

struct EnumerationArea {
  Point location;
  bool urban = false;
  int admin1 = -1;
  int admin2 = -1;
  int cell = -1;  // index of the grid point the EA was placed in
  long h = 0;
  long n_target = 0;
  double eps = 0.0;
  double risk = 0.0;
  long z = 0;

  int area(Level level) const;
};

// Totals for the urban or rural part of one Admin1 area.
struct StratumTotals {
  int admin1 = -1;
  bool urban = false;
  long m = 0;  // EAs
  long h = 0;  // households
  long n = 0;  // target population
};

struct FrameConfig {
  std::vector<StratumTotals> strata;  // at r_pop = 1
  double r_pop = 1.0;
  // Every EA gets exactly fixed_households households and fixed_target target individuals.
  bool fixed_per_ea = false;
  long fixed_households = 25;
  long fixed_target = 25;
  std::uint64_t stream = static_cast<std::uint64_t>(rng::Stream::Frame);

  void validate() const;
  // Totals after scaling M, H and N by r_pop (rounded, M at least 1, H at least 25 M).
  std::vector<StratumTotals> effective() const;
};

struct SamplingFrame {
  std::vector<EnumerationArea> eas;
  std::vector<StratumTotals> totals;
};

struct EaPlacement {
  Point location;
  bool urban = false;
  int cell = -1;
};

// m iid draws: grid point ∝ weight (uniform over eligible points if all weights are 0), then a
// uniform position inside that point's lattice cell.
std::vector<EaPlacement> draw_ea_locations(long m, const Grid& grid,
                                           const std::function<bool(const GridCell&)>& area_filter,
                                           std::uint64_t seed);

std::vector<long> allocate_households(long m, long h_total, std::uint64_t seed);
std::vector<long> allocate_target(long n_total, const std::vector<long>& h, std::uint64_t seed);

// Multinomial(n, probs) by sequential conditional binomials; probs need not be normalized.
void multinomial(long n, std::span<const double> probs, rng::Engine& engine, std::span<long> out);

// Draws frames repeatedly over one grid; the per-stratum cell distributions are built once.
class FrameSampler {
 public:
  FrameSampler(const FrameConfig& config, const Grid& grid);

  // eta[k] is η (covariates + field, no nugget) at grid point k. Outcomes are drawn only when
  // with_outcomes is set; otherwise z stays 0.
  void realize(std::uint64_t seed, std::span<const double> eta, double sigma2_eps, bool with_outcomes,
               SamplingFrame& out) const;

  const std::vector<StratumTotals>& totals() const { return totals_; }
  const Grid& grid() const { return grid_; }

 private:
  struct Stratum {
    std::vector<int> cells;
    std::discrete_distribution<int>::param_type dist;
  };
  const Grid& grid_;
  std::vector<StratumTotals> totals_;
  std::vector<Stratum> strata_;
  bool fixed_ = false;
  long fixed_h_ = 25;
  long fixed_n_ = 25;
};

using EtaSource = std::function<double(const GridCell& cell, std::size_t index)>;

SamplingFrame realize_population(const FrameConfig& config, const Grid& grid, const EtaSource& eta_source,
                                 const ResponseParams& params, std::uint64_t seed);

}  // namespace popagg
