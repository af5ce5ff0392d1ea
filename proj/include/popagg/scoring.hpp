#pragma once

#include <string>
#include <vector>

#include "popagg/aggregation.hpp"

namespace popagg {

// Exact CRPS of the empirical CDF of the draws: mean|X − y| − ½ mean|X − X′|.
double crps_ensemble(std::vector<double> draws, double y_star);

double interval_score(double lower, double upper, double y_star, double alpha);

// Randomized coverage credit: the share of the atom [F(y−), F(y)] that falls inside the central
// band [(1−level)/2, (1+level)/2], or the plain indicator when y is not an atom.
double fuzzy_coverage(const std::vector<double>& draws, double y_star, double level);

// Type-7 (linear interpolation) quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);
double quantile(std::vector<double> draws, double p);
double ci_width(std::vector<double> draws, double level);

double relative_score(double s_proposed, double s_reference);

struct ScoreReport {
  Level level = Level::Admin1;
  Quantity quantity = Quantity::Prevalence;
  ModelKind model = ModelKind::Empirical;
  double crps = 0.0;
  double interval_score_95 = 0.0;
  double fuzzy_coverage_95 = 0.0;  // percent
  double fuzzy_ci_width_95 = 0.0;  // type-7 quantile width
  double interval_score_50 = 0.0;
  double fuzzy_coverage_50 = 0.0;
  double fuzzy_ci_width_50 = 0.0;
  int n_areas_scored = 0;
  int n_areas_excluded = 0;  // undefined truth or no defined draws
  double runtime_minutes = 0.0;  // set by callers that time a run; never serialized
};

// Scores for one area against its true value.
struct AreaScore {
  double crps = 0.0;
  double is95 = 0.0, is50 = 0.0;
  double cov95 = 0.0, cov50 = 0.0;  // credits in [0,1]
  double width95 = 0.0, width50 = 0.0;
};
AreaScore score_area(const std::vector<double>& defined_draws, double y_star);

// Unweighted means over defined areas, one report per (level, quantity, model) present in the
// ensembles, in ensemble order.
std::vector<ScoreReport> score_ensembles(const std::vector<ArealEnsemble>& ensembles,
                                         const std::vector<AreaQuantity>& truth);

}  // namespace popagg
