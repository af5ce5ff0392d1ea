#include "popagg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "popagg/error.hpp"

namespace popagg {

double crps_ensemble(std::vector<double> draws, double y_star) {
  POPAGG_REQUIRE(!draws.empty(), "CRPS needs at least one draw");
  std::sort(draws.begin(), draws.end());
  const auto m = static_cast<double>(draws.size());
  double abs_err = 0.0;
  for (double x : draws) abs_err += std::abs(x - y_star);
  // Σ_i Σ_j |x_i − x_j| = 2 Σ_i (2i − m + 1) x_(i) for sorted data.
  double pair = 0.0;
  for (std::size_t i = 0; i < draws.size(); ++i) pair += (2.0 * static_cast<double>(i) - m + 1.0) * draws[i];
  return abs_err / m - pair / (m * m);
}

double interval_score(double lower, double upper, double y_star, double alpha) {
  POPAGG_REQUIRE(lower <= upper, "interval needs lower <= upper");
  POPAGG_REQUIRE(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1)");
  double s = upper - lower;
  if (y_star < lower) s += 2.0 / alpha * (lower - y_star);
  if (y_star > upper) s += 2.0 / alpha * (y_star - upper);
  return s;
}

double fuzzy_coverage(const std::vector<double>& draws, double y_star, double level) {
  POPAGG_REQUIRE(!draws.empty(), "coverage needs at least one draw");
  POPAGG_REQUIRE(level > 0.0 && level < 1.0, "level must be in (0,1)");
  const double lo_band = 0.5 * (1.0 - level), hi_band = 0.5 * (1.0 + level);
  std::size_t below = 0, equal = 0;
  for (double x : draws) {
    if (x < y_star) ++below;
    else if (x == y_star) ++equal;
  }
  const auto m = static_cast<double>(draws.size());
  const double f_lo = static_cast<double>(below) / m;
  const double f_hi = static_cast<double>(below + equal) / m;
  if (equal == 0) return (f_lo >= lo_band && f_lo <= hi_band) ? 1.0 : 0.0;
  const double overlap = std::max(0.0, std::min(f_hi, hi_band) - std::max(f_lo, lo_band));
  return overlap / (f_hi - f_lo);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  POPAGG_REQUIRE(!sorted.empty(), "quantile of empty data");
  POPAGG_REQUIRE(p >= 0.0 && p <= 1.0, "quantile probability must be in [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> draws, double p) {
  std::sort(draws.begin(), draws.end());
  return quantile_sorted(draws, p);
}

double ci_width(std::vector<double> draws, double level) {
  POPAGG_REQUIRE(level > 0.0 && level < 1.0, "level must be in (0,1)");
  std::sort(draws.begin(), draws.end());
  const double a = 0.5 * (1.0 - level);
  return std::max(0.0, quantile_sorted(draws, 1.0 - a) - quantile_sorted(draws, a));
}

double relative_score(double s_proposed, double s_reference) {
  POPAGG_REQUIRE(s_reference != 0.0, "relative score needs a nonzero reference");
  return 100.0 * (s_proposed - s_reference) / s_reference;
}

AreaScore score_area(const std::vector<double>& defined_draws, double y_star) {
  POPAGG_REQUIRE(!defined_draws.empty(), "area has no defined draws");
  std::vector<double> sorted = defined_draws;
  std::sort(sorted.begin(), sorted.end());
  AreaScore s;
  s.crps = crps_ensemble(sorted, y_star);
  const double l95 = quantile_sorted(sorted, 0.025), u95 = quantile_sorted(sorted, 0.975);
  const double l50 = quantile_sorted(sorted, 0.25), u50 = quantile_sorted(sorted, 0.75);
  s.is95 = interval_score(l95, u95, y_star, 0.05);
  s.is50 = interval_score(l50, u50, y_star, 0.5);
  s.width95 = u95 - l95;
  s.width50 = u50 - l50;
  s.cov95 = fuzzy_coverage(sorted, y_star, 0.95);
  s.cov50 = fuzzy_coverage(sorted, y_star, 0.5);
  return s;
}

std::vector<ScoreReport> score_ensembles(const std::vector<ArealEnsemble>& ensembles,
                                         const std::vector<AreaQuantity>& truth) {
  std::map<std::tuple<int, int, int>, const AreaQuantity*> truth_by_key;
  for (const auto& t : truth)
    truth_by_key[{static_cast<int>(t.level), t.area, static_cast<int>(t.quantity)}] = &t;

  std::vector<ScoreReport> reports;
  std::map<std::tuple<int, int, int>, std::size_t> index;
  for (const auto& e : ensembles) {
    const auto key = std::make_tuple(static_cast<int>(e.level), static_cast<int>(e.quantity), static_cast<int>(e.model));
    auto [it, fresh] = index.try_emplace(key, reports.size());
    if (fresh) {
      ScoreReport r;
      r.level = e.level;
      r.quantity = e.quantity;
      r.model = e.model;
      reports.push_back(r);
    }
    auto& r = reports[it->second];
    const auto t = truth_by_key.find({static_cast<int>(e.level), e.area, static_cast<int>(e.quantity)});
    const auto draws = e.defined_draws();
    if (t == truth_by_key.end() || !t->second->defined || draws.empty()) {
      ++r.n_areas_excluded;
      continue;
    }
    const auto s = score_area(draws, t->second->value);
    r.crps += s.crps;
    r.interval_score_95 += s.is95;
    r.interval_score_50 += s.is50;
    r.fuzzy_coverage_95 += s.cov95;
    r.fuzzy_coverage_50 += s.cov50;
    r.fuzzy_ci_width_95 += s.width95;
    r.fuzzy_ci_width_50 += s.width50;
    ++r.n_areas_scored;
  }
  for (auto& r : reports) {
    if (r.n_areas_scored > 0) {
      const double n = r.n_areas_scored;
      r.crps /= n;
      r.interval_score_95 /= n;
      r.interval_score_50 /= n;
      r.fuzzy_coverage_95 *= 100.0 / n;
      r.fuzzy_coverage_50 *= 100.0 / n;
      r.fuzzy_ci_width_95 /= n;
      r.fuzzy_ci_width_50 /= n;
    }
  }
  return reports;
}

}  // namespace popagg
