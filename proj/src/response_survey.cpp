#include "popagg/response_survey.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include "popagg/error.hpp"

namespace popagg {

void SurveyDesign::validate() const {
  POPAGG_REQUIRE(households_per_cluster >= 1, "households_per_cluster must be >= 1");
  POPAGG_REQUIRE(r_samp > 0.0 && std::isfinite(r_samp), "r_samp must be > 0");
  std::set<std::pair<int, bool>> seen;
  for (const auto& s : clusters) {
    POPAGG_REQUIRE(s.count >= 0, "cluster counts must be >= 0");
    POPAGG_REQUIRE(seen.insert({s.admin1, s.urban}).second, "duplicate survey stratum");
  }
}

long SurveyDesign::effective_count(const StratumClusters& s) const {
  return std::lround(static_cast<double>(s.count) * r_samp);
}

std::vector<std::size_t> pps_systematic(const std::vector<double>& sizes, long k, rng::Engine& engine) {
  POPAGG_REQUIRE(k >= 0, "sample size must be >= 0");
  if (k > static_cast<long>(sizes.size()))
    throw ValidationError("stratum exhausted: requested " + std::to_string(k) + " clusters from " +
                          std::to_string(sizes.size()) + " EAs");
  std::vector<std::size_t> order(sizes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), engine);
  std::vector<std::size_t> chosen;
  if (k == 0) return chosen;

  std::vector<char> taken(sizes.size(), 0);
  long left = k;
  for (bool changed = true; changed && left > 0;) {
    changed = false;
    double total = 0.0;
    for (auto i : order)
      if (!taken[i]) total += sizes[i];
    const double interval = total / static_cast<double>(left);
    for (auto i : order)
      if (!taken[i] && sizes[i] >= interval && left > 0) {
        taken[i] = 1;
        chosen.push_back(i);
        --left;
        changed = true;
      }
  }
  if (left == 0) return chosen;

  double total = 0.0;
  for (auto i : order)
    if (!taken[i]) total += sizes[i];
  const double interval = total / static_cast<double>(left);
  double target = std::uniform_real_distribution<double>(0.0, interval)(engine);
  double cum = 0.0;
  for (auto i : order) {
    if (taken[i]) continue;
    cum += sizes[i];
    if (cum > target && left > 0) {
      chosen.push_back(i);
      --left;
      target += interval;
    }
  }
  // Rounding can leave the last hit just past the end.
  for (auto it = order.rbegin(); left > 0 && it != order.rend(); ++it)
    if (!taken[*it] && std::find(chosen.begin(), chosen.end(), *it) == chosen.end()) {
      chosen.push_back(*it);
      --left;
    }
  return chosen;
}

long hypergeometric(long total, long successes, long draws, rng::Engine& engine) {
  POPAGG_REQUIRE(total >= 0 && successes >= 0 && successes <= total && draws >= 0 && draws <= total,
                 "invalid hypergeometric parameters");
  if (draws == 0 || successes == 0) return 0;
  if (successes == total) return draws;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  long hits = 0, left = total, good = successes;
  for (long i = 0; i < draws; ++i) {
    if (unit(engine) * static_cast<double>(left) < static_cast<double>(good)) {
      ++hits;
      --good;
    }
    --left;
  }
  return hits;
}

std::vector<ClusterObservation> draw_survey(const SamplingFrame& frame, const SurveyDesign& design,
                                            std::uint64_t seed) {
  design.validate();
  auto engine = rng::make_engine(seed);
  std::vector<ClusterObservation> out;
  for (const auto& s : design.clusters) {
    const long k = design.effective_count(s);
    std::vector<std::size_t> members;
    std::vector<double> sizes;
    for (std::size_t i = 0; i < frame.eas.size(); ++i) {
      const auto& ea = frame.eas[i];
      if (ea.admin1 == s.admin1 && ea.urban == s.urban) {
        members.push_back(i);
        sizes.push_back(static_cast<double>(ea.h));
      }
    }
    for (auto j : pps_systematic(sizes, k, engine)) {
      const auto& ea = frame.eas[members[j]];
      const long sampled = std::min<long>(design.households_per_cluster, ea.h);
      ClusterObservation o;
      o.location = ea.location;
      o.urban = ea.urban;
      o.admin1 = ea.admin1;
      o.ea = static_cast<long>(members[j]);
      const long n = sampled >= ea.h ? ea.n_target
                                     : std::binomial_distribution<long>(
                                           ea.n_target, static_cast<double>(sampled) / static_cast<double>(ea.h))(engine);
      o.n = static_cast<int>(n);
      o.y = static_cast<int>(hypergeometric(ea.n_target, ea.z, n, engine));
      out.push_back(o);
    }
  }
  return out;
}

}  // namespace popagg
