#pragma once

#include <cstdint>
#include <vector>

#include "popagg/latent_inference.hpp"
#include "popagg/rng.hpp"
#include "popagg/sampling_frame.hpp"

namespace popagg {

struct StratumClusters {
  int admin1 = -1;
  bool urban = false;
  long count = 0;  // at r_samp = 1
};

struct SurveyDesign {
  std::vector<StratumClusters> clusters;
  int households_per_cluster = 25;
  double r_samp = 1.0;

  void validate() const;
  long effective_count(const StratumClusters& s) const;
};

// Indices of k units drawn without replacement with inclusion probability ∝ size
// (capped at 1): certainty units first, then systematic PPS over a random permutation.
std::vector<std::size_t> pps_systematic(const std::vector<double>& sizes, long k, rng::Engine& engine);

// Hypergeometric draw: successes among `draws` taken from `total` items with `successes` marked.
long hypergeometric(long total, long successes, long draws, rng::Engine& engine);

std::vector<ClusterObservation> draw_survey(const SamplingFrame& frame, const SurveyDesign& design,
                                            std::uint64_t seed);

}  // namespace popagg
