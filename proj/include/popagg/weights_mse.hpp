#pragma once

#include <cstdint>

#include "popagg/rng.hpp"

namespace popagg {

// Two-region small-area setting: μ is μ1 on A and μ2 on R∖A; q and q̂ are the true and assumed
// weight masses on the two parts; Y = μ + ε with one ε ~ N(0, σ²) shared over R.
struct TwoRegionSpec {
  double mu1 = 0.0, mu2 = 0.0;
  double q1 = 0.0, q2 = 0.0;
  double qhat1 = 0.0, qhat2 = 0.0;
  double sigma2 = 0.0;

  void validate() const;
  double total() const { return q1 + q2; }
  double total_hat() const { return qhat1 + qhat2; }
};

struct MseTerms {
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
};

// Published closed form: Bias = (q̂1−q1)μ1 + (q̂2−q2)μ2, Var = σ² T T̂.
MseTerms analytic_mse(const TwoRegionSpec& spec);

// Bias written as (q̂1−q1)(μ1−μ2) + (T̂−T)μ2; equal to the two-part form up to rounding.
double bias_expanded(const TwoRegionSpec& spec);

// (q̂1−q1)²(μ1−μ2)² + σ²T², the closed form when T̂ = T.
double normalized_mse(const TwoRegionSpec& spec);

// Same bias with the variance the shared-noise model actually produces, Var(∫q̂ε) = σ² T̂².
MseTerms analytic_mse_common_noise(const TwoRegionSpec& spec);

// Independent random masses with E[q̂_i] = q_i + b_i and Var(q̂_i) = ν².
double random_qhat_mse(double mu1, double mu2, double q1, double q2, double b1, double b2, double nu2, double sigma2);

struct MseEstimate {
  double mse = 0.0;
  double se = 0.0;
  long n_sims = 0;
};

// Means in [0,1], masses in [0.1,1], σ² in [0.001,0.05], all uniform and independent.
TwoRegionSpec random_two_region_spec(rng::Engine& engine);

// Monte Carlo over a fine two-region grid: per simulation draws the field, forms ∫q̂Y and the
// target ∫qμ, and averages the squared difference.
MseEstimate mc_mse(const TwoRegionSpec& spec, long n_sims, std::uint64_t seed, int cells_per_region = 64);

}  // namespace popagg
