#include "popagg/weights_mse.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "popagg/error.hpp"
#include "popagg/rng.hpp"

namespace popagg {

void TwoRegionSpec::validate() const {
  POPAGG_REQUIRE(q1 >= 0 && q2 >= 0 && qhat1 >= 0 && qhat2 >= 0, "weight masses must be >= 0");
  POPAGG_REQUIRE(sigma2 >= 0, "sigma2 must be >= 0");
  POPAGG_REQUIRE(std::isfinite(mu1) && std::isfinite(mu2), "region means must be finite");
}

MseTerms analytic_mse(const TwoRegionSpec& s) {
  s.validate();
  MseTerms t;
  t.bias = (s.qhat1 - s.q1) * s.mu1 + (s.qhat2 - s.q2) * s.mu2;
  t.variance = s.sigma2 * s.total() * s.total_hat();
  t.mse = t.bias * t.bias + t.variance;
  return t;
}

double bias_expanded(const TwoRegionSpec& s) {
  return (s.qhat1 - s.q1) * (s.mu1 - s.mu2) + (s.total_hat() - s.total()) * s.mu2;
}

double normalized_mse(const TwoRegionSpec& s) {
  const double d = (s.qhat1 - s.q1) * (s.mu1 - s.mu2);
  return d * d + s.sigma2 * s.total() * s.total();
}

MseTerms analytic_mse_common_noise(const TwoRegionSpec& s) {
  MseTerms t = analytic_mse(s);
  t.variance = s.sigma2 * s.total_hat() * s.total_hat();
  t.mse = t.bias * t.bias + t.variance;
  return t;
}

double random_qhat_mse(double mu1, double mu2, double q1, double q2, double b1, double b2, double nu2,
                       double sigma2) {
  const double t = q1 + q2;
  return (b1 * b1 + nu2) * mu1 * mu1 + 2.0 * b1 * b2 * mu1 * mu2 + (b2 * b2 + nu2) * mu2 * mu2 +
         sigma2 * t * (t + b1 + b2);
}

TwoRegionSpec random_two_region_spec(rng::Engine& engine) {
  std::uniform_real_distribution<double> unit(0.0, 1.0), mass(0.1, 1.0), noise(0.001, 0.05);
  TwoRegionSpec s;
  s.mu1 = unit(engine);
  s.mu2 = unit(engine);
  s.q1 = mass(engine);
  s.q2 = mass(engine);
  s.qhat1 = mass(engine);
  s.qhat2 = mass(engine);
  s.sigma2 = noise(engine);
  return s;
}

MseEstimate mc_mse(const TwoRegionSpec& spec, long n_sims, std::uint64_t seed, int cells_per_region) {
  spec.validate();
  POPAGG_REQUIRE(n_sims >= 100, "mc_mse needs n_sims >= 100");
  POPAGG_REQUIRE(cells_per_region >= 1, "cells_per_region must be >= 1");
  // Uneven within-region shape, shared by q and q̂ so that q̂ = q gives identical cell weights.
  const auto m = static_cast<std::size_t>(cells_per_region);
  std::vector<double> mu(2 * m), q(2 * m), qhat(2 * m);
  double shape = 0.0;
  for (std::size_t j = 0; j < m; ++j) shape += 1.0 + 0.5 * std::sin(static_cast<double>(j));
  for (std::size_t j = 0; j < m; ++j) {
    const double a = (1.0 + 0.5 * std::sin(static_cast<double>(j))) / shape;
    const double b = 1.0 / static_cast<double>(m);
    mu[j] = spec.mu1;
    mu[m + j] = spec.mu2;
    q[j] = spec.q1 * a;
    q[m + j] = spec.q2 * b;
    qhat[j] = spec.qhat1 * a;
    qhat[m + j] = spec.qhat2 * b;
  }
  double target = 0.0, mean_part = 0.0, qhat_total = 0.0;
  for (std::size_t j = 0; j < 2 * m; ++j) {
    target += q[j] * mu[j];
    mean_part += qhat[j] * mu[j];
    qhat_total += qhat[j];
  }

  auto engine = rng::make_engine(rng::derive(seed, rng::Stream::Mse));
  std::normal_distribution<double> normal(0.0, std::sqrt(spec.sigma2));
  double sum = 0.0, sum_sq = 0.0;
  for (long i = 0; i < n_sims; ++i) {
    const double eps = spec.sigma2 > 0 ? normal(engine) : 0.0;
    const double diff = mean_part + qhat_total * eps - target;
    const double sq = diff * diff;
    sum += sq;
    sum_sq += sq * sq;
  }
  const double n = static_cast<double>(n_sims);
  MseEstimate out;
  out.n_sims = n_sims;
  out.mse = sum / n;
  out.se = std::sqrt(std::max(0.0, sum_sq / n - out.mse * out.mse) / n);
  return out;
}

}  // namespace popagg
