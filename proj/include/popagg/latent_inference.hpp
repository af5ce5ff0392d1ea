#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "popagg/gauss_field.hpp"
#include "popagg/spatial_grid.hpp"

namespace popagg {

struct ResponseParams {
  double beta0 = -2.9;
  double beta_urb = -1.0;
  FieldParams field;
  double sigma2_eps = 0.4;

  void validate() const;
  double linear_predictor(bool urban) const { return beta0 + (urban ? beta_urb : 0.0); }
};

struct ClusterObservation {
  Point location;
  bool urban = false;
  int n = 0;  // trials; 0 contributes nothing to the likelihood
  int y = 0;
  int admin1 = -1;
  long ea = -1;  // source EA in the frame, -1 if unknown
};

// Latent: one extra latent ε_c per observed cluster, Gaussian approximation at the joint mode.
// Integrated: ε_c is integrated out of each cluster's binomial likelihood by Gauss–Hermite
// quadrature, and the Gaussian approximation covers (β, u) only.
enum class NuggetMode : std::uint8_t { Latent = 0, Integrated = 1 };

struct FitOptions {
  NuggetMode nugget = NuggetMode::Integrated;
  int nugget_quad_order = 32;
  double prior_var_intercept = 1e6;
  double prior_var_urban = 1e3;  // infinity gives a flat prior
  bool urban_covariate = true;
  double tolerance = 1e-8;  // gradient ∞-norm; a Newton decrement at rounding level also stops
  int max_iterations = 100;
};

struct PredictionPoint {
  Point location;
  bool urban = false;
};

// Row d holds draw d.
using DrawMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Gaussian approximation to (β, u) with u = L v at the distinct cluster locations.
class LatentPosterior {
 public:
  LatentPosterior() = default;

  int n_beta() const { return n_beta_; }
  const std::vector<Point>& support() const { return support_; }
  // β then u at the support points.
  Eigen::VectorXd mode() const;
  Eigen::MatrixXd covariance() const;
  const Eigen::VectorXd& nugget_mode() const { return eps_mode_; }
  int iterations() const { return iterations_; }
  double gradient_norm() const { return gradient_norm_; }
  const ResponseParams& params() const { return params_; }

  // η = d(s)ᵀβ + u(s) at the points, excluding the nugget. Column layout: points × draws.
  Eigen::MatrixXd sample_eta_columns(const std::vector<PredictionPoint>& points, int n_draws,
                                     std::uint64_t seed) const;
  // β draws, n_beta × n_draws, identical to those used by sample_eta_columns for the same seed.
  Eigen::MatrixXd sample_beta(int n_draws, std::uint64_t seed) const;

 private:
  friend LatentPosterior laplace_fit(const std::vector<ClusterObservation>&, const ResponseParams&,
                                     const FitOptions&);
  Eigen::MatrixXd sample_theta(int n_draws, std::uint64_t seed) const;

  ResponseParams params_;
  int n_beta_ = 2;
  std::vector<Point> support_;
  Eigen::MatrixXd field_lower_;  // L with L Lᵀ = K(support) + jitter
  Eigen::VectorXd theta_mode_;   // (β, v)
  Eigen::MatrixXd precision_lower_;  // lower factor of the θ precision at the mode
  Eigen::VectorXd eps_mode_;
  int iterations_ = 0;
  double gradient_norm_ = 0.0;
};

LatentPosterior laplace_fit(const std::vector<ClusterObservation>& observations, const ResponseParams& params,
                            const FitOptions& options = {});

// n_draws × points.
DrawMatrix sample_eta(const LatentPosterior& posterior, const std::vector<PredictionPoint>& points, int n_draws,
                      std::uint64_t seed);

}  // namespace popagg
