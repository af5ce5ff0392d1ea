#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "popagg/rng.hpp"
#include "popagg/spatial_grid.hpp"

namespace popagg {

struct FieldParams {
  double sigma2_s = 1.0 / 9.0;  // marginal variance (logit²)
  double range_km = 400.0;      // practical range
  double smoothness = 1.0;      // Matérn ν

  void validate() const;
  double kappa() const;  // √(8ν)/range
};

double matern_correlation(double distance_km, const FieldParams& params);

Eigen::MatrixXd covariance_matrix(const std::vector<Point>& points, const FieldParams& params,
                                  double jitter = 0.0);
Eigen::MatrixXd cross_covariance(const std::vector<Point>& rows, const std::vector<Point>& cols,
                                 const FieldParams& params);

struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

// Lower factor of k + jitter·I, escalating jitter from 1e-10·scale by 10× up to 1e-4·scale.
// scale = 0 accepts an all-zero matrix (factor 0). Throws FactorizationError.
JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, double scale);

// Exact sampler for u at a fixed point set. Points are factored in a canonical
// (sorted, de-duplicated) order, so permuting the input permutes the draw and repeated
// points get identical values.
class FieldSampler {
 public:
  FieldSampler(const std::vector<Point>& points, const FieldParams& params);
  Eigen::VectorXd draw(rng::Engine& engine) const;
  std::size_t size() const { return slot_.size(); }
  double jitter() const { return jitter_; }

 private:
  std::vector<int> slot_;  // input index -> canonical unique index
  Eigen::MatrixXd lower_;
  double jitter_ = 0.0;
};

Eigen::VectorXd sample_field(const std::vector<Point>& points, const FieldParams& params, std::uint64_t seed);

// Canonical order used by the samplers: unique points sorted by (x, y), and the map from each
// input point to its unique slot.
void canonical_points(const std::vector<Point>& points, std::vector<Point>& unique, std::vector<int>& slot);

}  // namespace popagg
