#include "popagg/gauss_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "popagg/error.hpp"

namespace popagg {

void FieldParams::validate() const {
  POPAGG_REQUIRE(sigma2_s >= 0.0 && std::isfinite(sigma2_s), "sigma2_s must be >= 0");
  POPAGG_REQUIRE(range_km > 0.0 && std::isfinite(range_km), "range_km must be > 0");
  POPAGG_REQUIRE(smoothness > 0.0 && std::isfinite(smoothness), "smoothness must be > 0");
}

double FieldParams::kappa() const { return std::sqrt(8.0 * smoothness) / range_km; }

double matern_correlation(double d, const FieldParams& p) {
  if (!(d >= 0.0)) throw ValidationError("distance must be >= 0");
  if (d == 0.0) return 1.0;
  const double nu = p.smoothness;
  const double x = p.kappa() * d;
  if (x > 700.0) return 0.0;
  const double v = std::exp((1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(x)) *
                   std::cyl_bessel_k(nu, x);
  return std::clamp(v, 0.0, 1.0);
}

Eigen::MatrixXd covariance_matrix(const std::vector<Point>& points, const FieldParams& params, double jitter) {
  params.validate();
  POPAGG_REQUIRE(!points.empty(), "covariance needs at least one point");
  POPAGG_REQUIRE(jitter >= 0.0, "jitter must be >= 0");
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = params.sigma2_s + jitter;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double c = params.sigma2_s * matern_correlation(distance(points[i], points[j]), params);
      k(i, j) = c;
      k(j, i) = c;
    }
  }
  return k;
}

Eigen::MatrixXd cross_covariance(const std::vector<Point>& rows, const std::vector<Point>& cols,
                                 const FieldParams& params) {
  params.validate();
  Eigen::MatrixXd k(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index j = 0; j < k.cols(); ++j)
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      k(i, j) = params.sigma2_s * matern_correlation(distance(rows[i], cols[j]), params);
  return k;
}

JitteredCholesky jittered_cholesky(const Eigen::MatrixXd& k, double scale) {
  if (k.size() == 0) return {Eigen::MatrixXd(0, 0), 0.0};
  if (scale == 0.0) {
    if (k.isZero(0.0)) return {Eigen::MatrixXd::Zero(k.rows(), k.cols()), 0.0};
    scale = k.diagonal().cwiseAbs().maxCoeff();
  }
  for (double rel = 1e-10; rel <= 1e-4 * (1 + 1e-9); rel *= 10.0) {
    const double jitter = rel * scale;
    Eigen::MatrixXd a = k;
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) continue;
    Eigen::MatrixXd l = llt.matrixL();
    if (!l.allFinite() || (l.diagonal().array() <= 0.0).any()) continue;
    return {std::move(l), jitter};
  }
  throw FactorizationError("Cholesky failed after jitter escalation to 1e-4 x variance");
}

void canonical_points(const std::vector<Point>& points, std::vector<Point>& unique, std::vector<int>& slot) {
  std::vector<int> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Point &p = points[a], &q = points[b];
    return p.x != q.x ? p.x < q.x : p.y < q.y;
  });
  unique.clear();
  slot.assign(points.size(), -1);
  for (int i : order) {
    const Point& p = points[i];
    if (unique.empty() || unique.back().x != p.x || unique.back().y != p.y) unique.push_back(p);
    slot[i] = static_cast<int>(unique.size()) - 1;
  }
}

FieldSampler::FieldSampler(const std::vector<Point>& points, const FieldParams& params) {
  params.validate();
  std::vector<Point> unique;
  canonical_points(points, unique, slot_);
  if (unique.empty() || params.sigma2_s == 0.0) {
    lower_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(unique.size()), static_cast<Eigen::Index>(unique.size()));
    return;
  }
  auto f = jittered_cholesky(covariance_matrix(unique, params), params.sigma2_s);
  lower_ = std::move(f.lower);
  jitter_ = f.jitter;
}

Eigen::VectorXd FieldSampler::draw(rng::Engine& engine) const {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(lower_.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(engine);
  const Eigen::VectorXd u = lower_.triangularView<Eigen::Lower>() * z;
  Eigen::VectorXd out(static_cast<Eigen::Index>(slot_.size()));
  for (std::size_t i = 0; i < slot_.size(); ++i) out[static_cast<Eigen::Index>(i)] = u[slot_[i]];
  return out;
}

Eigen::VectorXd sample_field(const std::vector<Point>& points, const FieldParams& params, std::uint64_t seed) {
  FieldSampler sampler(points, params);
  auto engine = rng::make_engine(seed);
  return sampler.draw(engine);
}

}  // namespace popagg
