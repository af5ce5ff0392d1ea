#include "popagg/latent_inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "popagg/error.hpp"
#include "popagg/quadrature.hpp"

namespace popagg {

void ResponseParams::validate() const {
  field.validate();
  POPAGG_REQUIRE(std::isfinite(beta0) && std::isfinite(beta_urb), "beta must be finite");
  POPAGG_REQUIRE(sigma2_eps >= 0.0 && std::isfinite(sigma2_eps), "sigma2_eps must be >= 0");
}

namespace {

double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double expit(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double precision_of(double var) { return std::isinf(var) ? 0.0 : 1.0 / var; }

Eigen::MatrixXd standard_normals(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  auto engine = rng::make_engine(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = normal(engine);
  return z;
}

}  // namespace

LatentPosterior laplace_fit(const std::vector<ClusterObservation>& obs, const ResponseParams& params,
                            const FitOptions& opt) {
  params.validate();
  POPAGG_REQUIRE(opt.prior_var_intercept > 0 && opt.prior_var_urban > 0, "prior variances must be > 0");
  for (const auto& o : obs)
    POPAGG_REQUIRE(o.n >= 0 && o.y >= 0 && o.y <= o.n, "cluster observation needs 0 <= y <= n");

  LatentPosterior post;
  post.params_ = params;
  post.n_beta_ = opt.urban_covariate ? 2 : 1;
  const int p = post.n_beta_;

  std::vector<Point> locations;
  locations.reserve(obs.size());
  for (const auto& o : obs) locations.push_back(o.location);
  std::vector<int> slot;
  canonical_points(locations, post.support_, slot);

  const double s2 = params.field.sigma2_s;
  const bool spatial = s2 > 0.0 && !post.support_.empty();
  const Eigen::Index q = spatial ? static_cast<Eigen::Index>(post.support_.size()) : 0;
  if (spatial) post.field_lower_ = jittered_cholesky(covariance_matrix(post.support_, params.field), s2).lower;
  const Eigen::Index d = p + q;
  const auto C = static_cast<Eigen::Index>(obs.size());

  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(C, d);
  Eigen::ArrayXd n(C), y(C);
  for (Eigen::Index c = 0; c < C; ++c) {
    const auto& o = obs[static_cast<std::size_t>(c)];
    J(c, 0) = 1.0;
    if (p == 2) J(c, 1) = o.urban ? 1.0 : 0.0;
    if (spatial) J.row(c).tail(q) = post.field_lower_.row(slot[static_cast<std::size_t>(c)]);
    n[c] = o.n;
    y[c] = o.y;
  }
  Eigen::ArrayXd prior(d);
  prior.setOnes();
  prior[0] = precision_of(opt.prior_var_intercept);
  if (p == 2) prior[1] = precision_of(opt.prior_var_urban);

  const double se2 = params.sigma2_eps;
  const bool nugget = se2 > 0.0 && opt.nugget == NuggetMode::Latent;
  const bool integrated = se2 > 0.0 && opt.nugget == NuggetMode::Integrated;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd eps = Eigen::VectorXd::Zero(nugget ? C : 0);

  std::vector<double> gh_eps, gh_logw, log_a;
  if (integrated) {
    POPAGG_REQUIRE(opt.nugget_quad_order >= 1, "nugget_quad_order must be >= 1");
    const GaussHermite gh(opt.nugget_quad_order);
    for (std::size_t k = 0; k < gh.nodes().size(); ++k)
      if (gh.weights()[k] > 0.0) {
        gh_eps.push_back(std::sqrt(se2) * gh.nodes()[k]);
        gh_logw.push_back(std::log(gh.weights()[k]));
      }
    log_a.resize(gh_eps.size());
  }

  // Cluster log-likelihood at linear predictor e (binomial coefficient dropped), its derivative,
  // and its curvature (minus the second derivative).
  struct ClusterTerms {
    double value, grad, curv;
  };
  auto cluster = [&](Eigen::Index c, double e) -> ClusterTerms {
    if (!integrated) {
      const double pr = expit(e);
      return {y[c] * e - n[c] * log1pexp(e), y[c] - n[c] * pr, n[c] * pr * (1.0 - pr)};
    }
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < gh_eps.size(); ++k) {
      const double x = e + gh_eps[k];
      log_a[k] = gh_logw[k] + y[c] * x - n[c] * log1pexp(x);
      top = std::max(top, log_a[k]);
    }
    double mass = 0.0, g1 = 0.0, g2 = 0.0, h = 0.0;
    for (std::size_t k = 0; k < gh_eps.size(); ++k) {
      const double a = std::exp(log_a[k] - top);
      const double pr = expit(e + gh_eps[k]);
      const double g = y[c] - n[c] * pr;
      mass += a;
      g1 += a * g;
      g2 += a * g * g;
      h += a * n[c] * pr * (1.0 - pr);
    }
    g1 /= mass;
    g2 /= mass;
    h /= mass;
    // Log-concave in e, so the curvature is nonnegative up to rounding.
    return {top + std::log(mass), g1, std::max(0.0, h - (g2 - g1 * g1))};
  };

  auto objective = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& ep) {
    Eigen::ArrayXd eta = J * th;
    if (nugget) eta += ep.array();
    double f = 0.0;
    for (Eigen::Index c = 0; c < C; ++c) f += cluster(c, eta[c]).value;
    f -= 0.5 * (prior * th.array().square()).sum();
    if (nugget) f -= 0.5 * ep.squaredNorm() / se2;
    return f;
  };

  Eigen::ArrayXd w(C), wt(C), dd(C);
  auto curvature = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& ep, Eigen::VectorXd& g_theta,
                       Eigen::VectorXd& g_eps) {
    Eigen::ArrayXd eta = J * th;
    if (nugget) eta += ep.array();
    Eigen::ArrayXd r(C);
    for (Eigen::Index c = 0; c < C; ++c) {
      const auto t = cluster(c, eta[c]);
      w[c] = t.curv;
      r[c] = t.grad;
    }
    g_theta = J.transpose() * r.matrix() - (prior * th.array()).matrix();
    if (nugget) {
      g_eps = r.matrix() - ep / se2;
      dd = w + 1.0 / se2;
      wt = w / (1.0 + se2 * w);
    } else {
      g_eps.resize(0);
      wt = w;
    }
    Eigen::MatrixXd S = J.transpose() * (wt.matrix().asDiagonal() * J);
    S.diagonal() += prior.matrix();
    return S;
  };

  Eigen::VectorXd g_theta, g_eps;
  double f = objective(theta, eps);
  int iter = 0;
  double gnorm = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd S;
  for (;; ++iter) {
    S = curvature(theta, eps, g_theta, g_eps);
    gnorm = g_theta.size() ? g_theta.cwiseAbs().maxCoeff() : 0.0;
    if (nugget && C > 0) gnorm = std::max(gnorm, g_eps.cwiseAbs().maxCoeff());
    if (gnorm < opt.tolerance) break;
    if (iter >= opt.max_iterations)
      throw ConvergenceError("Laplace fit did not converge after " + std::to_string(iter) +
                                 " iterations (gradient norm " + std::to_string(gnorm) + ")",
                             gnorm, iter);
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
      throw ConvergenceError("Laplace Hessian is not positive definite", gnorm, iter);
    Eigen::VectorXd rhs = g_theta;
    if (nugget) rhs -= J.transpose() * (w * g_eps.array() / dd).matrix();
    const Eigen::VectorXd step_theta = llt.solve(rhs);
    Eigen::VectorXd step_eps;
    if (nugget) step_eps = ((g_eps.array() - w * (J * step_theta).array()) / dd).matrix();

    // Newton decrement: the predicted gain of a full step. Below rounding level the mode is
    // found even if the gradient cannot reach the tolerance (near-singular field factors).
    double decrement = g_theta.dot(step_theta);
    if (nugget) decrement += g_eps.dot(step_eps);
    if (decrement < 1e-13 * (1.0 + std::abs(f))) {
      Eigen::VectorXd th = theta + step_theta;
      Eigen::VectorXd ep = nugget ? Eigen::VectorXd(eps + step_eps) : eps;
      const double f1 = objective(th, ep);
      if (f1 >= f - 1e-12 * (1.0 + std::abs(f))) {
        theta = std::move(th);
        eps = std::move(ep);
        f = f1;
        S = curvature(theta, eps, g_theta, g_eps);
        gnorm = g_theta.size() ? g_theta.cwiseAbs().maxCoeff() : 0.0;
        if (nugget && C > 0) gnorm = std::max(gnorm, g_eps.cwiseAbs().maxCoeff());
      }
      break;
    }

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      Eigen::VectorXd th = theta + t * step_theta;
      Eigen::VectorXd ep = nugget ? Eigen::VectorXd(eps + t * step_eps) : eps;
      const double f1 = objective(th, ep);
      if (f1 >= f) {
        theta = std::move(th);
        eps = std::move(ep);
        f = f1;
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw ConvergenceError("Laplace line search failed (gradient norm " + std::to_string(gnorm) + ")", gnorm, iter);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw ConvergenceError("Laplace precision is not positive definite", gnorm, iter);
  post.precision_lower_ = llt.matrixL();
  post.theta_mode_ = theta;
  post.eps_mode_ = eps;
  post.iterations_ = iter;
  post.gradient_norm_ = gnorm;
  return post;
}

Eigen::VectorXd LatentPosterior::mode() const {
  const auto U = static_cast<Eigen::Index>(support_.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n_beta_ + U);
  m.head(n_beta_) = theta_mode_.head(n_beta_);
  if (field_lower_.size() > 0) m.tail(U) = field_lower_ * theta_mode_.tail(U);
  return m;
}

Eigen::MatrixXd LatentPosterior::covariance() const {
  const auto U = static_cast<Eigen::Index>(support_.size());
  const Eigen::Index d = theta_mode_.size();
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(d, d);
  precision_lower_.triangularView<Eigen::Lower>().solveInPlace(inv);
  const Eigen::MatrixXd cov_theta = inv.transpose() * inv;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n_beta_ + U, d);
  T.topLeftCorner(n_beta_, n_beta_).setIdentity();
  if (field_lower_.size() > 0) T.bottomRightCorner(U, U) = field_lower_;
  return T * cov_theta * T.transpose();
}

Eigen::MatrixXd LatentPosterior::sample_theta(int n_draws, std::uint64_t seed) const {
  POPAGG_REQUIRE(n_draws >= 1, "n_draws must be >= 1");
  const Eigen::Index d = theta_mode_.size();
  Eigen::MatrixXd z = standard_normals(d, n_draws, rng::child(seed, 0));
  precision_lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(z);
  z.colwise() += theta_mode_;
  return z;
}

Eigen::MatrixXd LatentPosterior::sample_beta(int n_draws, std::uint64_t seed) const {
  return sample_theta(n_draws, seed).topRows(n_beta_);
}

Eigen::MatrixXd LatentPosterior::sample_eta_columns(const std::vector<PredictionPoint>& points, int n_draws,
                                                    std::uint64_t seed) const {
  const Eigen::MatrixXd theta = sample_theta(n_draws, seed);
  std::vector<Point> locations;
  locations.reserve(points.size());
  for (const auto& p : points) locations.push_back(p.location);
  std::vector<Point> unique;
  std::vector<int> slot;
  canonical_points(locations, unique, slot);

  const double s2 = params_.field.sigma2_s;
  const auto P = static_cast<Eigen::Index>(unique.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(P, n_draws);
  if (s2 > 0.0 && P > 0) {
    Eigen::MatrixXd cond = covariance_matrix(unique, params_.field);
    if (field_lower_.size() > 0) {
      Eigen::MatrixXd bt = cross_covariance(support_, unique, params_.field);
      field_lower_.triangularView<Eigen::Lower>().solveInPlace(bt);
      const auto U = static_cast<Eigen::Index>(support_.size());
      u.noalias() = bt.transpose() * theta.bottomRows(U);
      cond.noalias() -= bt.transpose() * bt;
    }
    const Eigen::MatrixXd r = jittered_cholesky(cond, s2).lower;
    const Eigen::MatrixXd w = standard_normals(P, n_draws, rng::child(seed, 1));
    u.noalias() += r.triangularView<Eigen::Lower>() * w;
  }

  Eigen::MatrixXd eta(static_cast<Eigen::Index>(points.size()), n_draws);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    eta.row(row) = theta.row(0) + u.row(slot[i]);
    if (n_beta_ == 2 && points[i].urban) eta.row(row) += theta.row(1);
  }
  return eta;
}

DrawMatrix sample_eta(const LatentPosterior& posterior, const std::vector<PredictionPoint>& points, int n_draws,
                      std::uint64_t seed) {
  return posterior.sample_eta_columns(points, n_draws, seed).transpose();
}

}  // namespace popagg
