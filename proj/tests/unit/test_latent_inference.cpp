#include <doctest.h>

#include <cmath>
#include <limits>

#include "popagg/error.hpp"
#include "popagg/latent_inference.hpp"

using namespace popagg;

namespace {

std::vector<ClusterObservation> small_survey() {
  const int n[] = {25, 30, 20, 40, 35}, y[] = {3, 5, 1, 2, 9};
  const bool urban[] = {true, true, false, false, false};
  std::vector<ClusterObservation> obs;
  for (int i = 0; i < 5; ++i) obs.push_back({{i * 3.0, i * 1.0}, urban[i], n[i], y[i]});
  return obs;
}

ResponseParams no_field(double s2eps) {
  ResponseParams p;
  p.field.sigma2_s = 0.0;
  p.sigma2_eps = s2eps;
  return p;
}

}  // namespace

TEST_CASE("intercept-only fit with a flat prior recovers the pooled logit") {
  FitOptions opt;
  opt.prior_var_intercept = std::numeric_limits<double>::infinity();
  opt.urban_covariate = false;
  const auto post = laplace_fit(small_survey(), no_field(0.0), opt);
  const double p = 20.0 / 150.0;
  CHECK(post.mode()[0] == doctest::Approx(std::log(p / (1 - p))).epsilon(1e-10));
  CHECK(post.covariance()(0, 0) == doctest::Approx(1.0 / (150.0 * p * (1 - p))).epsilon(1e-8));
}

TEST_CASE("nugget-only joint mode matches an independent optimizer") {
  FitOptions opt;
  opt.nugget = NuggetMode::Latent;
  const auto post = laplace_fit(small_survey(), no_field(0.4), opt);
  const auto m = post.mode();
  CHECK(m[0] == doctest::Approx(-2.06567074308).epsilon(1e-6));
  CHECK(m[1] == doctest::Approx(0.280853770269).epsilon(1e-6));
  const double eps[] = {-0.108578302498, 0.108690752068, -0.291794028494, -0.424641717506, 0.716322538872};
  REQUIRE(post.nugget_mode().size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(post.nugget_mode()[i] == doctest::Approx(eps[i]).epsilon(1e-5));
}

TEST_CASE("integrated nugget matches an independent quadrature optimizer") {
  const auto post = laplace_fit(small_survey(), no_field(0.4));
  CHECK(post.nugget_mode().size() == 0);
  const auto m = post.mode();
  CHECK(m[0] == doctest::Approx(-2.13089661792).epsilon(1e-6));
  CHECK(m[1] == doctest::Approx(0.285964539224).epsilon(1e-6));
  const auto c = post.covariance();
  CHECK(c(0, 0) == doctest::Approx(0.2518587434).epsilon(1e-4));
  CHECK(c(1, 1) == doctest::Approx(0.6069726777).epsilon(1e-4));
}

TEST_CASE("spatial fit converges and its draws centre on the mode") {
  ResponseParams p;
  p.field = {0.5, 10.0, 1.0};
  p.sigma2_eps = 0.2;
  const auto obs = small_survey();
  const auto post = laplace_fit(obs, p);
  CHECK(post.gradient_norm() < 1e-6);
  const auto cov = post.covariance();
  CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(cov.diagonal().minCoeff() > 0.0);

  std::vector<PredictionPoint> pts;
  for (const auto& o : obs) pts.push_back({o.location, o.urban});
  const int D = 20000;
  const auto eta = post.sample_eta_columns(pts, D, 3);
  const auto mode = post.mode();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double expected = mode[0] + (pts[i].urban ? mode[1] : 0.0) + mode[2 + r];
    const double mean = eta.row(r).mean();
    const double sd = std::sqrt((eta.row(r).array() - mean).square().mean());
    CHECK(std::abs(mean - expected) < 4.0 * sd / std::sqrt(D));
  }
  const DrawMatrix rows = sample_eta(post, pts, 5, 3);
  CHECK(rows.rows() == 5);
  CHECK(rows(2, 1) == post.sample_eta_columns(pts, 5, 3)(1, 2));
}

TEST_CASE("prediction far from the data reverts to the prior field variance") {
  ResponseParams p;
  p.field = {0.5, 10.0, 1.0};
  p.sigma2_eps = 0.2;
  FitOptions opt;
  opt.prior_var_intercept = 1e-8;  // pin β so only u varies
  opt.prior_var_urban = 1e-8;
  const auto post = laplace_fit(small_survey(), p, opt);
  const auto eta = post.sample_eta_columns({{{500.0, 500.0}, false}}, 20000, 9);
  const double mean = eta.row(0).mean();
  const double var = (eta.row(0).array() - mean).square().mean();
  CHECK(var == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("non-convergence raises ConvergenceError with diagnostics") {
  FitOptions opt;
  opt.max_iterations = 0;
  try {
    laplace_fit(small_survey(), no_field(0.4), opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.gradient_norm() > 0.0);
    CHECK(e.iterations() == 0);
  }
}

TEST_CASE("invalid observations are rejected") {
  auto obs = small_survey();
  obs[0].y = 40;
  CHECK_THROWS_AS(laplace_fit(obs, no_field(0.4)), ValidationError);
}
