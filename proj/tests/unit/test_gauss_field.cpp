#include <doctest.h>

#include <cmath>

#include "popagg/error.hpp"
#include "popagg/gauss_field.hpp"

using namespace popagg;

TEST_CASE("Matérn correlation matches the Bessel-function oracle") {
  const FieldParams p{1.0, 400.0, 1.0};
  CHECK(matern_correlation(0.0, p) == 1.0);
  CHECK(matern_correlation(1.0, p) == doctest::Approx(0.9998608071305628).epsilon(1e-12));
  CHECK(matern_correlation(100.0, p) == doctest::Approx(0.73191447646146268).epsilon(1e-12));
  CHECK(matern_correlation(400.0, p) == doctest::Approx(0.13966747401529311).epsilon(1e-12));
  CHECK(matern_correlation(1000.0, p) == doctest::Approx(0.0029747598807285929).epsilon(1e-10));
  CHECK(matern_correlation(30.0, {1.0, 100.0, 0.5}) == doctest::Approx(0.54881163609402661).epsilon(1e-12));
  CHECK(matern_correlation(30.0, {1.0, 100.0, 1.5}) == doctest::Approx(0.72133042375150069).epsilon(1e-12));
}

TEST_CASE("field parameter validation") {
  CHECK_THROWS_AS((FieldParams{-1.0, 10.0, 1.0}.validate()), ValidationError);
  CHECK_THROWS_AS((FieldParams{1.0, 0.0, 1.0}.validate()), ValidationError);
  CHECK_NOTHROW((FieldParams{0.0, 10.0, 1.0}.validate()));
}

TEST_CASE("jittered Cholesky handles duplicate points and the zero matrix") {
  const std::vector<Point> pts{{0, 0}, {0, 0}, {1, 0}};
  const auto k = covariance_matrix(pts, {1.0, 10.0, 1.0});
  const auto f = jittered_cholesky(k, 1.0);
  CHECK(f.jitter > 0.0);
  CHECK((f.lower * f.lower.transpose() - k).cwiseAbs().maxCoeff() < 1e-3);
  CHECK_NOTHROW(jittered_cholesky(Eigen::MatrixXd::Zero(3, 3), 0.0));
}

TEST_CASE("sampled field reproduces the covariance") {
  const std::vector<Point> pts{{0, 0}, {5, 0}, {0, 20}};
  const FieldParams p{0.5, 30.0, 1.0};
  FieldSampler sampler(pts, p);
  auto engine = rng::make_engine(11);
  const int n = 40000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd u = sampler.draw(engine);
    acc += u * u.transpose();
  }
  acc /= n;
  const auto k = covariance_matrix(pts, p);
  // SE of a sample covariance is at most sqrt(2)·σ²/√n ≈ 0.0035.
  CHECK((acc - k).cwiseAbs().maxCoeff() < 0.015);
}

TEST_CASE("sampler output follows the input order") {
  const std::vector<Point> a{{0, 0}, {3, 1}, {3, 1}}, b{{3, 1}, {0, 0}, {3, 1}};
  const FieldParams p{1.0, 10.0, 1.0};
  const auto ua = sample_field(a, p, 5), ub = sample_field(b, p, 5);
  CHECK(ua[1] == ua[2]);
  CHECK(ua[0] == ub[1]);
  CHECK(ua[1] == ub[0]);
}
