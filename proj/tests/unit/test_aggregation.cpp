#include <doctest.h>

#include <cmath>
#include <map>

#include "helpers.hpp"
#include "popagg/aggregation.hpp"
#include "popagg/error.hpp"

using namespace popagg;

namespace {

double logit(double p) { return std::log(p / (1 - p)); }

FrameConfig strip_frame() {
  FrameConfig f;
  f.strata = {{0, true, 10, 400, 150}, {0, false, 20, 900, 300}, {1, false, 30, 1000, 200}};
  return f;
}

LatentPosterior strip_posterior(double s2s, double s2eps, double prior_var = 1e6) {
  std::vector<ClusterObservation> obs{{{0.5, 0.5}, true, 25, 4}, {{1.5, 1.5}, false, 25, 2}, {{3.5, 0.5}, false, 25, 3},
                                      {{2.5, 1.5}, false, 25, 1}};
  ResponseParams p;
  p.field = {s2s, 10.0, 1.0};
  p.sigma2_eps = s2eps;
  FitOptions opt;
  opt.prior_var_intercept = prior_var;
  opt.prior_var_urban = prior_var;
  return laplace_fit(obs, p, opt);
}

const ArealEnsemble& find(const EnsembleSet& s, ModelKind m, Level l, int area, Quantity q) {
  for (const auto& e : s.ensembles)
    if (e.model == m && e.level == l && e.area == area && e.quantity == q) return e;
  throw Error("ensemble not found");
}

}  // namespace

TEST_CASE("Gauss-Hermite rule integrates normal moments") {
  const GaussHermite gh(25);
  double m0 = 0, m1 = 0, m2 = 0, m4 = 0, m6 = 0;
  for (std::size_t i = 0; i < gh.nodes().size(); ++i) {
    const double x = gh.nodes()[i], w = gh.weights()[i];
    m0 += w;
    m1 += w * x;
    m2 += w * x * x;
    m4 += w * std::pow(x, 4);
    m6 += w * std::pow(x, 6);
  }
  CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(m1) < 1e-14);
  CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(m6 == doctest::Approx(15.0).epsilon(1e-11));
}

TEST_CASE("smooth risk matches adaptive quadrature") {
  CHECK(smooth_risk_point(-2.9, 0.4) == doctest::Approx(0.061302563608343512).epsilon(1e-10));
  CHECK(smooth_risk_point(0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(smooth_risk_point(2.0, 0.1) == doctest::Approx(0.8768270106837891).epsilon(1e-10));
  CHECK(smooth_risk_point(-4.0, 0.45) == doctest::Approx(0.022154892541753329).epsilon(1e-10));
  CHECK(smooth_risk_point(-1.3, 0.0) == doctest::Approx(expit(-1.3)).epsilon(1e-15));
}

TEST_CASE("areal weighted means") {
  const std::vector<double> eta{logit(0.1), logit(0.3)}, w{1, 3};
  const auto a = aggregate_smooth(eta, w, 0.0, 25, 40.0);
  CHECK(a.defined);
  CHECK(a.risk == doctest::Approx(0.25));
  CHECK(a.burden == doctest::Approx(10.0));
  const std::vector<double> flat(5, logit(0.2)), w5{1, 2, 3, 4, 5};
  CHECK(aggregate_smooth(flat, w5, 0.0, 25, 1.0).risk == doctest::Approx(0.2));
  const auto none = aggregate_smooth(eta, std::vector<double>{0, 0}, 0.4, 25, 0.0);
  CHECK_FALSE(none.defined);
  CHECK(none.burden == 0.0);
  auto engine = rng::make_engine(1);
  CHECK(aggregate_gridded(eta, w, 0.0, 40.0, engine).risk == doctest::Approx(0.25));
}

TEST_CASE("gridded risk variance shrinks as the cell count grows") {
  auto engine = rng::make_engine(2);
  double prev = 1e9;
  for (int cells : {1, 4, 16}) {
    const std::vector<double> eta(static_cast<std::size_t>(cells), -2.0), w(static_cast<std::size_t>(cells), 1.0);
    double s = 0, s2 = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      const double r = aggregate_gridded(eta, w, 0.4, 1.0, engine).risk;
      s += r;
      s2 += r * r;
    }
    const double var = s2 / n - (s / n) * (s / n);
    CHECK(var < prev);
    prev = var;
  }
}

TEST_CASE("frame estimators") {
  SamplingFrame f;
  EnumerationArea a, b;
  a.admin1 = b.admin1 = 0;
  a.admin2 = b.admin2 = 0;
  a.n_target = 10;
  b.n_target = 30;
  a.risk = 0.1;
  b.risk = 0.3;
  a.z = 1;
  b.z = 9;
  f.eas = {a, b};
  const auto lat = aggregate_latent(f, Level::Admin2, 0);
  CHECK(lat.risk == doctest::Approx(0.25));
  CHECK(lat.burden == doctest::Approx(10.0));
  const auto emp = aggregate_empirical(f, Level::Admin2, 0);
  CHECK(emp.risk == doctest::Approx(0.25));
  CHECK(emp.burden == 10.0);
  CHECK_FALSE(aggregate_empirical(f, Level::Admin2, 1).defined);
  f.eas[0].z = 10;
  f.eas[1].z = 30;
  CHECK(aggregate_empirical(f, Level::Admin1, 0).risk == 1.0);
}

TEST_CASE("relative prevalence") {
  CHECK(*relative_prevalence(0.02, 0.02) == 1.0);
  CHECK(*relative_prevalence(0.01, 0.02) == doctest::Approx(0.5));
  CHECK_FALSE(relative_prevalence(0.01, 0.0).has_value());
  CHECK_FALSE(relative_prevalence(0.01, std::nan("")).has_value());
}

TEST_CASE("frame quantities nest across levels") {
  const Domain d = testing::strip_domain();
  FrameSampler sampler(strip_frame(), d.fine);
  SamplingFrame f;
  sampler.realize(3, std::vector<double>(d.fine.cells.size(), -1.5), 0.4, true, f);
  std::map<std::tuple<int, int, int>, AreaQuantity> q;
  for (const auto& t : frame_quantities(f, d.partition))
    q[{static_cast<int>(t.level), t.area, static_cast<int>(t.quantity)}] = t;
  auto get = [&](Level l, int a, Quantity k) { return q.at({static_cast<int>(l), a, static_cast<int>(k)}); };
  const double b1 = get(Level::Admin1, 1, Quantity::Burden).value;
  CHECK(b1 == get(Level::Admin2, 1, Quantity::Burden).value + get(Level::Admin2, 2, Quantity::Burden).value);
  const double w = get(Level::Admin2, 0, Quantity::Burden).value;
  CHECK(w == get(Level::Admin2Stratum, stratum_area(0, true), Quantity::Burden).value +
                 get(Level::Admin2Stratum, stratum_area(0, false), Quantity::Burden).value);
  CHECK(get(Level::Admin1, 0, Quantity::Prevalence).value == doctest::Approx(w / 450.0));
  CHECK(get(Level::Admin1, 0, Quantity::RelativePrevalence).defined ==
        (get(Level::Admin2Stratum, stratum_area(0, false), Quantity::Prevalence).value > 0));
  CHECK_FALSE(get(Level::Admin1, 1, Quantity::RelativePrevalence).defined);  // no urban part
  CHECK(q.count({static_cast<int>(Level::Admin2Stratum), stratum_area(1, true), 0}) == 0);
}

TEST_CASE("without randomness the risk models coincide") {
  const Domain d = testing::strip_domain();
  ResponseParams p;
  p.field.sigma2_s = 0.0;
  p.sigma2_eps = 0.0;
  const auto post = strip_posterior(0.0, 0.0, 1e-14);
  const std::vector<ModelKind> models{ModelKind::Gridded, ModelKind::SmoothLatent, ModelKind::Latent,
                                      ModelKind::Empirical};
  const auto ens = predictive_ensemble(post, d.fine, d.partition, strip_frame(), models, p, 1, 4);
  for (const auto& e : ens.ensembles) {
    if (e.model == ModelKind::Empirical || e.quantity != Quantity::Prevalence) continue;
    const auto& ref = find(ens, ModelKind::SmoothLatent, e.level, e.area, e.quantity);
    CHECK(e.draws[0] == doctest::Approx(ref.draws[0]).epsilon(1e-9));
  }
  CHECK(find(ens, ModelKind::Latent, Level::Admin2, 1, Quantity::Prevalence).draws[0] ==
        doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("predictive ensembles are additive and thread independent") {
  const Domain d = testing::strip_domain();
  ResponseParams p;
  p.field = {0.3, 10.0, 1.0};
  p.sigma2_eps = 0.4;
  const auto post = strip_posterior(0.3, 0.4);
  const std::vector<ModelKind> models{ModelKind::Gridded, ModelKind::SmoothLatent, ModelKind::Latent,
                                      ModelKind::Empirical};
  const auto one = predictive_ensemble(post, d.fine, d.partition, strip_frame(), models, p, 50, 8, {25, 1});
  const auto three = predictive_ensemble(post, d.fine, d.partition, strip_frame(), models, p, 50, 8, {25, 3});
  REQUIRE(one.ensembles.size() == three.ensembles.size());
  for (std::size_t i = 0; i < one.ensembles.size(); ++i) {
    const auto& a = one.ensembles[i];
    const auto& b = three.ensembles[i];
    for (std::size_t k = 0; k < a.draws.size(); ++k)
      CHECK((a.draws[k] == b.draws[k] || (std::isnan(a.draws[k]) && std::isnan(b.draws[k]))));
  }
  for (ModelKind m : models) {
    const auto& a1 = find(one, m, Level::Admin1, 1, Quantity::Burden);
    const auto& c1 = find(one, m, Level::Admin2, 1, Quantity::Burden);
    const auto& c2 = find(one, m, Level::Admin2, 2, Quantity::Burden);
    for (std::size_t k = 0; k < a1.draws.size(); ++k)
      CHECK(a1.draws[k] == doctest::Approx(c1.draws[k] + c2.draws[k]).epsilon(1e-12));
  }
  for (const auto& e : one.ensembles)
    if (e.quantity == Quantity::Prevalence)
      for (std::size_t k = 0; k < e.draws.size(); ++k)
        if (e.defined[k]) {
          CHECK(e.draws[k] >= 0.0);
          CHECK(e.draws[k] <= 1.0);
        }
  const auto& emp = find(one, ModelKind::Empirical, Level::Admin1, 0, Quantity::Burden);
  for (double b : emp.draws) CHECK(b <= 450.0);
}

TEST_CASE("grid point in a stratum missing from the frame is an error") {
  const Domain d = testing::strip_domain();
  FrameConfig f;
  f.strata = {{0, true, 10, 400, 150}};
  ResponseParams p;
  const auto post = strip_posterior(0.3, 0.4);
  CHECK_THROWS_AS(predictive_ensemble(post, d.fine, d.partition, f, {ModelKind::SmoothLatent}, p, 2, 1),
                  ValidationError);
}
