#include <doctest.h>

#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "popagg/error.hpp"
#include "popagg/sampling_frame.hpp"

using namespace popagg;

namespace {

Grid two_cells(double w0, double w1) {
  Grid g;
  g.origin = {0, 0};
  g.resolution = 1.0;
  g.ncols = 2;
  g.nrows = 1;
  for (int i = 0; i < 2; ++i) {
    GridCell c;
    c.center = g.lattice_center(i);
    c.lattice = i;
    c.weight = c.density = i == 0 ? w0 : w1;
    c.admin1 = 0;
    c.admin2 = 0;
    g.cells.push_back(c);
  }
  return g;
}

FrameConfig strip_frame(bool fixed) {
  FrameConfig f;
  f.strata = {{0, true, 10, 400, 150}, {0, false, 20, 900, 300}, {1, false, 30, 1000, 200}};
  f.fixed_per_ea = fixed;
  return f;
}

}  // namespace

TEST_CASE("EA locations skip zero-mass cells") {
  const auto eas = draw_ea_locations(1000, two_cells(0.0, 2.0), nullptr, 1);
  for (const auto& e : eas) {
    CHECK(e.cell == 1);
    CHECK(e.location.x >= 1.0);
    CHECK(e.location.x <= 2.0);
  }
}

TEST_CASE("EA locations follow the cell weights") {
  const long n = 100000;
  const auto eas = draw_ea_locations(n, two_cells(1.0, 3.0), nullptr, 2);
  const double f = static_cast<double>(std::count_if(eas.begin(), eas.end(), [](auto& e) { return e.cell == 1; })) / n;
  CHECK(std::abs(f - 0.75) < 3.0 * std::sqrt(0.75 * 0.25 / n));
}

TEST_CASE("household and target allocation") {
  const auto h = allocate_households(40, 2000, 3);
  CHECK(std::accumulate(h.begin(), h.end(), 0L) == 2000);
  for (long x : h) CHECK(x >= kMinHouseholds);
  CHECK(allocate_households(4, 100, 3) == std::vector<long>(4, 25));
  CHECK_THROWS_AS(allocate_households(4, 99, 3), ValidationError);
  const auto n = allocate_target(777, h, 4);
  CHECK(std::accumulate(n.begin(), n.end(), 0L) == 777);
}

TEST_CASE("multinomial respects zero probabilities and the total") {
  auto engine = rng::make_engine(5);
  std::vector<double> p{0.2, 0.0, 0.8};
  std::vector<long> out(3);
  multinomial(1000, p, engine, out);
  CHECK(out[1] == 0);
  CHECK(out[0] + out[2] == 1000);
}

TEST_CASE("frame config scaling") {
  FrameConfig f = strip_frame(false);
  f.r_pop = 0.2;
  const auto e = f.effective();
  CHECK(e[0].m == 2);
  CHECK(e[0].h == 80);
  CHECK(e[0].n == 30);
  CHECK(e[1].h == 180);
  f.r_pop = 0.01;
  CHECK(f.effective()[0].h == 25);  // M floors at 1, H at 25 M
  FrameConfig bad = strip_frame(false);
  bad.strata[0].h = 100;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("frame sampler realizes the configured totals") {
  const Domain d = testing::strip_domain();
  for (bool fixed : {false, true}) {
    const FrameConfig cfg = strip_frame(fixed);
    FrameSampler sampler(cfg, d.fine);
    std::vector<double> eta(d.fine.cells.size(), -1.0);
    SamplingFrame f;
    sampler.realize(9, eta, 0.3, true, f);
    REQUIRE(f.eas.size() == 60);
    for (const auto& t : cfg.effective()) {
      long m = 0, h = 0, n = 0;
      for (const auto& ea : f.eas)
        if (ea.admin1 == t.admin1 && ea.urban == t.urban) {
          ++m;
          h += ea.h;
          n += ea.n_target;
          CHECK(ea.z <= ea.n_target);
          CHECK(ea.h >= kMinHouseholds);
          CHECK(d.fine.cells[static_cast<std::size_t>(ea.cell)].urban == ea.urban);
          CHECK(ea.risk == doctest::Approx(1.0 / (1.0 + std::exp(1.0 - ea.eps))));
        }
      CHECK(m == t.m);
      CHECK(h == (fixed ? 25 * t.m : t.h));
      CHECK(n == (fixed ? 25 * t.m : t.n));
    }
    SamplingFrame again;
    sampler.realize(9, eta, 0.3, true, again);
    CHECK(again.eas.back().location.x == f.eas.back().location.x);
    CHECK(again.eas.back().z == f.eas.back().z);
  }
}

TEST_CASE("missing stratum cells are reported") {
  const Domain d = testing::strip_domain();
  FrameConfig cfg;
  cfg.strata = {{1, true, 5, 125, 10}};  // the east half has no urban cells
  CHECK_THROWS_AS(FrameSampler(cfg, d.fine), ValidationError);
}

TEST_CASE("constant zero predictor without noise gives risk one half") {
  const Domain d = testing::strip_domain();
  ResponseParams p;
  p.beta0 = 0.0;
  p.beta_urb = 0.0;
  p.field.sigma2_s = 0.0;
  p.sigma2_eps = 0.0;
  const auto f = realize_population(strip_frame(true), d.fine, [](const GridCell&, std::size_t) { return 0.0; }, p, 1);
  for (const auto& ea : f.eas) CHECK(ea.risk == 0.5);
}
