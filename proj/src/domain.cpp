#include "popagg/domain.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "popagg/error.hpp"
#include "popagg/rng.hpp"

namespace popagg {

namespace {

struct Rect {
  double x0, y0, x1, y1;
  bool contains(Point p) const { return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1; }
};

}  // namespace

Domain make_desk_domain(const DeskDomainOptions& o) {
  POPAGG_REQUIRE(o.capital_km > 0 && o.capital_km < o.extent_km, "capital must fit inside the domain");
  POPAGG_REQUIRE(o.capital_split >= 1 && o.other_split >= 1, "area splits must be >= 1");
  POPAGG_REQUIRE(o.rural_fraction.size() == 4, "desk domain needs 4 rural fractions");
  const double L = o.extent_km, c = o.capital_km;
  const Rect admin1_rects[4] = {{0, 0, c, c}, {c, 0, L, c}, {0, c, c, L}, {c, c, L, L}};

  std::vector<AreaInfo> admin1, admin2;
  std::vector<Rect> admin2_rects;
  for (int a = 0; a < 4; ++a) {
    admin1.push_back({"A" + std::to_string(a + 1), -1});
    const Rect& r = admin1_rects[a];
    const int k = a == 0 ? o.capital_split : o.other_split;
    const double dx = (r.x1 - r.x0) / k, dy = (r.y1 - r.y0) / k;
    int n = 0;
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) {
        admin2.push_back({admin1.back().name + "." + std::to_string(++n), a});
        admin2_rects.push_back({r.x0 + i * dx, r.y0 + j * dy, r.x0 + (i + 1) * dx, r.y0 + (j + 1) * dy});
      }
  }

  auto engine = rng::make_engine(rng::derive(o.seed, rng::Stream::Density));
  constexpr int kFeatures = 64;
  std::normal_distribution<double> omega(0.0, 1.0 / o.field_lengthscale);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> wx(kFeatures), wy(kFeatures), ph(kFeatures);
  for (int k = 0; k < kFeatures; ++k) {
    wx[k] = omega(engine);
    wy[k] = omega(engine);
    ph[k] = phase(engine);
  }
  std::vector<Point> cores(4);
  std::uniform_real_distribution<double> unit(0.25, 0.75);
  for (int a = 0; a < 4; ++a) {
    const Rect& r = admin1_rects[a];
    cores[a] = a == 0 ? Point{(r.x0 + r.x1) / 2, (r.y0 + r.y1) / 2}
                      : Point{r.x0 + unit(engine) * (r.x1 - r.x0), r.y0 + unit(engine) * (r.y1 - r.y0)};
  }
  const double amp = o.field_sd * std::sqrt(2.0 / kFeatures);

  auto density = [&](Point p) {
    double g = 0.0;
    for (int k = 0; k < kFeatures; ++k) g += std::cos(wx[k] * p.x + wy[k] * p.y + ph[k]);
    int a = 0;
    while (a < 3 && !admin1_rects[a].contains(p)) ++a;
    const double w = a == 0 ? 2.0 * o.core_width : o.core_width;
    const double d2 = std::pow(p.x - cores[a].x, 2) + std::pow(p.y - cores[a].y, 2);
    double rho = o.base_density * std::exp(amp * g) * (1.0 + o.core_amplitude * std::exp(-d2 / (2 * w * w)));
    if (a == 0) rho *= o.capital_factor;
    return rho;
  };

  const Extent extent{0, 0, L, L};
  Grid raw = build_grid(extent, o.fine_resolution, density);
  std::vector<int> labels(raw.cells.size(), -1);
  for (std::size_t i = 0; i < raw.cells.size(); ++i)
    for (std::size_t a = 0; a < admin2_rects.size(); ++a)
      if (admin2_rects[a].contains(raw.cells[i].center)) {
        labels[i] = static_cast<int>(a);
        break;
      }
  ArealPartition partition(std::move(admin1), std::move(admin2), raw.origin, raw.resolution, raw.ncols,
                           raw.nrows, std::move(labels));
  Domain d;
  d.extent = extent;
  d.rural_fraction = o.rural_fraction;
  d.fine = classify_urban(assign_areas(std::move(raw), partition), partition, d.rural_fraction);
  d.partition = std::move(partition);
  return d;
}

Domain make_domain(const DensityRaster& density, const ArealPartition& partition,
                   const std::vector<double>& rural_fraction) {
  Domain d;
  d.extent = {density.origin.x, density.origin.y, density.origin.x + density.ncols * density.resolution,
              density.origin.y + density.nrows * density.resolution};
  d.partition = partition;
  d.rural_fraction = rural_fraction;
  d.fine = classify_urban(assign_areas(build_grid(d.extent, density.resolution, density), partition), partition,
                          rural_fraction);
  return d;
}

}  // namespace popagg
