#include "popagg/sampling_frame.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "popagg/error.hpp"

namespace popagg {

namespace {

double expit(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

long draw_binomial(long trials, double p, rng::Engine& engine) {
  if (trials <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return trials;
  return std::binomial_distribution<long>(trials, p)(engine);
}

Point uniform_in_cell(const Grid& grid, const GridCell& cell, rng::Engine& engine) {
  if (cell.lattice < 0) return cell.center;
  const Point c = grid.lattice_center(cell.lattice);
  std::uniform_real_distribution<double> offset(-0.5 * grid.resolution, 0.5 * grid.resolution);
  const double dx = offset(engine);
  const double dy = offset(engine);
  return {c.x + dx, c.y + dy};
}

}  // namespace

int EnumerationArea::area(Level level) const {
  switch (level) {
    case Level::Admin1: return admin1;
    case Level::Admin2: return admin2;
    case Level::Admin2Stratum: return admin2 < 0 ? -1 : stratum_area(admin2, urban);
  }
  return -1;
}

void FrameConfig::validate() const {
  POPAGG_REQUIRE(r_pop > 0.0 && std::isfinite(r_pop), "r_pop must be > 0");
  POPAGG_REQUIRE(!fixed_per_ea || (fixed_households >= kMinHouseholds && fixed_target >= 0),
                 "fixed frame needs >= 25 households and >= 0 target individuals per EA");
  std::set<std::pair<int, bool>> seen;
  for (const auto& s : strata) {
    POPAGG_REQUIRE(seen.insert({s.admin1, s.urban}).second, "duplicate frame stratum");
    POPAGG_REQUIRE(s.m >= 1, "frame stratum needs M >= 1");
    POPAGG_REQUIRE(s.n >= 0, "frame stratum needs N >= 0");
    POPAGG_REQUIRE(fixed_per_ea || s.h >= kMinHouseholds * s.m, "frame stratum needs H >= 25 M");
  }
}

std::vector<StratumTotals> FrameConfig::effective() const {
  validate();
  std::vector<StratumTotals> out;
  for (auto s : strata) {
    s.m = std::max(1L, std::lround(static_cast<double>(s.m) * r_pop));
    if (fixed_per_ea) {
      s.h = fixed_households * s.m;
      s.n = fixed_target * s.m;
    } else {
      s.h = std::max(kMinHouseholds * s.m, std::lround(static_cast<double>(s.h) * r_pop));
      s.n = std::lround(static_cast<double>(s.n) * r_pop);
    }
    out.push_back(s);
  }
  return out;
}

void multinomial(long n, std::span<const double> probs, rng::Engine& engine, std::span<long> out) {
  POPAGG_REQUIRE(probs.size() == out.size() && !probs.empty(), "multinomial needs matching nonempty spans");
  POPAGG_REQUIRE(n >= 0, "multinomial count must be >= 0");
  double mass = 0.0;
  for (double p : probs) {
    POPAGG_REQUIRE(p >= 0.0 && std::isfinite(p), "multinomial probabilities must be >= 0");
    mass += p;
  }
  POPAGG_REQUIRE(mass > 0.0 || n == 0, "multinomial probabilities are all zero");
  long left = n;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i + 1 == probs.size()) {
      out[i] = left;
      break;
    }
    const double p = mass > 0.0 ? std::clamp(probs[i] / mass, 0.0, 1.0) : 0.0;
    out[i] = draw_binomial(left, p, engine);
    left -= out[i];
    mass -= probs[i];
  }
}

std::vector<EaPlacement> draw_ea_locations(long m, const Grid& grid,
                                           const std::function<bool(const GridCell&)>& area_filter,
                                           std::uint64_t seed) {
  POPAGG_REQUIRE(m >= 1, "EA count must be >= 1");
  std::vector<int> cells;
  std::vector<double> w;
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    if (!area_filter || area_filter(grid.cells[i])) {
      cells.push_back(static_cast<int>(i));
      w.push_back(grid.cells[i].weight);
    }
  POPAGG_REQUIRE(!cells.empty(), "area has no grid cells");
  if (std::all_of(w.begin(), w.end(), [](double x) { return x <= 0.0; })) std::fill(w.begin(), w.end(), 1.0);
  std::discrete_distribution<int> pick(w.begin(), w.end());
  auto engine = rng::make_engine(seed);
  std::vector<EaPlacement> out(static_cast<std::size_t>(m));
  for (auto& e : out) {
    e.cell = cells[static_cast<std::size_t>(pick(engine))];
    const auto& c = grid.cells[static_cast<std::size_t>(e.cell)];
    e.location = uniform_in_cell(grid, c, engine);
    e.urban = c.urban;
  }
  return out;
}

std::vector<long> allocate_households(long m, long h_total, std::uint64_t seed) {
  POPAGG_REQUIRE(m >= 1, "EA count must be >= 1");
  POPAGG_REQUIRE(h_total >= kMinHouseholds * m, "household total must be >= 25 per EA");
  auto engine = rng::make_engine(seed);
  std::vector<double> equal(static_cast<std::size_t>(m), 1.0);
  std::vector<long> h(static_cast<std::size_t>(m));
  multinomial(h_total - kMinHouseholds * m, equal, engine, h);
  for (auto& x : h) x += kMinHouseholds;
  return h;
}

std::vector<long> allocate_target(long n_total, const std::vector<long>& h, std::uint64_t seed) {
  POPAGG_REQUIRE(!h.empty(), "household counts are empty");
  for (long x : h) POPAGG_REQUIRE(x > 0, "household counts must be > 0");
  auto engine = rng::make_engine(seed);
  std::vector<double> p(h.begin(), h.end());
  std::vector<long> n(h.size());
  multinomial(n_total, p, engine, n);
  return n;
}

FrameSampler::FrameSampler(const FrameConfig& config, const Grid& grid)
    : grid_(grid),
      totals_(config.effective()),
      fixed_(config.fixed_per_ea),
      fixed_h_(config.fixed_households),
      fixed_n_(config.fixed_target) {
  for (const auto& s : totals_) {
    Stratum st;
    std::vector<double> w;
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
      const auto& c = grid.cells[i];
      if (c.admin1 == s.admin1 && c.urban == s.urban && c.levels == kAllLevels) {
        st.cells.push_back(static_cast<int>(i));
        w.push_back(c.weight);
      }
    }
    if (st.cells.empty())
      throw ValidationError("frame stratum (admin1 " + std::to_string(s.admin1) + (s.urban ? ", urban" : ", rural") +
                            ") has no grid cells");
    if (std::all_of(w.begin(), w.end(), [](double x) { return x <= 0.0; })) std::fill(w.begin(), w.end(), 1.0);
    st.dist = std::discrete_distribution<int>::param_type(w.begin(), w.end());
    strata_.push_back(std::move(st));
  }
}

void FrameSampler::realize(std::uint64_t seed, std::span<const double> eta, double sigma2_eps, bool with_outcomes,
                           SamplingFrame& out) const {
  POPAGG_REQUIRE(eta.size() == grid_.cells.size(), "eta must have one value per grid point");
  auto engine = rng::make_engine(seed);
  std::discrete_distribution<int> pick;
  std::normal_distribution<double> normal(0.0, std::sqrt(sigma2_eps));
  out.totals = totals_;
  out.eas.clear();
  std::vector<double> equal, hp;
  std::vector<long> counts;
  for (std::size_t s = 0; s < totals_.size(); ++s) {
    const auto& tot = totals_[s];
    const auto& st = strata_[s];
    const std::size_t first = out.eas.size();
    for (long i = 0; i < tot.m; ++i) {
      EnumerationArea ea;
      ea.cell = st.cells[static_cast<std::size_t>(pick(engine, st.dist))];
      const auto& c = grid_.cells[static_cast<std::size_t>(ea.cell)];
      ea.location = uniform_in_cell(grid_, c, engine);
      ea.urban = c.urban;
      ea.admin1 = c.admin1;
      ea.admin2 = c.admin2;
      out.eas.push_back(ea);
    }
    const auto m = static_cast<std::size_t>(tot.m);
    std::span<EnumerationArea> block(out.eas.data() + first, m);
    if (fixed_) {
      for (auto& ea : block) {
        ea.h = fixed_h_;
        ea.n_target = fixed_n_;
      }
    } else {
      equal.assign(m, 1.0);
      counts.resize(m);
      multinomial(tot.h - kMinHouseholds * tot.m, equal, engine, counts);
      hp.resize(m);
      for (std::size_t i = 0; i < m; ++i) {
        block[i].h = counts[i] + kMinHouseholds;
        hp[i] = static_cast<double>(block[i].h);
      }
      multinomial(tot.n, hp, engine, counts);
      for (std::size_t i = 0; i < m; ++i) block[i].n_target = counts[i];
    }
    for (auto& ea : block) {
      ea.eps = sigma2_eps > 0.0 ? normal(engine) : 0.0;
      ea.risk = expit(eta[static_cast<std::size_t>(ea.cell)] + ea.eps);
    }
    if (with_outcomes)
      for (auto& ea : block) ea.z = draw_binomial(ea.n_target, ea.risk, engine);
  }
}

SamplingFrame realize_population(const FrameConfig& config, const Grid& grid, const EtaSource& eta_source,
                                 const ResponseParams& params, std::uint64_t seed) {
  params.validate();
  FrameSampler sampler(config, grid);
  std::vector<double> eta(grid.cells.size());
  for (std::size_t i = 0; i < grid.cells.size(); ++i) eta[i] = eta_source(grid.cells[i], i);
  SamplingFrame frame;
  sampler.realize(seed, eta, params.sigma2_eps, true, frame);
  return frame;
}

}  // namespace popagg
