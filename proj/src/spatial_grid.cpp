#include "popagg/spatial_grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "popagg/error.hpp"

namespace popagg {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string_view level_name(Level level) {
  switch (level) {
    case Level::Admin1: return "admin1";
    case Level::Admin2: return "admin2";
    case Level::Admin2Stratum: return "admin2_stratum";
  }
  return "?";
}

Level parse_level(std::string_view name) {
  for (Level l : kLevels)
    if (level_name(l) == name) return l;
  throw ValidationError("unknown level '" + std::string(name) + "'");
}

int GridCell::area(Level level) const {
  switch (level) {
    case Level::Admin1: return admin1;
    case Level::Admin2: return admin2;
    case Level::Admin2Stratum: return admin2 < 0 ? -1 : stratum_area(admin2, urban);
  }
  return -1;
}

namespace {

int lattice_index(Point origin, double res, int ncols, int nrows, Point p) {
  const double fx = (p.x - origin.x) / res;
  const double fy = (p.y - origin.y) / res;
  if (fx < -1e-9 || fy < -1e-9 || fx > ncols + 1e-9 || fy > nrows + 1e-9) return -1;
  const int c = std::clamp(static_cast<int>(std::floor(fx)), 0, ncols - 1);
  const int r = std::clamp(static_cast<int>(std::floor(fy)), 0, nrows - 1);
  return r * ncols + c;
}

int cells_along(double length, double res) {
  return std::max(1, static_cast<int>(std::ceil(length / res - 1e-9)));
}

void check_extent(const Extent& extent, double resolution) {
  if (!(resolution > 0.0)) throw ValidationError("resolution must be positive");
  if (!(extent.width() > 0.0) || !(extent.height() > 0.0))
    throw ValidationError("extent must be nonempty");
}

}  // namespace

Point Grid::lattice_center(int idx) const {
  const int r = idx / ncols;
  const int c = idx % ncols;
  return {origin.x + (c + 0.5) * resolution, origin.y + (r + 0.5) * resolution};
}

int Grid::locate(Point p) const { return lattice_index(origin, resolution, ncols, nrows, p); }

double Grid::total_weight() const {
  double s = 0.0;
  for (const auto& c : cells) s += c.weight;
  return s;
}

ArealPartition::ArealPartition(std::vector<AreaInfo> admin1, std::vector<AreaInfo> admin2,
                               Point origin, double resolution, int ncols, int nrows,
                               std::vector<int> labels)
    : admin1_(std::move(admin1)),
      admin2_(std::move(admin2)),
      origin_(origin),
      resolution_(resolution),
      ncols_(ncols),
      nrows_(nrows),
      labels_(std::move(labels)) {
  POPAGG_REQUIRE(resolution_ > 0.0, "partition raster resolution must be positive");
  POPAGG_REQUIRE(static_cast<long>(labels_.size()) == static_cast<long>(ncols_) * nrows_,
                 "partition label raster size mismatch");
  for (const auto& a : admin2_)
    POPAGG_REQUIRE(a.parent >= 0 && a.parent < static_cast<int>(admin1_.size()),
                   "Admin2 area '" + a.name + "' has no valid Admin1 parent");
  for (int l : labels_)
    POPAGG_REQUIRE(l >= -1 && l < static_cast<int>(admin2_.size()), "partition label out of range");
}

int ArealPartition::n_areas(Level level) const {
  switch (level) {
    case Level::Admin1: return static_cast<int>(admin1_.size());
    case Level::Admin2: return static_cast<int>(admin2_.size());
    case Level::Admin2Stratum: return 2 * static_cast<int>(admin2_.size());
  }
  return 0;
}

std::string ArealPartition::area_name(Level level, int area) const {
  switch (level) {
    case Level::Admin1: return admin1_.at(static_cast<std::size_t>(area)).name;
    case Level::Admin2: return admin2_.at(static_cast<std::size_t>(area)).name;
    case Level::Admin2Stratum:
      return admin2_.at(static_cast<std::size_t>(area / 2)).name + (area % 2 ? ":urban" : ":rural");
  }
  return {};
}

int ArealPartition::find_admin1(std::string_view name) const {
  for (std::size_t i = 0; i < admin1_.size(); ++i)
    if (admin1_[i].name == name) return static_cast<int>(i);
  return -1;
}

int ArealPartition::admin2_at(Point p) const {
  const int idx = lattice_index(origin_, resolution_, ncols_, nrows_, p);
  return idx < 0 ? -1 : labels_[static_cast<std::size_t>(idx)];
}

Grid build_grid(const Extent& extent, double resolution, const DensityRaster& density) {
  check_extent(extent, resolution);
  Grid g;
  g.origin = {extent.xmin, extent.ymin};
  g.resolution = resolution;
  g.ncols = cells_along(extent.width(), resolution);
  g.nrows = cells_along(extent.height(), resolution);
  const double tol = 1e-9 * resolution;
  if (std::abs(density.resolution - resolution) > tol || density.ncols != g.ncols ||
      density.nrows != g.nrows || std::abs(density.origin.x - g.origin.x) > tol ||
      std::abs(density.origin.y - g.origin.y) > tol ||
      density.values.size() != static_cast<std::size_t>(g.ncols) * g.nrows)
    throw ValidationError("density raster does not match the requested grid");
  g.cells.resize(density.values.size());
  for (std::size_t i = 0; i < g.cells.size(); ++i) {
    const double d = density.values[i];
    if (!(d >= 0.0) || !std::isfinite(d)) throw ValidationError("density values must be finite and >= 0");
    auto& c = g.cells[i];
    c.center = g.lattice_center(static_cast<int>(i));
    c.density = d;
    c.weight = d * g.cell_area();
    c.lattice = static_cast<int>(i);
  }
  return g;
}

Grid build_grid(const Extent& extent, double resolution, const DensityFunction& density) {
  check_extent(extent, resolution);
  DensityRaster r;
  r.origin = {extent.xmin, extent.ymin};
  r.resolution = resolution;
  r.ncols = cells_along(extent.width(), resolution);
  r.nrows = cells_along(extent.height(), resolution);
  r.values.resize(static_cast<std::size_t>(r.ncols) * r.nrows);
  for (int row = 0; row < r.nrows; ++row)
    for (int col = 0; col < r.ncols; ++col)
      r.values[static_cast<std::size_t>(row) * r.ncols + col] =
          density({r.origin.x + (col + 0.5) * resolution, r.origin.y + (row + 0.5) * resolution});
  return build_grid(extent, resolution, r);
}

Grid assign_areas(Grid grid, const ArealPartition& partition) {
  std::vector<GridCell> kept;
  kept.reserve(grid.cells.size());
  for (auto c : grid.cells) {
    const int a2 = partition.admin2_at(c.center);
    if (a2 < 0) continue;
    c.admin2 = a2;
    c.admin1 = partition.admin1_of(a2);
    kept.push_back(c);
  }
  grid.cells = std::move(kept);
  return grid;
}

double urban_threshold(const std::vector<double>& density, const std::vector<double>& mass,
                       double rural_fraction) {
  POPAGG_REQUIRE(density.size() == mass.size(), "density/mass size mismatch");
  POPAGG_REQUIRE(rural_fraction >= 0.0 && rural_fraction <= 1.0, "rural fraction must lie in [0,1]");
  constexpr double kAllRural = std::numeric_limits<double>::infinity();
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (density.empty() || !(total > 0.0)) return kAllRural;

  std::vector<std::size_t> order(density.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return density[a] < density[b]; });

  // Candidate k = each distinct density; rural mass is everything strictly below k.
  double below = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double k = density[order[i]];
    if (below / total >= rural_fraction) return k;
    while (i < order.size() && density[order[i]] == k) below += mass[order[i++]];
  }
  return kAllRural;
}

Grid classify_urban(Grid grid, const ArealPartition& partition, const std::vector<double>& rural_fraction) {
  const int n1 = partition.n_areas(Level::Admin1);
  POPAGG_REQUIRE(static_cast<int>(rural_fraction.size()) == n1, "one rural fraction per Admin1 area is required");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n1));
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const int a1 = grid.cells[i].admin1;
    POPAGG_REQUIRE(a1 >= 0 && a1 < n1, "grid cell without an Admin1 label");
    members[static_cast<std::size_t>(a1)].push_back(i);
  }
  for (int a = 0; a < n1; ++a) {
    const auto& idx = members[static_cast<std::size_t>(a)];
    if (idx.empty()) throw ValidationError("Admin1 area '" + partition.area_name(Level::Admin1, a) + "' has no cells");
    std::vector<double> d, m;
    for (auto i : idx) {
      d.push_back(grid.cells[i].density);
      m.push_back(grid.cells[i].weight);
    }
    const double k = urban_threshold(d, m, rural_fraction[static_cast<std::size_t>(a)]);
    for (auto i : idx) grid.cells[i].urban = grid.cells[i].density >= k;
  }
  return grid;
}

Grid ensure_area_representation(Grid grid, const ArealPartition& partition, const Grid& fine) {
  struct Acc {
    double mass = 0, mass_u = 0, sx = 0, sy = 0, sd = 0;
    long count = 0;
    int admin1 = -1, admin2 = -1;
  };
  for (Level level : kLevels) {
    std::vector<Acc> acc(static_cast<std::size_t>(partition.n_areas(level)));
    for (const auto& c : fine.cells) {
      const int a = c.area(level);
      if (a < 0) continue;
      auto& s = acc[static_cast<std::size_t>(a)];
      s.mass += c.weight;
      if (c.urban) s.mass_u += c.weight;
      s.sx += c.center.x;
      s.sy += c.center.y;
      s.sd += c.density;
      ++s.count;
      s.admin1 = c.admin1;
      if (s.admin2 < 0) s.admin2 = c.admin2;
    }
    std::vector<char> present(acc.size(), 0);
    for (const auto& c : grid.cells)
      if (c.counts_for(level) && c.area(level) >= 0) present[static_cast<std::size_t>(c.area(level))] = 1;
    for (std::size_t a = 0; a < acc.size(); ++a) {
      const auto& s = acc[a];
      if (present[a] || s.count == 0) continue;
      GridCell p;
      p.center = {s.sx / s.count, s.sy / s.count};
      p.density = s.sd / s.count;
      p.admin1 = s.admin1;
      p.admin2 = level == Level::Admin2Stratum ? static_cast<int>(a) / 2 : s.admin2;
      if (level == Level::Admin2) p.admin2 = static_cast<int>(a);
      p.urban = level == Level::Admin2Stratum ? (a % 2 == 1) : (s.mass_u * 2 >= s.mass && s.mass > 0);
      p.weight = p.density * s.count * fine.cell_area();
      p.lattice = grid.locate(p.center);
      p.levels = level_bit(level);
      grid.cells.push_back(p);
    }
  }
  return grid;
}

Grid aggregation_grid(const Grid& fine, double resolution) {
  POPAGG_REQUIRE(resolution > 0.0, "resolution must be positive");
  const double f = fine.resolution;
  if (std::abs(resolution - f) <= 1e-9 * f) return fine;

  Grid g;
  g.origin = fine.origin;
  g.resolution = resolution;
  if (resolution < f) {
    const int k = static_cast<int>(std::lround(f / resolution));
    POPAGG_REQUIRE(k >= 2 && std::abs(k * resolution - f) <= 1e-9 * f,
                   "finer aggregation resolution must divide the fine resolution");
    g.ncols = fine.ncols * k;
    g.nrows = fine.nrows * k;
    g.cells.reserve(fine.cells.size() * static_cast<std::size_t>(k * k));
    for (const auto& c : fine.cells) {
      const int r0 = c.lattice / fine.ncols * k;
      const int c0 = c.lattice % fine.ncols * k;
      for (int dr = 0; dr < k; ++dr)
        for (int dc = 0; dc < k; ++dc) {
          GridCell s = c;
          s.lattice = (r0 + dr) * g.ncols + (c0 + dc);
          s.center = g.lattice_center(s.lattice);
          s.weight = s.density * g.cell_area();
          g.cells.push_back(s);
        }
    }
    return g;
  }

  g.ncols = cells_along(fine.ncols * f, resolution);
  g.nrows = cells_along(fine.nrows * f, resolution);
  struct Piece {
    double mass = 0, mx = 0, my = 0, cx = 0, cy = 0;
    long count = 0;
    int admin1 = -1;
  };
  std::map<std::tuple<int, int, int>, Piece> pieces;
  for (const auto& c : fine.cells) {
    const int idx = g.locate(c.center);
    auto& p = pieces[{idx, c.admin2, c.urban ? 1 : 0}];
    p.mass += c.weight;
    p.mx += c.weight * c.center.x;
    p.my += c.weight * c.center.y;
    p.cx += c.center.x;
    p.cy += c.center.y;
    ++p.count;
    p.admin1 = c.admin1;
  }
  g.cells.reserve(pieces.size());
  for (const auto& [key, p] : pieces) {
    GridCell c;
    c.lattice = std::get<0>(key);
    c.admin2 = std::get<1>(key);
    c.urban = std::get<2>(key) == 1;
    c.admin1 = p.admin1;
    c.center = p.mass > 0 ? Point{p.mx / p.mass, p.my / p.mass} : Point{p.cx / p.count, p.cy / p.count};
    c.weight = p.mass;
    c.density = p.mass / g.cell_area();
    g.cells.push_back(c);
  }
  return g;
}

Grid restrict_to_admin1(const Grid& grid, int admin1) {
  Grid g = grid;
  g.cells.clear();
  for (const auto& c : grid.cells)
    if (c.admin1 == admin1) g.cells.push_back(c);
  return g;
}

}  // namespace popagg
