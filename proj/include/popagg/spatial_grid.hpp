#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace popagg {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

double distance(Point a, Point b);

struct Extent {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(Point p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
};

enum class Level : std::uint8_t { Admin1 = 0, Admin2 = 1, Admin2Stratum = 2 };
inline constexpr int kLevelCount = 3;
inline constexpr Level kLevels[kLevelCount] = {Level::Admin1, Level::Admin2, Level::Admin2Stratum};

std::string_view level_name(Level level);
Level parse_level(std::string_view name);

inline constexpr std::uint8_t level_bit(Level level) {
  return static_cast<std::uint8_t>(1u << static_cast<unsigned>(level));
}
inline constexpr std::uint8_t kAllLevels = 0b111;

// Admin2×stratum ids pack the stratum into the low bit.
inline constexpr int stratum_area(int admin2, bool urban) { return 2 * admin2 + (urban ? 1 : 0); }

struct GridCell {
  Point center;
  double density = 0.0;  // people per km²
  bool urban = false;
  int admin1 = -1;
  int admin2 = -1;
  double weight = 0.0;  // aggregation mass, density × cell area
  // Lattice cell this point belongs to (row-major index into the grid lattice).
  int lattice = -1;
  // Levels this point counts toward. Appended centroid points serve one level only.
  std::uint8_t levels = kAllLevels;

  bool stratum_urban() const { return urban; }
  int area(Level level) const;
  bool counts_for(Level level) const { return (levels & level_bit(level)) != 0; }
};

struct Grid {
  Point origin;            // lower-left corner of the lattice
  double resolution = 0.0;  // cell side (km)
  int ncols = 0;
  int nrows = 0;
  std::vector<GridCell> cells;

  double cell_area() const { return resolution * resolution; }
  Point lattice_center(int lattice_index) const;
  // Lattice index containing p, or -1 outside.
  int locate(Point p) const;
  double total_weight() const;
};

struct AreaInfo {
  std::string name;
  int parent = -1;  // Admin1 index for Admin2 areas
};

// Admin1/Admin2 areas plus a label raster (one Admin2 index per fine cell, -1 = outside).
class ArealPartition {
 public:
  ArealPartition() = default;
  ArealPartition(std::vector<AreaInfo> admin1, std::vector<AreaInfo> admin2, Point origin,
                 double resolution, int ncols, int nrows, std::vector<int> labels);

  const std::vector<AreaInfo>& admin1() const { return admin1_; }
  const std::vector<AreaInfo>& admin2() const { return admin2_; }
  int n_areas(Level level) const;
  std::string area_name(Level level, int area) const;
  int admin1_of(int admin2) const { return admin2_.at(static_cast<std::size_t>(admin2)).parent; }
  int find_admin1(std::string_view name) const;

  // Admin2 index at p, or -1.
  int admin2_at(Point p) const;
  Point raster_origin() const { return origin_; }
  double raster_resolution() const { return resolution_; }
  int raster_cols() const { return ncols_; }
  int raster_rows() const { return nrows_; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  std::vector<AreaInfo> admin1_;
  std::vector<AreaInfo> admin2_;
  Point origin_;
  double resolution_ = 0.0;
  int ncols_ = 0;
  int nrows_ = 0;
  std::vector<int> labels_;
};

// Densities on a regular raster; values row-major with row 0 at the bottom.
struct DensityRaster {
  Point origin;
  double resolution = 0.0;
  int ncols = 0;
  int nrows = 0;
  std::vector<double> values;
};

using DensityFunction = std::function<double(Point)>;

// Raster must match the requested lattice exactly; no resampling.
Grid build_grid(const Extent& extent, double resolution, const DensityRaster& density);
Grid build_grid(const Extent& extent, double resolution, const DensityFunction& density);

// Labels each cell with Admin1/Admin2 by looking up its center; cells outside every area
// are dropped.
Grid assign_areas(Grid grid, const ArealPartition& partition);

// Density threshold per Admin1 so the rural mass share is the smallest attainable value
// ≥ P_RUR. rural_fraction is indexed by Admin1.
Grid classify_urban(Grid grid, const ArealPartition& partition,
                    const std::vector<double>& rural_fraction);

// Threshold K for one set of (density, mass) pairs; +inf means every cell is rural.
double urban_threshold(const std::vector<double>& density, const std::vector<double>& mass,
                       double rural_fraction);

// Appends one centroid point for every (level, area) without a grid point. Area geometry and
// mean density come from the classified fine grid.
Grid ensure_area_representation(Grid grid, const ArealPartition& partition, const Grid& fine);

// Aggregation grid at any resolution derived from the classified fine grid. Coarser lattices
// split each cell into one piece per (Admin2, stratum) of the fine cells it covers, with exact
// mass and mass centroid; finer lattices subdivide fine cells, which must be an integer ratio.
Grid aggregation_grid(const Grid& fine, double resolution);

// Restricts a grid to the cells of one Admin1 area.
Grid restrict_to_admin1(const Grid& grid, int admin1);

}  // namespace popagg
