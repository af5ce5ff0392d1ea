#pragma once

#include <cstdint>
#include <vector>

#include "popagg/spatial_grid.hpp"

namespace popagg {

// A classified 1 km style frame grid with its partition.
struct Domain {
  Extent extent;
  ArealPartition partition;
  Grid fine;
  std::vector<double> rural_fraction;  // per Admin1
};

// Synthetic country: a square capital in the lower-left corner cut into
// capital_split² Admin2 areas, and three further Admin1 areas (the remaining L-shape split
// along the capital's edges) cut into other_split² Admin2 areas each.
struct DeskDomainOptions {
  double extent_km = 100.0;
  double fine_resolution = 1.0;
  double capital_km = 20.0;
  int capital_split = 4;
  int other_split = 2;
  std::vector<double> rural_fraction = {0.0, 0.65, 0.7, 0.75};
  double base_density = 100.0;      // people/km² before modulation
  double field_sd = 0.8;            // log-density random field
  double field_lengthscale = 10.0;  // km
  double core_amplitude = 30.0;
  double core_width = 3.0;  // km
  double capital_factor = 8.0;
  std::uint64_t seed = 1;
};

Domain make_desk_domain(const DeskDomainOptions& options = {});

// Builds the fine grid from a density raster and classifies it.
Domain make_domain(const DensityRaster& density, const ArealPartition& partition,
                   const std::vector<double>& rural_fraction);

}  // namespace popagg
