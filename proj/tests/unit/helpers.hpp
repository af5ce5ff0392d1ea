#pragma once

#include <vector>

#include "popagg/domain.hpp"
#include "popagg/spatial_grid.hpp"

namespace testing {

// 4 km × 2 km strip on a 1 km raster: Admin1 "W" (x < 2, one Admin2 "W.1") and Admin1 "E"
// (x ≥ 2, Admin2 "E.1" for y < 1 and "E.2" above). Density is 10 on the west half except the
// cell at (0.5, 0.5) which holds 50 (the only urban cell), and 1 on the east half.
inline popagg::Domain strip_domain(std::vector<double> rural_fraction = {0.3, 1.0}) {
  using namespace popagg;
  DensityRaster raster{{0, 0}, 1.0, 4, 2, {}};
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 4; ++i) raster.values.push_back(i < 2 ? (i == 0 && j == 0 ? 50.0 : 10.0) : 1.0);
  std::vector<int> labels;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 4; ++i) labels.push_back(i < 2 ? 0 : (j == 0 ? 1 : 2));
  ArealPartition partition({{"W", -1}, {"E", -1}}, {{"W.1", 0}, {"E.1", 1}, {"E.2", 1}}, {0, 0}, 1.0, 4, 2,
                           labels);
  return make_domain(raster, partition, rural_fraction);
}

}  // namespace testing
