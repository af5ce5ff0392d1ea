#pragma once

#include <vector>

namespace popagg {

// Probabilists' Gauss–Hermite rule: E[f(Z)] ≈ Σ w_i f(x_i) for Z ~ N(0,1).
class GaussHermite {
 public:
  explicit GaussHermite(int order);
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> nodes_, weights_;
};

}  // namespace popagg
