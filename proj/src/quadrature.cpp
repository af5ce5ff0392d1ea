#include "popagg/quadrature.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "popagg/error.hpp"

namespace popagg {

GaussHermite::GaussHermite(int order) {
  POPAGG_REQUIRE(order >= 1, "quadrature order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int i = 1; i < order; ++i) jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  nodes_.resize(static_cast<std::size_t>(order));
  weights_.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    nodes_[static_cast<std::size_t>(i)] = eig.eigenvalues()[i];
    weights_[static_cast<std::size_t>(i)] = eig.eigenvectors()(0, i) * eig.eigenvectors()(0, i);
  }
  // Exact symmetry about 0.
  for (int i = 0; i < order / 2; ++i) {
    const auto a = static_cast<std::size_t>(i), b = static_cast<std::size_t>(order - 1 - i);
    const double x = 0.5 * (nodes_[b] - nodes_[a]);
    const double w = 0.5 * (weights_[a] + weights_[b]);
    nodes_[a] = -x;
    nodes_[b] = x;
    weights_[a] = weights_[b] = w;
  }
  if (order % 2) nodes_[static_cast<std::size_t>(order / 2)] = 0.0;
}

}  // namespace popagg
