#pragma once

#include <string>

#include "ndgd/error.hpp"
#include "ndgd/graph.hpp"
#include "ndgd/state.hpp"

namespace ndgd {

// Lazy Metropolis-style weights: W_ij = beta / deg_max on edges and
// W_ii = 1 - sum_{j != i} W_ij. With beta in (0, 0.5) every row is strictly
// diagonally dominant.
inline Matrix generate_lazy_metropolis(const NetworkGraph& g, double beta) {
  if (!(beta > 0.0 && beta < 0.5)) throw ValidationError("lazy_metropolis: beta must lie in (0, 0.5)");
  if (!is_connected(g)) throw ValidationError("lazy_metropolis: graph is not connected");
  const auto m = static_cast<Eigen::Index>(g.num_agents());
  Matrix w = Matrix::Zero(m, m);
  const std::size_t dmax = g.max_degree();
  if (dmax > 0) {
    const double weight = beta / static_cast<double>(dmax);
    for (auto [a, b] : g.edges()) {
      w(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = weight;
      w(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = weight;
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) w(i, i) = 1.0 - (w.row(i).sum() - w(i, i));
  return w;
}

}  // namespace ndgd
