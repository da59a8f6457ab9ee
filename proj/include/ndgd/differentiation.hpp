#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "ndgd/state.hpp"

namespace ndgd {

// Central-difference step for coordinate value xj: max(1,|xj|) * eps^(1/3).
inline double central_difference_step(double xj) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return std::max(1.0, std::abs(xj)) * base;
}

template <class ValueFn>
Vector fd_gradient(ValueFn&& value, const Vector& x) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = central_difference_step(x(j));
    probe(j) = x(j) + h;
    const double up = value(probe);
    probe(j) = x(j) - h;
    const double down = value(probe);
    probe(j) = x(j);
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

// Jacobian of a vector field by central differences, column j = d/dx_j.
template <class VectorFn>
Matrix fd_jacobian(VectorFn&& field, const Vector& x) {
  const Eigen::Index n = x.size();
  Matrix jac(n, n);
  Vector probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = central_difference_step(x(j));
    probe(j) = x(j) + h;
    const Vector up = field(probe);
    probe(j) = x(j) - h;
    const Vector down = field(probe);
    probe(j) = x(j);
    jac.col(j) = (up - down) / (2.0 * h);
  }
  return jac;
}

inline Matrix symmetrized(const Matrix& h) { return 0.5 * (h + h.transpose()); }

// ||a - b|| / max(floor, ||b||)
inline double relative_error(const Vector& a, const Vector& b, double floor = 1.0) {
  return (a - b).norm() / std::max(floor, b.norm());
}

}  // namespace ndgd
