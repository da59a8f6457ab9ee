#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "ndgd/error.hpp"
#include "ndgd/random.hpp"
#include "ndgd/state.hpp"

namespace ndgd {

struct PowerIterationOptions {
  double tolerance = 1e-8;
  std::size_t max_iterations = 2'000'000;
  std::uint64_t seed = 0x5eed;
};

struct PowerIterationResult {
  double eigenvalue = 0.0;
  Vector eigenvector;
  std::size_t iterations = 0;
  double residual = 0.0;
};

namespace detail {

inline Vector random_unit(Eigen::Index dim, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Vector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = uniform01(rng) - 0.5;
  if (v.norm() == 0.0) v(0) = 1.0;
  return v.normalized();
}

// Dominant-magnitude eigenvalue estimate; only used to place the shift.
template <class Op>
double spectral_radius_estimate(Op&& apply, Eigen::Index dim, std::uint64_t seed) {
  Vector v = random_unit(dim, seed);
  double rho = 0.0;
  for (int it = 0; it < 200; ++it) {
    Vector w = apply(v);
    const double nw = w.norm();
    if (nw == 0.0) return rho;
    rho = std::max(rho, nw);
    v = w / nw;
  }
  return rho;
}

}  // namespace detail

// Smallest eigenvalue of a symmetric operator by power iteration on c*I - A,
// where c bounds the spectrum from above. Converges when the eigenpair
// residual, or the Aitken-extrapolated Rayleigh-quotient error, drops below
// tolerance * max(1, c). Throws RuntimeFailure when the iteration cap is hit.
template <class Op>
PowerIterationResult min_eigenvalue_shifted_power(Op&& apply, Eigen::Index dim,
                                                  const PowerIterationOptions& opts = {}) {
  if (dim <= 0) throw ValidationError("min_eigenvalue_shifted_power: empty operator");
  const double rho = detail::spectral_radius_estimate(apply, dim, opts.seed ^ 0xabcdefULL);
  const double shift = 1.05 * rho + 1e-12;
  const double scale = std::max(1.0, shift);
  const double target = opts.tolerance * scale;

  Vector v = detail::random_unit(dim, opts.seed);
  Vector av = apply(v);
  double theta = v.dot(av);
  double prev_delta = 0.0;

  PowerIterationResult out;
  for (std::size_t it = 1; it <= opts.max_iterations; ++it) {
    Vector w = shift * v - av;
    const double nw = w.norm();
    if (nw == 0.0) {
      out = {theta, v, it, 0.0};
      return out;
    }
    v = w / nw;
    av = apply(v);
    const double next = v.dot(av);
    const double residual = (av - next * v).norm();
    const double delta = std::abs(next - theta);
    theta = next;

    bool done = residual <= target;
    if (!done && prev_delta > 0.0 && delta > 0.0 && delta < prev_delta) {
      const double ratio = delta / prev_delta;
      const double extrapolated_error = delta * ratio / (1.0 - ratio);
      done = extrapolated_error <= 1e-3 * target && it > 50;
    }
    prev_delta = delta;
    if (done || delta == 0.0) {
      out.eigenvalue = theta;
      out.eigenvector = v;
      out.iterations = it;
      out.residual = residual;
      return out;
    }
  }
  throw RuntimeFailure("shifted power iteration did not converge within " +
                       std::to_string(opts.max_iterations) + " iterations");
}

inline double min_eigenvalue_dense(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw RuntimeFailure("dense eigensolver failed");
  return solver.eigenvalues()(0);
}

}  // namespace ndgd
