#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ndgd/distance.hpp"
#include "ndgd/dynamics.hpp"
#include "ndgd/error.hpp"
#include "ndgd/noise.hpp"
#include "ndgd/objective.hpp"

namespace ndgd {

inline constexpr double kReportTolerance = 1e-12;
inline constexpr double kStationarityTolerance = 1e-8;

// measured <= bound (+ tolerance). For lower bounds such as
// lambda_min >= -b the measured side is stored negated.
struct BoundReport {
  std::string quantity;
  double measured = 0.0;
  double bound = 0.0;
  bool available = true;
  bool satisfied = false;
  double slack = 0.0;
  // ||grad Q_a|| at the evaluation point; the bounds assume it is zero.
  double residual_grad_norm = 0.0;
  std::string note;
};

namespace detail {

inline BoundReport make_report(std::string quantity, double measured, double bound, double residual) {
  BoundReport r;
  r.quantity = std::move(quantity);
  r.measured = measured;
  r.bound = bound;
  r.slack = bound - measured;
  r.satisfied = measured <= bound + kReportTolerance;
  r.residual_grad_norm = residual;
  if (residual > kStationarityTolerance) r.note = "point is not stationary for Q_alpha to 1e-8";
  return r;
}

inline BoundReport unavailable_report(std::string quantity, double measured, double residual) {
  BoundReport r;
  r.quantity = std::move(quantity);
  r.measured = measured;
  r.bound = std::numeric_limits<double>::quiet_NaN();
  r.slack = std::numeric_limits<double>::quiet_NaN();
  r.available = false;
  r.satisfied = false;
  r.residual_grad_norm = residual;
  r.note = "Lipschitz metadata unavailable";
  return r;
}

inline double spectral_gap(const Problem& p) {
  const double gap = 1.0 - p.mixing().spectral().lambda_2;
  if (!(gap > 0.0)) throw ValidationError("diagnostics: lambda_2 >= 1 (graph not connected)");
  return gap;
}

}  // namespace detail

// Consensus bound at a stationary point of Q_a:
//   ||x_i - mean|| <= a ||grad F(x)|| / (1 - lambda_2)   for every agent.
inline std::vector<BoundReport> lemma1_check(const Problem& p, double alpha, const StackedState& x) {
  require_step(alpha, "lemma1_check");
  p.require_state(x, "lemma1_check");
  const double residual = q_grad(p, alpha, x).norm();
  const double grad_f = F_grad(p, x).norm();
  const double bound = alpha * grad_f / detail::spectral_gap(p);
  const Vector mean = consensus_average(x);
  std::vector<BoundReport> out;
  for (std::size_t i = 0; i < x.num_agents(); ++i) {
    out.push_back(detail::make_report("consensus distance agent " + std::to_string(i + 1), (x.block(i) - mean).norm(),
                                      bound, residual));
  }
  return out;
}

// ||grad f(mean)|| <= a L_F^g m sqrt(m) ||grad F(x)|| / (1 - lambda_2)
inline BoundReport lemma2_check(const Problem& p, double alpha, const StackedState& x) {
  require_step(alpha, "lemma2_check");
  p.require_state(x, "lemma2_check");
  const double residual = q_grad(p, alpha, x).norm();
  const Vector mean = consensus_average(x);
  const double measured = f_grad(p, mean).norm();
  const auto lip = lipschitz_aggregate(p, alpha);
  const char* name = "grad norm of f at mean";
  if (!lip.F_grad) return detail::unavailable_report(name, measured, residual);
  const double m = static_cast<double>(p.num_agents());
  const double bound = alpha * *lip.F_grad * m * std::sqrt(m) * F_grad(p, x).norm() / detail::spectral_gap(p);
  return detail::make_report(name, measured, bound, residual);
}

// lambda_min(hess f(mean)) >= -a L_F^H m^2 ||grad F(x)|| / (1 - lambda_2),
// reported as -lambda_min <= bound.
inline BoundReport lemma3_check(const Problem& p, double alpha, const StackedState& x) {
  require_step(alpha, "lemma3_check");
  p.require_state(x, "lemma3_check");
  const double residual = q_grad(p, alpha, x).norm();
  const Vector mean = consensus_average(x);
  const double measured = -min_eigenvalue_dense(f_hess(p, mean));
  const auto lip = lipschitz_aggregate(p, alpha);
  const char* name = "negated min Hessian eigenvalue of f at mean";
  if (!lip.F_hess) return detail::unavailable_report(name, measured, residual);
  const double m = static_cast<double>(p.num_agents());
  const double bound = alpha * *lip.F_hess * m * m * F_grad(p, x).norm() / detail::spectral_gap(p);
  return detail::make_report(name, measured, bound, residual);
}

// The two closed-form terms of the step-size cap; the remaining term has no
// constructive value and is not computed.
struct AlphaCaps {
  double cap_sqrt2 = 0.0;
  double cap_spectral = 0.0;
  double min() const { return std::min(cap_sqrt2, cap_spectral); }
};

inline AlphaCaps computable_alpha_caps(const Problem& p, double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw ValidationError("computable_alpha_caps: zeta must lie in (0, 1)");
  double lg = 0.0;
  for (const auto& o : p.objectives()) {
    if (!o.lipschitz_grad()) throw ValidationError("computable_alpha_caps: Lipschitz gradient metadata unavailable");
    lg = std::max(lg, *o.lipschitz_grad());
  }
  if (!(lg > 0.0)) throw ValidationError("computable_alpha_caps: L_F^g must be positive");
  AlphaCaps caps;
  caps.cap_sqrt2 = (std::sqrt(2.0) - 1.0) / lg;
  caps.cap_spectral = p.mixing().spectral().lambda_min / (lg * std::max(1.0, std::log(1.0 / zeta)));
  return caps;
}

// ---------------------------------------------------------------------------
// Regularity sets

struct RegularityParams {
  double epsilon = 0.0;
  double gamma = 0.0;
  double mu = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
};

inline void validate_regularity(const Problem& p, const RegularityParams& r) {
  for (auto [v, name] : {std::pair{r.epsilon, "epsilon"}, std::pair{r.gamma, "gamma"}, std::pair{r.mu, "mu"},
                         std::pair{r.delta, "delta"}, std::pair{r.alpha, "alpha"}}) {
    if (!(v > 0.0)) throw ValidationError(std::string("regularity params: ") + name + " must be positive");
  }
  const auto lip = lipschitz_aggregate(p, r.alpha);
  if (lip.F_grad && (r.gamma > *lip.F_grad || r.mu > *lip.F_grad)) {
    throw ValidationError("regularity params: gamma and mu must not exceed L_F^g");
  }
}

struct RegionMembership {
  bool in_I1 = false;
  bool in_I2 = false;
  // Lambda >= mu, and within delta of a listed minimizer when a list is given.
  bool in_I3_partial = false;
  double grad_norm = 0.0;
  double min_hess_eig = 0.0;
  std::optional<double> dist_to_minimizers;
};

inline RegionMembership region_membership(const Problem& p, const RegularityParams& params, const StackedState& x,
                                          const std::vector<StackedState>& known_minimizers = {}) {
  validate_regularity(p, params);
  RegionMembership out;
  out.grad_norm = q_grad(p, params.alpha, x).norm();
  out.min_hess_eig = q_hess_min_eig(p, params.alpha, x);
  out.in_I1 = out.grad_norm >= params.epsilon;
  out.in_I2 = out.min_hess_eig <= -params.gamma;
  out.in_I3_partial = out.min_hess_eig >= params.mu;
  if (!known_minimizers.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : known_minimizers) {
      require_same_shape(x, m, "region_membership");
      best = std::min(best, (x.flat() - m.flat()).norm());
    }
    out.dist_to_minimizers = best;
    out.in_I3_partial = out.in_I3_partial && best <= params.delta;
  }
  return out;
}

struct CoverageSummary {
  std::size_t probes = 0;
  std::size_t covered = 0;
  std::size_t in_I1 = 0;
  std::size_t in_I2 = 0;
  std::size_t in_I3_partial = 0;
};

inline CoverageSummary coverage_probe(const Problem& p, const RegularityParams& params,
                                      const std::vector<StackedState>& probes,
                                      const std::vector<StackedState>& known_minimizers = {}) {
  CoverageSummary s;
  for (const auto& x : probes) {
    const auto r = region_membership(p, params, x, known_minimizers);
    ++s.probes;
    s.in_I1 += r.in_I1;
    s.in_I2 += r.in_I2;
    s.in_I3_partial += r.in_I3_partial;
    s.covered += (r.in_I1 || r.in_I2 || r.in_I3_partial);
  }
  return s;
}

// ---------------------------------------------------------------------------
// One-step expected descent of the noisy update

struct DescentEstimate {
  double mean_delta_q = 0.0;
  double std_err = 0.0;
  // -(lambda_min(W)/2) a m n sigma^2
  double bound = 0.0;
  double deterministic_delta_q = 0.0;
  double coordinate_variance = 0.0;
  std::size_t samples = 0;
};

inline DescentEstimate lemma5_descent_mc(const Problem& p, double alpha, const StackedState& x, const NoiseSpec& noise,
                                         double epsilon, std::size_t num_samples, std::uint64_t seed = 1) {
  require_step(alpha, "lemma5_descent_mc");
  p.require_state(x, "lemma5_descent_mc");
  if (num_samples == 0) throw ValidationError("lemma5_descent_mc: need at least one sample");
  require_positive(epsilon, "lemma5_descent_mc: epsilon");
  const double grad_norm = q_grad(p, alpha, x).norm();
  if (grad_norm < epsilon) {
    throw ValidationError("lemma5_descent_mc: ||grad Q_alpha|| = " + std::to_string(grad_norm) +
                          " is below epsilon = " + std::to_string(epsilon) + "; the descent hypothesis does not hold");
  }
  const std::size_t m = p.num_agents();
  const std::size_t n = p.dim();
  validate_noise(noise, m, n, p.mixing().spectral().lambda_min);

  const double q0 = q_value(p, alpha, x);
  DescentEstimate est;
  est.samples = num_samples;
  est.coordinate_variance = noise.coordinate_variance(n);
  est.bound = -0.5 * p.mixing().spectral().lambda_min * alpha * static_cast<double>(m * n) * est.coordinate_variance;
  est.deterministic_delta_q = q_value(p, alpha, dgd_step(p, alpha, x)) - q0;

  // Welford accumulation
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < num_samples; ++s) {
    const double dq = q_value(p, alpha, ndgd_step(p, alpha, x, noise, seed, s)) - q0;
    const double d = dq - mean;
    mean += d / static_cast<double>(s + 1);
    m2 += d * (dq - mean);
  }
  est.mean_delta_q = mean;
  est.std_err = num_samples > 1 ? std::sqrt(m2 / static_cast<double>(num_samples - 1) / static_cast<double>(num_samples)) : 0.0;
  return est;
}

// ---------------------------------------------------------------------------
// Escape statistics

// First recorded iteration whose consensus average is farther than `radius`
// from `center`.
inline std::optional<std::size_t> escape_iteration(const Trajectory& traj, const Vector& center, double radius) {
  require_positive(radius, "escape_iteration: radius");
  for (const auto& r : traj.records) {
    if (r.mean.size() != center.size()) throw ValidationError("escape_iteration: center dimension mismatch");
    if ((r.mean - center).norm() > radius) return r.iteration;
  }
  return std::nullopt;
}

// Median of a nonempty list; the mean of the middle pair for even sizes.
inline double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t h = values.size() / 2;
  return values.size() % 2 == 1 ? values[h] : 0.5 * (values[h - 1] + values[h]);
}

}  // namespace ndgd
