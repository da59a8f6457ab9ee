#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "ndgd/error.hpp"
#include "ndgd/random.hpp"
#include "ndgd/state.hpp"

namespace ndgd {

enum class NoiseKind { None, Sphere, Gaussian };

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::Sphere: return "sphere";
    case NoiseKind::Gaussian: return "gaussian";
  }
  return "unknown";
}

// Perturbation law for the noisy update. `scale` is the sphere radius r or
// the per-coordinate standard deviation, depending on `kind`.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::None;
  double scale = 0.0;
  std::optional<double> epsilon;
  double safety_factor = 0.5;

  static NoiseSpec none() { return {}; }
  static NoiseSpec sphere(double radius) { return {NoiseKind::Sphere, radius, std::nullopt, 0.5}; }
  static NoiseSpec gaussian(double stddev) { return {NoiseKind::Gaussian, stddev, std::nullopt, 0.5}; }

  // Per-coordinate variance: r^2/n for the sphere, sigma^2 for Gaussian.
  double coordinate_variance(std::size_t n) const {
    switch (kind) {
      case NoiseKind::None: return 0.0;
      case NoiseKind::Sphere: return scale * scale / static_cast<double>(n);
      case NoiseKind::Gaussian: return scale * scale;
    }
    return 0.0;
  }
};

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + " must be positive");
}

// lambda_min(W) eps^2 / (m n)
inline double sigma_max_sq(double epsilon, std::size_t m, std::size_t n, double lambda_min_w) {
  require_positive(epsilon, "sigma_max_sq: epsilon");
  require_positive(lambda_min_w, "sigma_max_sq: lambda_min(W)");
  if (m == 0 || n == 0) throw ValidationError("sigma_max_sq: m and n must be positive");
  return lambda_min_w * epsilon * epsilon / static_cast<double>(m * n);
}

// Sphere radius whose per-coordinate variance r^2/n equals safety * sigma_max^2.
inline double sphere_radius_for(double epsilon, std::size_t m, std::size_t n, double lambda_min_w,
                                double safety_factor) {
  if (!(safety_factor > 0.0 && safety_factor <= 1.0)) {
    throw ValidationError("sphere_radius_for: safety factor must lie in (0, 1]");
  }
  return std::sqrt(safety_factor * static_cast<double>(n) * sigma_max_sq(epsilon, m, n, lambda_min_w));
}

inline void validate_noise(const NoiseSpec& spec, std::size_t m, std::size_t n, double lambda_min_w) {
  if (!(spec.safety_factor > 0.0 && spec.safety_factor <= 1.0)) {
    throw ValidationError("noise: safety_factor must lie in (0, 1]");
  }
  if (spec.kind == NoiseKind::None) return;
  require_positive(spec.scale, spec.kind == NoiseKind::Sphere ? "noise: sphere radius" : "noise: gaussian std");
  if (spec.epsilon) {
    const double budget = spec.safety_factor * sigma_max_sq(*spec.epsilon, m, n, lambda_min_w);
    const double var = spec.coordinate_variance(n);
    // relative slack for radii computed as sqrt(budget * n)
    if (var > budget * (1.0 + 1e-12)) {
      throw ValidationError("noise: per-coordinate variance " + std::to_string(var) + " exceeds budget " +
                            std::to_string(budget) + " (safety_factor * lambda_min(W) eps^2 / (m n))");
    }
  }
}

// Deterministic per-agent stream. A draw depends only on
// (master_seed, agent_index, iteration), never on call order.
class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::size_t agent_index)
      : master_seed_(master_seed), agent_index_(agent_index), key_(hash_combine(master_seed, agent_index)) {}

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::size_t agent_index() const noexcept { return agent_index_; }

  SplitMix64 engine_for(std::uint64_t iteration) const noexcept { return SplitMix64(hash_combine(key_, iteration)); }

 private:
  std::uint64_t master_seed_;
  std::size_t agent_index_;
  std::uint64_t key_;
};

namespace detail {

inline Vector standard_normal(SplitMix64& rng, std::size_t n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(static_cast<Eigen::Index>(n));
  for (auto& v : z) v = normal(rng);
  return z;
}

}  // namespace detail

inline constexpr int kSphereRedrawLimit = 64;

// One perturbation xi in R^n for the given agent stream and iteration.
inline Vector sample(const NoiseSpec& spec, const RandomStream& stream, std::uint64_t iteration, std::size_t n) {
  if (spec.kind == NoiseKind::None) return Vector::Zero(static_cast<Eigen::Index>(n));
  SplitMix64 rng = stream.engine_for(iteration);
  if (spec.kind == NoiseKind::Gaussian) return spec.scale * detail::standard_normal(rng, n);
  for (int attempt = 0; attempt < kSphereRedrawLimit; ++attempt) {
    Vector z = detail::standard_normal(rng, n);
    const double norm = z.norm();
    if (norm > 0.0 && std::isfinite(norm)) return z * (spec.scale / norm);
  }
  throw RuntimeFailure("noise: degenerate Gaussian draw for sphere sampling");
}

}  // namespace ndgd
