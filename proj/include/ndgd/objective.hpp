#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ndgd/differentiation.hpp"
#include "ndgd/error.hpp"
#include "ndgd/mixing.hpp"
#include "ndgd/random.hpp"
#include "ndgd/spectral.hpp"
#include "ndgd/state.hpp"

namespace ndgd {

// ---------------------------------------------------------------------------
// Polynomials

struct Monomial {
  std::vector<int> exponents;
  double coefficient = 0.0;
};

namespace detail {

inline double ipow(double x, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

// d^|d| / dx^d of x^e, evaluated as (falling factorial) * x^(e-d).
inline double falling(int e, int d) {
  double r = 1.0;
  for (int k = 0; k < d; ++k) r *= static_cast<double>(e - k);
  return r;
}

}  // namespace detail

// Sum of monomials with term-wise analytic derivatives.
class Polynomial {
 public:
  Polynomial() = default;

  Polynomial(std::size_t dim, std::vector<Monomial> terms) : dim_(dim), terms_(std::move(terms)) {
    if (dim_ == 0) throw ValidationError("polynomial: dimension must be positive");
    for (const auto& t : terms_) {
      if (t.exponents.size() != dim_) {
        throw ValidationError("polynomial: monomial has " + std::to_string(t.exponents.size()) +
                              " exponents, expected " + std::to_string(dim_));
      }
      for (int e : t.exponents) {
        if (e < 0) throw ValidationError("polynomial: negative exponent");
      }
      if (!std::isfinite(t.coefficient)) throw ValidationError("polynomial: non-finite coefficient");
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }

  double value(const Vector& x) const {
    double total = 0.0;
    for (const auto& t : terms_) total += t.coefficient * derivative_of(t, {}, x);
    return total;
  }

  Vector gradient(const Vector& x) const {
    Vector g = Vector::Zero(static_cast<Eigen::Index>(dim_));
    std::vector<int> d(dim_, 0);
    for (std::size_t j = 0; j < dim_; ++j) {
      d[j] = 1;
      for (const auto& t : terms_) g(j) += t.coefficient * derivative_of(t, d, x);
      d[j] = 0;
    }
    return g;
  }

  Matrix hessian(const Vector& x) const {
    Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    std::vector<int> d(dim_, 0);
    for (std::size_t j = 0; j < dim_; ++j) {
      for (std::size_t l = j; l < dim_; ++l) {
        ++d[j];
        ++d[l];
        double s = 0.0;
        for (const auto& t : terms_) s += t.coefficient * derivative_of(t, d, x);
        h(j, l) = s;
        h(l, j) = s;
        --d[j];
        --d[l];
      }
    }
    return h;
  }

  // Upper bounds over the box |x_j| <= radius on the Frobenius norms of the
  // Hessian and of the third-derivative tensor. These bound the local
  // Lipschitz constants of the gradient and Hessian on that box.
  std::pair<double, double> derivative_bounds_on_box(double radius) const {
    if (!(radius > 0.0)) throw ValidationError("polynomial: box radius must be positive");
    const std::size_t n = dim_;
    std::vector<int> d(n, 0);
    double hess_sq = 0.0;
    double third_sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t l = 0; l < n; ++l) {
        ++d[j];
        ++d[l];
        const double b2 = abs_bound(d, radius);
        hess_sq += b2 * b2;
        for (std::size_t p = 0; p < n; ++p) {
          ++d[p];
          const double b3 = abs_bound(d, radius);
          third_sq += b3 * b3;
          --d[p];
        }
        --d[j];
        --d[l];
      }
    }
    return {std::sqrt(hess_sq), std::sqrt(third_sq)};
  }

 private:
  double derivative_of(const Monomial& t, const std::vector<int>& d, const Vector& x) const {
    double r = 1.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const int e = t.exponents[k];
      const int dk = d.empty() ? 0 : d[k];
      if (dk > e) return 0.0;
      r *= detail::falling(e, dk) * detail::ipow(x(static_cast<Eigen::Index>(k)), e - dk);
    }
    return r;
  }

  double abs_bound(const std::vector<int>& d, double radius) const {
    double total = 0.0;
    for (const auto& t : terms_) {
      double r = std::abs(t.coefficient);
      for (std::size_t k = 0; k < dim_ && r != 0.0; ++k) {
        const int e = t.exponents[k];
        if (d[k] > e) {
          r = 0.0;
          break;
        }
        r *= detail::falling(e, d[k]) * detail::ipow(radius, e - d[k]);
      }
      total += r;
    }
    return total;
  }

  std::size_t dim_ = 0;
  std::vector<Monomial> terms_;
};

// ---------------------------------------------------------------------------
// Local objectives

class LocalObjective {
 public:
  using ValueFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using HessianFn = std::function<Matrix(const Vector&)>;

  LocalObjective() = default;

  // Missing gradient/Hessian callbacks fall back to central differences.
  // A supplied gradient is checked against finite differences of the value
  // on a fixed probe set and rejected if the relative error exceeds 1e-5.
  LocalObjective(std::size_t dim, ValueFn value, GradientFn gradient = {}, HessianFn hessian = {},
                 std::optional<double> lipschitz_grad = std::nullopt,
                 std::optional<double> lipschitz_hess = std::nullopt)
      : dim_(dim),
        value_(std::move(value)),
        gradient_(std::move(gradient)),
        hessian_(std::move(hessian)),
        lipschitz_grad_(lipschitz_grad),
        lipschitz_hess_(lipschitz_hess) {
    if (dim_ == 0) throw ValidationError("objective: dimension must be positive");
    if (!value_) throw ValidationError("objective: value callback is required");
    check_lipschitz(lipschitz_grad_, "gradient");
    check_lipschitz(lipschitz_hess_, "Hessian");
    if (gradient_) {
      const double err = max_gradient_error(probe_points(dim_));
      if (!(err <= kGradientCheckTolerance)) {
        throw ValidationError("objective: analytic gradient disagrees with finite differences (relative error " +
                              std::to_string(err) + ")");
      }
    }
  }

  static LocalObjective from_polynomial(Polynomial poly, std::optional<double> lipschitz_grad = std::nullopt,
                                        std::optional<double> lipschitz_hess = std::nullopt) {
    auto shared = std::make_shared<const Polynomial>(std::move(poly));
    LocalObjective obj(
        shared->dim(), [shared](const Vector& x) { return shared->value(x); },
        [shared](const Vector& x) { return shared->gradient(x); },
        [shared](const Vector& x) { return shared->hessian(x); }, lipschitz_grad, lipschitz_hess);
    obj.polynomial_ = shared;
    return obj;
  }

  std::size_t dim() const noexcept { return dim_; }

  double value(const Vector& x) const { return value_(x); }

  Vector gradient(const Vector& x) const {
    if (gradient_) return gradient_(x);
    return fd_gradient(value_, x);
  }

  // Always symmetrized.
  Matrix hessian(const Vector& x) const {
    if (hessian_) return symmetrized(hessian_(x));
    return symmetrized(fd_jacobian([this](const Vector& y) { return gradient(y); }, x));
  }

  bool has_analytic_gradient() const noexcept { return static_cast<bool>(gradient_); }
  bool has_analytic_hessian() const noexcept { return static_cast<bool>(hessian_); }

  const std::optional<double>& lipschitz_grad() const noexcept { return lipschitz_grad_; }
  const std::optional<double>& lipschitz_hess() const noexcept { return lipschitz_hess_; }

  void set_lipschitz(std::optional<double> grad, std::optional<double> hess) {
    check_lipschitz(grad, "gradient");
    check_lipschitz(hess, "Hessian");
    lipschitz_grad_ = grad;
    lipschitz_hess_ = hess;
  }

  const Polynomial* polynomial() const noexcept { return polynomial_.get(); }

  double max_gradient_error(const std::vector<Vector>& probes) const {
    double worst = 0.0;
    for (const auto& p : probes) worst = std::max(worst, relative_error(gradient(p), fd_gradient(value_, p)));
    return worst;
  }

  // Origin, +-0.5 e_j and a few pseudo-random points in [-1, 1]^n.
  static std::vector<Vector> probe_points(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    std::vector<Vector> probes;
    probes.push_back(Vector::Zero(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector e = Vector::Zero(n);
      e(j) = 0.5;
      probes.push_back(e);
      probes.push_back(-e);
    }
    SplitMix64 rng(0x0b1ec7ULL + dim);
    for (int k = 0; k < 4; ++k) {
      Vector v(n);
      for (Eigen::Index j = 0; j < n; ++j) v(j) = 2.0 * uniform01(rng) - 1.0;
      probes.push_back(v);
    }
    return probes;
  }

  static constexpr double kGradientCheckTolerance = 1e-5;

 private:
  static void check_lipschitz(const std::optional<double>& l, const char* what) {
    if (l && !(*l >= 0.0 && std::isfinite(*l))) {
      throw ValidationError(std::string("objective: Lipschitz constant of the ") + what + " must be finite and >= 0");
    }
  }

  std::size_t dim_ = 0;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
  std::optional<double> lipschitz_grad_;
  std::optional<double> lipschitz_hess_;
  std::shared_ptr<const Polynomial> polynomial_;
};

// ---------------------------------------------------------------------------
// Problem: m local objectives over a validated mixing matrix.

class Problem {
 public:
  Problem(std::vector<LocalObjective> objectives, MixingMatrix mixing)
      : objectives_(std::move(objectives)), mixing_(std::move(mixing)) {
    if (objectives_.empty()) throw ValidationError("problem: at least one objective is required");
    if (objectives_.size() != mixing_.num_agents()) {
      throw ValidationError("problem: " + std::to_string(objectives_.size()) + " objectives but " +
                            std::to_string(mixing_.num_agents()) + " agents");
    }
    dim_ = objectives_.front().dim();
    for (const auto& o : objectives_) {
      if (o.dim() != dim_) throw ValidationError("problem: objectives disagree on dimension");
    }
  }

  std::size_t num_agents() const noexcept { return objectives_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<LocalObjective>& objectives() const noexcept { return objectives_; }
  std::vector<LocalObjective>& objectives() noexcept { return objectives_; }
  const LocalObjective& objective(std::size_t i) const { return objectives_.at(i); }
  const MixingMatrix& mixing() const noexcept { return mixing_; }
  const NetworkGraph& graph() const noexcept { return mixing_.graph(); }

  void require_point(const Vector& x, const char* where) const {
    if (static_cast<std::size_t>(x.size()) != dim_) {
      throw ValidationError(std::string(where) + ": point has dimension " + std::to_string(x.size()) +
                            ", expected " + std::to_string(dim_));
    }
  }

  void require_state(const StackedState& x, const char* where) const {
    if (x.num_agents() != num_agents() || x.dim() != dim_) {
      throw ValidationError(std::string(where) + ": state is " + std::to_string(x.num_agents()) + "x" +
                            std::to_string(x.dim()) + ", expected " + std::to_string(num_agents()) + "x" +
                            std::to_string(dim_));
    }
  }

 private:
  std::vector<LocalObjective> objectives_;
  MixingMatrix mixing_;
  std::size_t dim_ = 0;
};

// Global f = sum_i f_i at a single point.
inline double f_value(const Problem& p, const Vector& x) {
  p.require_point(x, "f_value");
  double total = 0.0;
  for (const auto& o : p.objectives()) total += o.value(x);
  return total;
}

inline Vector f_grad(const Problem& p, const Vector& x) {
  p.require_point(x, "f_grad");
  Vector g = Vector::Zero(static_cast<Eigen::Index>(p.dim()));
  for (const auto& o : p.objectives()) g += o.gradient(x);
  return g;
}

inline Matrix f_hess(const Problem& p, const Vector& x) {
  p.require_point(x, "f_hess");
  const auto n = static_cast<Eigen::Index>(p.dim());
  Matrix h = Matrix::Zero(n, n);
  for (const auto& o : p.objectives()) h += o.hessian(x);
  return h;
}

// Stacked F(x) = sum_i f_i(x_i).
inline double F_value(const Problem& p, const StackedState& x) {
  p.require_state(x, "F_value");
  double total = 0.0;
  for (std::size_t i = 0; i < p.num_agents(); ++i) total += p.objective(i).value(x.block(i));
  return total;
}

inline StackedState F_grad(const Problem& p, const StackedState& x) {
  p.require_state(x, "F_grad");
  StackedState g(x.num_agents(), x.dim());
  for (std::size_t i = 0; i < p.num_agents(); ++i) g.block(i) = p.objective(i).gradient(x.block(i));
  return g;
}

inline void require_step(double alpha, const char* where) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ValidationError(std::string(where) + ": step size alpha must be positive");
  }
}

// (1/2a) x^T (I - W (x) I) x
inline double consensus_penalty(const Problem& p, double alpha, const StackedState& x) {
  require_step(alpha, "consensus_penalty");
  const StackedState wx = apply_lifted(p.mixing(), x);
  return (x.flat().dot(x.flat()) - x.flat().dot(wx.flat())) / (2.0 * alpha);
}

// Q_a(x) = F(x) + (1/2a) ||x||^2_{I - W (x) I}
inline double q_value(const Problem& p, double alpha, const StackedState& x) {
  require_step(alpha, "q_value");
  return F_value(p, x) + consensus_penalty(p, alpha, x);
}

inline StackedState q_grad(const Problem& p, double alpha, const StackedState& x) {
  require_step(alpha, "q_grad");
  StackedState g = F_grad(p, x);
  const StackedState wx = apply_lifted(p.mixing(), x);
  g.flat() += (x.flat() - wx.flat()) / alpha;
  return g;
}

// (blockdiag grad^2 f_i(x_i)) v + (1/a)(v - W (x) I v)
inline StackedState q_hess_apply(const Problem& p, double alpha, const StackedState& x, const StackedState& v) {
  require_step(alpha, "q_hess_apply");
  p.require_state(x, "q_hess_apply");
  p.require_state(v, "q_hess_apply");
  StackedState out(x.num_agents(), x.dim());
  for (std::size_t i = 0; i < p.num_agents(); ++i) out.block(i) = p.objective(i).hessian(x.block(i)) * v.block(i);
  const StackedState wv = apply_lifted(p.mixing(), v);
  out.flat() += (v.flat() - wv.flat()) / alpha;
  return out;
}

// Dense mn x mn Hessian of Q_a.
inline Matrix q_hess_dense(const Problem& p, double alpha, const StackedState& x) {
  require_step(alpha, "q_hess_dense");
  p.require_state(x, "q_hess_dense");
  const std::size_t m = p.num_agents();
  const auto n = static_cast<Eigen::Index>(p.dim());
  const auto mn = static_cast<Eigen::Index>(m) * n;
  Matrix h = Matrix::Zero(mn, mn);
  const Matrix& w = p.mixing().weights();
  for (std::size_t i = 0; i < m; ++i) {
    const auto bi = static_cast<Eigen::Index>(i) * n;
    h.block(bi, bi, n, n) += p.objective(i).hessian(x.block(i));
    for (std::size_t j = 0; j < m; ++j) {
      const auto bj = static_cast<Eigen::Index>(j) * n;
      const double coupling = ((i == j ? 1.0 : 0.0) - w(i, j)) / alpha;
      if (coupling != 0.0) h.block(bi, bj, n, n).diagonal().array() += coupling;
    }
  }
  return h;
}

enum class EigenMethod { Auto, Dense, Iterative };

inline constexpr std::size_t kDenseEigenCutover = 400;

// Lambda_a(x) = lambda_min(grad^2 Q_a(x)). Auto picks the dense solver when
// m*n <= 400 and shifted power iteration otherwise.
inline double q_hess_min_eig(const Problem& p, double alpha, const StackedState& x,
                             EigenMethod method = EigenMethod::Auto, const PowerIterationOptions& opts = {}) {
  require_step(alpha, "q_hess_min_eig");
  p.require_state(x, "q_hess_min_eig");
  if (method == EigenMethod::Auto) method = x.size() <= kDenseEigenCutover ? EigenMethod::Dense : EigenMethod::Iterative;
  if (method == EigenMethod::Dense) return min_eigenvalue_dense(q_hess_dense(p, alpha, x));

  // Hessian blocks are fixed for a given x; evaluate them once.
  std::vector<Matrix> blocks;
  blocks.reserve(p.num_agents());
  for (std::size_t i = 0; i < p.num_agents(); ++i) blocks.push_back(p.objective(i).hessian(x.block(i)));
  const std::size_t m = x.num_agents();
  const std::size_t n = x.dim();
  auto apply = [&](const Vector& v) {
    StackedState sv(m, n, v);
    StackedState out(m, n);
    for (std::size_t i = 0; i < m; ++i) out.block(i) = blocks[i] * sv.block(i);
    const StackedState wv = apply_lifted(p.mixing(), sv);
    out.flat() += (sv.flat() - wv.flat()) / alpha;
    return Vector(out.flat());
  };
  return min_eigenvalue_shifted_power(apply, static_cast<Eigen::Index>(x.size()), opts).eigenvalue;
}

// ---------------------------------------------------------------------------
// Stationary-point classification

struct ToleranceSpec {
  double grad_tol = 1e-6;
  double eig_tol = 1e-6;
};

enum class StationaryKind { NotStationary, LocalMinimizer, SaddleOrMaximizer, Degenerate };

inline const char* to_string(StationaryKind k) {
  switch (k) {
    case StationaryKind::NotStationary: return "not-stationary";
    case StationaryKind::LocalMinimizer: return "local-minimizer";
    case StationaryKind::SaddleOrMaximizer: return "saddle-or-maximizer";
    case StationaryKind::Degenerate: return "degenerate";
  }
  return "unknown";
}

struct StationaryClass {
  StationaryKind kind = StationaryKind::NotStationary;
  double grad_norm = 0.0;
  double min_hess_eig = 0.0;
};

inline StationaryClass classify_stationary(double grad_norm, double min_hess_eig, const ToleranceSpec& tol = {}) {
  if (!(tol.grad_tol > 0.0) || !(tol.eig_tol > 0.0)) throw ValidationError("classify_stationary: tolerances must be positive");
  StationaryClass c{StationaryKind::NotStationary, grad_norm, min_hess_eig};
  if (grad_norm > tol.grad_tol) return c;
  if (min_hess_eig > tol.eig_tol) {
    c.kind = StationaryKind::LocalMinimizer;
  } else if (min_hess_eig < -tol.eig_tol) {
    c.kind = StationaryKind::SaddleOrMaximizer;
  } else {
    c.kind = StationaryKind::Degenerate;
  }
  return c;
}

// Classify a point of the global f.
inline StationaryClass classify_point(const Problem& p, const Vector& x, const ToleranceSpec& tol = {}) {
  return classify_stationary(f_grad(p, x).norm(), min_eigenvalue_dense(f_hess(p, x)), tol);
}

// Classify a stacked point of Q_a.
inline StationaryClass classify_q_point(const Problem& p, double alpha, const StackedState& x,
                                        const ToleranceSpec& tol = {}) {
  return classify_stationary(q_grad(p, alpha, x).norm(), q_hess_min_eig(p, alpha, x), tol);
}

// ---------------------------------------------------------------------------
// Lipschitz aggregation. Missing per-agent metadata yields nullopt.

struct LipschitzConstants {
  std::optional<double> F_grad;
  std::optional<double> F_hess;
  std::optional<double> Q_grad;
  std::optional<double> Q_hess;
};

inline LipschitzConstants lipschitz_aggregate(const Problem& p, double alpha) {
  require_step(alpha, "lipschitz_aggregate");
  LipschitzConstants out;
  bool have_g = true;
  bool have_h = true;
  double lg = 0.0;
  double lh = 0.0;
  for (const auto& o : p.objectives()) {
    if (o.lipschitz_grad()) lg = std::max(lg, *o.lipschitz_grad()); else have_g = false;
    if (o.lipschitz_hess()) lh = std::max(lh, *o.lipschitz_hess()); else have_h = false;
  }
  if (have_g) {
    out.F_grad = lg;
    out.Q_grad = lg + (1.0 - p.mixing().spectral().lambda_min) / alpha;
  }
  if (have_h) {
    out.F_hess = lh;
    out.Q_hess = lh;
  }
  return out;
}

// Assigns box-local Lipschitz constants to every polynomial objective.
// Returns false if some objective is not a polynomial.
inline bool assign_box_lipschitz(Problem& p, double radius) {
  bool all = true;
  for (auto& o : p.objectives()) {
    if (const Polynomial* poly = o.polynomial()) {
      auto [lg, lh] = poly->derivative_bounds_on_box(radius);
      o.set_lipschitz(lg, lh);
    } else {
      all = false;
    }
  }
  return all;
}

// Empirical coercivity probe: smallest value of f_i on a sampled sphere of the
// given radius compared with f_i(0). Reported only.
struct CoercivityProbe {
  double shell_min = 0.0;
  double center_value = 0.0;
  bool grows() const { return shell_min > center_value; }
};

inline CoercivityProbe coercivity_probe(const LocalObjective& o, double radius, int samples = 256,
                                        std::uint64_t seed = 0xc0e4c1ULL) {
  const auto n = static_cast<Eigen::Index>(o.dim());
  CoercivityProbe out;
  out.center_value = o.value(Vector::Zero(n));
  out.shell_min = std::numeric_limits<double>::infinity();
  SplitMix64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Vector v(n);
    for (Eigen::Index j = 0; j < n; ++j) v(j) = uniform01(rng) - 0.5;
    if (v.norm() == 0.0) continue;
    out.shell_min = std::min(out.shell_min, o.value(radius * v.normalized()));
  }
  // coordinate axes, where separable polynomials are extreme
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector e = Vector::Zero(n);
    e(j) = radius;
    out.shell_min = std::min({out.shell_min, o.value(e), o.value(-e)});
  }
  return out;
}

}  // namespace ndgd
