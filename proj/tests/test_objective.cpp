#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ndgd/differentiation.hpp"
#include "ndgd/harness/builtin.hpp"
#include "ndgd/objective.hpp"
#include "support.hpp"

using namespace ndgd;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST(Polynomial, ValueGradientHessian) {
  // 3 x^2 y - y^3 + 2
  const Polynomial p(2, {{{2, 1}, 3.0}, {{0, 3}, -1.0}, {{0, 0}, 2.0}});
  const Vector x = vec2(1.5, -0.5);
  EXPECT_NEAR(p.value(x), 3 * 2.25 * -0.5 + 0.125 + 2.0, 1e-14);
  EXPECT_NEAR(p.gradient(x)(0), 6 * 1.5 * -0.5, 1e-14);
  EXPECT_NEAR(p.gradient(x)(1), 3 * 2.25 - 3 * 0.25, 1e-14);
  const Matrix h = p.hessian(x);
  EXPECT_NEAR(h(0, 0), 6 * -0.5, 1e-14);
  EXPECT_NEAR(h(0, 1), 6 * 1.5, 1e-14);
  EXPECT_NEAR(h(1, 0), 6 * 1.5, 1e-14);
  EXPECT_NEAR(h(1, 1), -6 * -0.5, 1e-14);
}

TEST(Polynomial, RejectsBadTerms) {
  EXPECT_THROW(Polynomial(2, {{{1}, 1.0}}), ValidationError);
  EXPECT_THROW(Polynomial(2, {{{-1, 0}, 1.0}}), ValidationError);
}

TEST(Polynomial, BoxBoundsDominateSampledDerivatives) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 3;
    const Polynomial p = testkit::random_polynomial(n, rng);
    const double radius = 1.5;
    auto [lg, lh] = p.derivative_bounds_on_box(radius);
    std::uniform_real_distribution<double> u(-radius, radius);
    for (int s = 0; s < 50; ++s) {
      Vector a(n), b(n);
      for (auto& v : a) v = u(rng);
      for (auto& v : b) v = u(rng);
      const double d = (a - b).norm();
      EXPECT_LE((p.gradient(a) - p.gradient(b)).norm(), lg * d + 1e-12);
      EXPECT_LE((p.hessian(a) - p.hessian(b)).norm(), lh * d + 1e-12);
    }
  }
}

TEST(LocalObjective, RejectsWrongAnalyticGradient) {
  auto value = [](const Vector& x) { return x.squaredNorm(); };
  auto wrong = [](const Vector& x) { return Vector(3.0 * x); };
  EXPECT_THROW(LocalObjective(2, value, wrong), ValidationError);
  EXPECT_NO_THROW(LocalObjective(2, value, [](const Vector& x) { return Vector(2.0 * x); }));
}

TEST(LocalObjective, FiniteDifferenceFallback) {
  const LocalObjective o(2, [](const Vector& x) { return std::sin(x(0)) * x(1) * x(1); });
  const Vector x = vec2(0.3, -1.2);
  EXPECT_NEAR(o.gradient(x)(0), std::cos(0.3) * 1.44, 1e-7);
  EXPECT_NEAR(o.gradient(x)(1), std::sin(0.3) * 2 * -1.2, 1e-7);
  const Matrix h = o.hessian(x);
  EXPECT_NEAR(h(0, 1), h(1, 0), 1e-15);
  EXPECT_NEAR(h(1, 1), 2 * std::sin(0.3), 1e-4);
}

TEST(LocalObjective, RejectsNegativeLipschitz) {
  EXPECT_THROW(LocalObjective::from_polynomial(Polynomial(1, {{{2}, 1.0}}), -1.0), ValidationError);
}

TEST(SaddleExample, StationaryClassification) {
  const Problem p = builtin::paper_sec5_problem();
  const auto saddle = classify_point(p, vec2(0.0, 0.0));
  EXPECT_EQ(saddle.kind, StationaryKind::SaddleOrMaximizer);
  EXPECT_NEAR(saddle.min_hess_eig, -2.0, 1e-9);
  for (const Vector& xs : builtin::paper_sec5_minimizers()) {
    const auto c = classify_point(p, xs);
    EXPECT_EQ(c.kind, StationaryKind::LocalMinimizer);
    EXPECT_NEAR(c.min_hess_eig, 2.0, 1e-9);
    EXPECT_NEAR(f_value(p, xs), -0.25, 1e-12);
  }
  EXPECT_EQ(classify_point(p, vec2(0.3, 0.1)).kind, StationaryKind::NotStationary);
}

TEST(ClassifyStationary, Thresholds) {
  EXPECT_EQ(classify_stationary(0.0, 0.0).kind, StationaryKind::Degenerate);
  EXPECT_EQ(classify_stationary(1e-7, 1.0).kind, StationaryKind::LocalMinimizer);
  EXPECT_EQ(classify_stationary(1e-5, 1.0).kind, StationaryKind::NotStationary);
  EXPECT_THROW(classify_stationary(0.0, 0.0, {0.0, 1e-6}), ValidationError);
}

TEST(QAlpha, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 1 + trial % 6, n = 1 + trial % 4;
    const Problem p = testkit::random_problem(m, n, rng);
    const double alpha = 0.05;
    const StackedState x = testkit::random_state(m, n, rng);
    const Vector fd = fd_gradient([&](const Vector& v) { return q_value(p, alpha, StackedState(m, n, v)); }, x.flat());
    EXPECT_LE(relative_error(q_grad(p, alpha, x).flat(), fd), 1e-5);
  }
}

TEST(QAlpha, HessianApplySymmetricAndMatchesDense) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + trial % 6, n = 1 + trial % 4;
    const Problem p = testkit::random_problem(m, n, rng);
    const double alpha = 0.1;
    const StackedState x = testkit::random_state(m, n, rng);
    const StackedState u = testkit::random_state(m, n, rng), v = testkit::random_state(m, n, rng);
    const double uhv = u.flat().dot(q_hess_apply(p, alpha, x, v).flat());
    const double vhu = v.flat().dot(q_hess_apply(p, alpha, x, u).flat());
    EXPECT_NEAR(uhv, vhu, 1e-10 * std::max(1.0, std::abs(uhv)));
    const Matrix h = q_hess_dense(p, alpha, x);
    EXPECT_LE((h * v.flat() - q_hess_apply(p, alpha, x, v).flat()).norm(), 1e-10 * std::max(1.0, h.norm()));
  }
}

TEST(QAlpha, DenseAndIterativeMinEigenvalueAgree) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 2 + trial % 5, n = 1 + trial % 3;
    const Problem p = testkit::random_problem(m, n, rng);
    const double alpha = 0.2;
    const StackedState x = testkit::random_state(m, n, rng);
    const double dense = q_hess_min_eig(p, alpha, x, EigenMethod::Dense);
    const double iter = q_hess_min_eig(p, alpha, x, EigenMethod::Iterative);
    EXPECT_NEAR(dense, iter, 1e-6) << "trial " << trial;
  }
}

TEST(QAlpha, ConsensusStatesHaveNoPenalty) {
  const Problem p = builtin::paper_sec5_problem();
  const StackedState x = StackedState::broadcast(5, vec2(0.4, -0.2));
  EXPECT_NEAR(consensus_penalty(p, 0.01, x), 0.0, 1e-15);
  EXPECT_NEAR(q_value(p, 0.01, x), f_value(p, vec2(0.4, -0.2)), 1e-14);
  EXPECT_THROW(q_value(p, 0.0, x), ValidationError);
  EXPECT_THROW(q_value(p, 0.01, StackedState(4, 2)), ValidationError);
}

TEST(Lipschitz, AggregateUsesMaxAndSpectrum) {
  Problem p = builtin::paper_sec5_problem();
  EXPECT_FALSE(lipschitz_aggregate(p, 0.01).F_grad.has_value());
  ASSERT_TRUE(assign_box_lipschitz(p, 1.0));
  const auto lip = lipschitz_aggregate(p, 0.01);
  ASSERT_TRUE(lip.F_grad && lip.Q_grad && lip.F_hess);
  double lg = 0.0;
  for (const auto& o : p.objectives()) lg = std::max(lg, *o.lipschitz_grad());
  EXPECT_DOUBLE_EQ(*lip.F_grad, lg);
  EXPECT_NEAR(*lip.Q_grad, lg + (1.0 - p.mixing().spectral().lambda_min) / 0.01, 1e-12);
}

TEST(Coercivity, ProbeSeparatesGrowthFromDecay) {
  const auto up = LocalObjective::from_polynomial(Polynomial(1, {{{4}, 1.0}}));
  const auto down = LocalObjective::from_polynomial(Polynomial(1, {{{2}, -1.0}}));
  EXPECT_TRUE(coercivity_probe(up, 10.0).grows());
  EXPECT_FALSE(coercivity_probe(down, 10.0).grows());
}
