#include <gtest/gtest.h>

#include <cmath>

#include "ndgd/diagnostics.hpp"
#include "ndgd/harness/builtin.hpp"
#include "support.hpp"

using namespace ndgd;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

// DGD on the five-agent example run to a stationary point of Q_a.
StackedState sec5_stationary(const Problem& p, double alpha) {
  RunConfig cfg;
  cfg.alpha = alpha;
  cfg.max_iterations = 400000;
  cfg.record_every = 1000;
  cfg.init = StackedState::broadcast(5, vec2(0.5, 0.2));
  cfg.stop = StopRule{1e-10, std::nullopt};
  const Trajectory t = run(p, cfg, Variant::DGD);
  EXPECT_EQ(t.stop_reason, StopReason::GradNormBelow);
  return t.final_state;
}

}  // namespace

TEST(Diagnostics, BoundsUnavailableWithoutMetadata) {
  const Problem p = builtin::paper_sec5_problem();
  const StackedState x = StackedState::broadcast(5, vec2(0.1, 0.1));
  const auto r2 = lemma2_check(p, 0.01, x);
  EXPECT_FALSE(r2.available);
  EXPECT_FALSE(r2.satisfied);
  EXPECT_TRUE(std::isnan(r2.bound));
  EXPECT_FALSE(lemma3_check(p, 0.01, x).available);
  EXPECT_THROW(computable_alpha_caps(p, 0.1), ValidationError);
  // The consensus bound needs no Lipschitz data.
  for (const auto& r : lemma1_check(p, 0.01, x)) EXPECT_TRUE(r.available);
}

TEST(Diagnostics, BoundsHoldAtStationaryPoint) {
  Problem p = builtin::paper_sec5_problem();
  ASSERT_TRUE(assign_box_lipschitz(p, 1.0));
  const double alpha = 0.02;
  const StackedState x = sec5_stationary(p, alpha);
  EXPECT_LE(x.flat().cwiseAbs().maxCoeff(), 1.0);
  for (const auto& r : lemma1_check(p, alpha, x)) {
    EXPECT_TRUE(r.satisfied) << r.quantity << " " << r.measured << " > " << r.bound;
    EXPECT_TRUE(r.note.empty());
  }
  EXPECT_TRUE(lemma2_check(p, alpha, x).satisfied);
  EXPECT_TRUE(lemma3_check(p, alpha, x).satisfied);
}

TEST(Diagnostics, NonStationaryPointIsFlagged) {
  const Problem p = builtin::paper_sec5_problem();
  const auto reports = lemma1_check(p, 0.01, StackedState::broadcast(5, vec2(0.3, 0.3)));
  EXPECT_FALSE(reports.front().note.empty());
}

TEST(Diagnostics, AlphaCaps) {
  Problem p = builtin::paper_sec5_problem();
  assign_box_lipschitz(p, 1.0);
  double lg = 0.0;
  for (const auto& o : p.objectives()) lg = std::max(lg, *o.lipschitz_grad());
  const auto caps = computable_alpha_caps(p, 0.01);
  EXPECT_NEAR(caps.cap_sqrt2, (std::sqrt(2.0) - 1.0) / lg, 1e-15);
  EXPECT_NEAR(caps.cap_spectral, p.mixing().spectral().lambda_min / (lg * std::log(100.0)), 1e-15);
  // log(1/zeta) < 1 clamps to 1
  EXPECT_NEAR(computable_alpha_caps(p, 0.9).cap_spectral, p.mixing().spectral().lambda_min / lg, 1e-15);
  EXPECT_THROW(computable_alpha_caps(p, 1.0), ValidationError);
}

TEST(Diagnostics, RegionMembershipOnSaddleAndMinimizer) {
  Problem p = builtin::paper_sec5_problem();
  assign_box_lipschitz(p, 1.0);
  // On consensus directions the Q_alpha Hessian is hess f / m, about +-0.4 here.
  const RegularityParams params{0.5, 0.2, 0.2, 0.1, 0.005};
  const auto at_saddle = region_membership(p, params, StackedState::broadcast(5, vec2(0.0, 0.0)));
  EXPECT_FALSE(at_saddle.in_I1);
  EXPECT_TRUE(at_saddle.in_I2);
  const StackedState xmin = StackedState::broadcast(5, builtin::paper_sec5_minimizers()[0]);
  const auto at_min = region_membership(p, params, xmin, {xmin});
  EXPECT_TRUE(at_min.in_I3_partial);
  EXPECT_DOUBLE_EQ(*at_min.dist_to_minimizers, 0.0);
  const auto far = region_membership(p, params, StackedState::broadcast(5, vec2(0.3, 0.3)));
  EXPECT_TRUE(far.in_I1);

  RegularityParams bad = params;
  bad.gamma = 1e9;
  EXPECT_THROW(region_membership(p, bad, xmin), ValidationError);

  const auto cov = coverage_probe(p, params, {xmin, StackedState::broadcast(5, vec2(0.0, 0.0))}, {xmin});
  EXPECT_EQ(cov.probes, 2u);
  EXPECT_EQ(cov.covered, 2u);
}

TEST(Diagnostics, DescentEstimateIsNegativeAwayFromStationarity) {
  const Problem p = builtin::paper_sec5_problem();
  const double alpha = 0.005;
  const StackedState x = StackedState::broadcast(5, vec2(0.3, 0.3));
  const double eps = q_grad(p, alpha, x).norm();
  NoiseSpec noise = NoiseSpec::sphere(sphere_radius_for(eps, 5, 2, p.mixing().spectral().lambda_min, 0.5));
  noise.epsilon = eps;
  const auto est = lemma5_descent_mc(p, alpha, x, noise, eps, 2000, 3);
  EXPECT_LT(est.mean_delta_q + 3 * est.std_err, 0.0);
  EXPECT_LT(est.bound, 0.0);
  EXPECT_THROW(lemma5_descent_mc(p, alpha, x, noise, 2 * eps, 10), ValidationError);
}

TEST(Diagnostics, EscapeIterationAndMedian) {
  Trajectory t;
  for (std::size_t k : {0u, 10u, 20u}) {
    TrajectoryRecord r;
    r.iteration = k;
    r.mean = vec2(0.01 * static_cast<double>(k), 0.0);
    t.records.push_back(r);
  }
  EXPECT_EQ(escape_iteration(t, vec2(0, 0), 0.15), 20u);
  EXPECT_FALSE(escape_iteration(t, vec2(0, 0), 0.5).has_value());
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_THROW(median({}), ValidationError);
}

TEST(Distance, NearestReferenceTiesToLowestIndex) {
  const auto d = dist_to_reference(vec2(0, 0), {vec2(1, 0), vec2(-1, 0)});
  EXPECT_EQ(d.index, 0u);
  EXPECT_DOUBLE_EQ(d.distance, 1.0);
  EXPECT_EQ(dist_to_reference(vec2(-0.9, 0), {vec2(1, 0), vec2(-1, 0)}).index, 1u);
  EXPECT_THROW(dist_to_reference(vec2(0, 0), {}), ValidationError);
}

TEST(Diagnostics, DescentWithoutNoiseIsDeterministic) {
  const Problem p = builtin::paper_sec5_problem();
  const StackedState x = StackedState::broadcast(5, vec2(0.3, 0.3));
  const auto est = lemma5_descent_mc(p, 0.005, x, NoiseSpec::none(), 0.1, 5);
  EXPECT_EQ(est.mean_delta_q, est.deterministic_delta_q);
  EXPECT_EQ(est.std_err, 0.0);
  EXPECT_EQ(est.bound, 0.0);
}
