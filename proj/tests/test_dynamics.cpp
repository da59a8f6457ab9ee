#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ndgd/dynamics.hpp"
#include "ndgd/harness/builtin.hpp"
#include "support.hpp"

using namespace ndgd;

namespace {

RunConfig sec5_config(std::size_t iterations) {
  RunConfig cfg;
  cfg.alpha = 0.005;
  cfg.max_iterations = iterations;
  cfg.init = StackedState::broadcast(5, builtin::paper_sec5_init());
  cfg.references = builtin::paper_sec5_minimizers();
  return cfg;
}

}  // namespace

TEST(Dynamics, DgdIsGradientDescentOnQ) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + trial % 6, n = 1 + trial % 4;
    const Problem p = testkit::random_problem(m, n, rng);
    const StackedState x = testkit::random_state(m, n, rng);
    EXPECT_LE(dgd_q_equivalence_error(p, 0.03, x), 1e-12);
  }
}

TEST(Dynamics, DgdStepByHand) {
  const Problem p = builtin::paper_sec5_problem();
  std::mt19937_64 rng(1);
  const StackedState x = testkit::random_state(5, 2, rng);
  const StackedState y = dgd_step(p, 0.01, x);
  const Matrix& w = p.mixing().weights();
  for (std::size_t i = 0; i < 5; ++i) {
    Vector expect = -0.01 * p.objective(i).gradient(x.block(i));
    for (std::size_t j = 0; j < 5; ++j) expect += w(i, j) * x.block(j);
    EXPECT_LE((Vector(y.block(i)) - expect).norm(), 1e-14);
  }
}

TEST(Dynamics, NdgdWithoutNoiseMatchesDgd) {
  const Problem p = builtin::paper_sec5_problem();
  std::mt19937_64 rng(2);
  const StackedState x = testkit::random_state(5, 2, rng);
  EXPECT_EQ(ndgd_step(p, 0.01, x, NoiseSpec::none(), 1, 0).flat(), dgd_step(p, 0.01, x).flat());
}

TEST(Dynamics, NdgdNoiseEntersScaledByStep) {
  const Problem p = builtin::paper_sec5_problem();
  std::mt19937_64 rng(3);
  const StackedState x = testkit::random_state(5, 2, rng);
  const NoiseSpec spec = NoiseSpec::sphere(0.1);
  const StackedState noisy = ndgd_step(p, 0.01, x, spec, 4, 17);
  const StackedState clean = dgd_step(p, 0.01, x);
  for (std::size_t i = 0; i < 5; ++i) {
    const Vector xi = sample(spec, RandomStream(4, i), 17, 2);
    EXPECT_LE((Vector(noisy.block(i)) - Vector(clean.block(i)) + 0.01 * xi).norm(), 1e-15);
  }
}

TEST(Dynamics, AuditCountsOnlyNeighborhoodReads) {
  const Problem p = builtin::paper_sec5_problem();
  AuditReport audit;
  audit.enabled = true;
  const StackedState x = StackedState::broadcast(5, builtin::paper_sec5_init());
  dgd_step(p, 0.005, x, &audit);
  // 3 mixing reads plus one own-gradient read per agent
  EXPECT_EQ(audit.reads, 20u);
  EXPECT_EQ(audit.out_of_neighborhood_reads, 0u);

  AuditReport bad;
  run_round(p, x, [](const NeighborhoodView& v, Vector& out) { out = v.read((v.self() + 1) % 5); }, &bad);
  EXPECT_GT(bad.out_of_neighborhood_reads, 0u);
}

TEST(Dynamics, DgdConsensusOverAgentsOnQuadratic) {
  // f_i = 0.5 |x - c_i|^2 has average minimizer mean(c); DGD converges to an
  // O(alpha) neighborhood of it.
  const std::size_t m = 4;
  std::vector<LocalObjective> objs;
  for (std::size_t i = 0; i < m; ++i) {
    objs.push_back(LocalObjective::from_polynomial(
        Polynomial(1, {{{2}, 0.5}, {{1}, -static_cast<double>(i)}, {{0}, 0.5 * i * i}})));
  }
  const NetworkGraph g = cycle_graph(m);
  Problem p(std::move(objs), validate_mixing(generate_lazy_metropolis(g, 0.4), g));
  RunConfig cfg;
  cfg.alpha = 0.01;
  cfg.max_iterations = 5000;
  cfg.init = StackedState(m, 1);
  const Trajectory t = run(p, cfg, Variant::DGD);
  EXPECT_NEAR(consensus_average(t.final_state)(0), 1.5, 1e-9);
  EXPECT_LT(consensus_error(t.final_state), 0.1);
}

TEST(Dynamics, RecordingSchedule) {
  const Problem p = builtin::paper_sec5_problem();
  RunConfig cfg = sec5_config(25);
  cfg.record_every = 10;
  const Trajectory t = run(p, cfg, Variant::DGD);
  ASSERT_EQ(t.records.size(), 4u);
  EXPECT_EQ(t.records[0].iteration, 0u);
  EXPECT_EQ(t.records[1].iteration, 10u);
  EXPECT_EQ(t.records[2].iteration, 20u);
  EXPECT_EQ(t.records[3].iteration, 25u);
  EXPECT_EQ(t.iterations_run, 25u);
  EXPECT_EQ(t.stop_reason, StopReason::MaxIterations);
  EXPECT_EQ(RunConfig{}.effective_record_every(), 1u);
}

TEST(Dynamics, StopOnGradientNorm) {
  const Problem p = builtin::paper_sec5_problem();
  RunConfig cfg = sec5_config(100);
  cfg.init = StackedState::broadcast(5, builtin::paper_sec5_minimizers()[0]);
  cfg.stop = StopRule{1e3, std::nullopt};
  const Trajectory t = run(p, cfg, Variant::DGD);
  EXPECT_EQ(t.stop_reason, StopReason::GradNormBelow);
  EXPECT_EQ(t.iterations_run, 1u);
}

TEST(Dynamics, DivergenceIsReported) {
  const Problem p = builtin::paper_sec5_problem();
  RunConfig cfg = sec5_config(1000);
  cfg.alpha = 0.5;
  cfg.init = StackedState::broadcast(5, Vector::Constant(2, 50.0));
  const Trajectory t = run(p, cfg, Variant::DGD);
  EXPECT_EQ(t.stop_reason, StopReason::Diverged);
  EXPECT_TRUE(t.final_state.all_finite());
  EXPECT_EQ(t.records.back().iteration, t.iterations_run);
}

TEST(Dynamics, ValidatesConfig) {
  const Problem p = builtin::paper_sec5_problem();
  RunConfig cfg = sec5_config(10);
  cfg.alpha = -1.0;
  EXPECT_THROW(run(p, cfg, Variant::DGD), ValidationError);
  cfg = sec5_config(10);
  cfg.init = StackedState(4, 2);
  EXPECT_THROW(run(p, cfg, Variant::DGD), ValidationError);
  cfg = sec5_config(10);
  cfg.noise = NoiseSpec::sphere(10.0);
  cfg.noise.epsilon = 1.0;
  EXPECT_THROW(run(p, cfg, Variant::NDGD), ValidationError);
  cfg = sec5_config(10);
  cfg.stop = StopRule{};
  EXPECT_THROW(run(p, cfg, Variant::DGD), ValidationError);
}

TEST(Dynamics, NdgdRunIsReproducible) {
  const Problem p = builtin::paper_sec5_problem();
  RunConfig cfg = sec5_config(500);
  cfg.noise = NoiseSpec::sphere(0.1);
  cfg.master_seed = 12;
  const Trajectory a = run(p, cfg, Variant::NDGD);
  const Trajectory b = run(p, cfg, Variant::NDGD);
  EXPECT_EQ(a.final_state.flat(), b.final_state.flat());
  cfg.master_seed = 13;
  EXPECT_NE(run(p, cfg, Variant::NDGD).final_state.flat(), a.final_state.flat());
}

TEST(Dynamics, VariantNames) {
  for (Variant v : {Variant::DGD, Variant::NDGD, Variant::GDOnQ}) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_FALSE(parse_variant("SGD").has_value());
}
