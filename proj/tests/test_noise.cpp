#include <gtest/gtest.h>

#include <cmath>

#include "ndgd/harness/builtin.hpp"
#include "ndgd/noise.hpp"
#include "ndgd/random.hpp"

using namespace ndgd;

TEST(Random, SplitMixIsDeterministic) {
  SplitMix64 a(42), b(42), c(43);
  for (int i = 0; i < 10; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
  }
}

TEST(Random, Uniform01InRange) {
  SplitMix64 r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(r);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Noise, SphereDrawsHaveExactRadius) {
  const NoiseSpec spec = NoiseSpec::sphere(0.2);
  const RandomStream s(9, 0);
  for (std::uint64_t k = 0; k < 1000; ++k) EXPECT_NEAR(sample(spec, s, k, 3).norm(), 0.2, 1e-12);
}

TEST(Noise, DrawsDependOnlyOnSeedAgentIteration) {
  const NoiseSpec spec = NoiseSpec::gaussian(1.0);
  const RandomStream a(5, 2), b(5, 2), other_agent(5, 3), other_seed(6, 2);
  const Vector late = sample(spec, a, 100, 4);
  sample(spec, b, 3, 4);
  EXPECT_EQ(sample(spec, b, 100, 4), late);
  EXPECT_NE(sample(spec, other_agent, 100, 4), late);
  EXPECT_NE(sample(spec, other_seed, 100, 4), late);
}

TEST(Noise, GaussianMoments) {
  const NoiseSpec spec = NoiseSpec::gaussian(0.5);
  const RandomStream s(77, 1);
  const int N = 40000;
  double sum = 0.0, sq = 0.0;
  for (int k = 0; k < N; ++k) {
    const double v = sample(spec, s, static_cast<std::uint64_t>(k), 1)(0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / N;
  const double var = sq / N - mean * mean;
  EXPECT_LT(std::abs(mean), 4 * 0.5 / std::sqrt(N));
  EXPECT_NEAR(var, 0.25, 4 * 0.25 * std::sqrt(2.0 / N));
}

TEST(Noise, NoneIsZero) {
  EXPECT_EQ(sample(NoiseSpec::none(), RandomStream(1, 0), 0, 3), Vector::Zero(3));
}

TEST(Noise, BudgetAndRadius) {
  const double lmin = 0.6 + 0.4 * std::cos(4.0 * M_PI / 5.0);
  EXPECT_NEAR(sigma_max_sq(1.0, 5, 2, lmin), lmin / 10.0, 1e-15);
  const double r = sphere_radius_for(1.0, 5, 2, lmin, 0.5);
  EXPECT_NEAR(r, std::sqrt(0.5 * 2 * lmin / 10.0), 1e-15);

  NoiseSpec at_budget = NoiseSpec::sphere(r);
  at_budget.epsilon = 1.0;
  EXPECT_NO_THROW(validate_noise(at_budget, 5, 2, lmin));
  NoiseSpec over = NoiseSpec::sphere(r * 1.01);
  over.epsilon = 1.0;
  EXPECT_THROW(validate_noise(over, 5, 2, lmin), ValidationError);
  NoiseSpec bad_safety = at_budget;
  bad_safety.safety_factor = 1.5;
  EXPECT_THROW(validate_noise(bad_safety, 5, 2, lmin), ValidationError);
  EXPECT_THROW(validate_noise(NoiseSpec::sphere(-1.0), 5, 2, lmin), ValidationError);
  EXPECT_THROW(sigma_max_sq(0.0, 5, 2, lmin), ValidationError);
}

TEST(Noise, CoordinateVariance) {
  EXPECT_DOUBLE_EQ(NoiseSpec::sphere(0.2).coordinate_variance(2), 0.02);
  EXPECT_DOUBLE_EQ(NoiseSpec::gaussian(0.3).coordinate_variance(5), 0.09);
  EXPECT_DOUBLE_EQ(NoiseSpec::none().coordinate_variance(5), 0.0);
}
