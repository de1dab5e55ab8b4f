#include <cmath>
#include <unordered_set>

#include <gtest/gtest.h>

#include "spde/error.hpp"
#include "spde/noise.hpp"

using namespace spde;

TEST(QEigenvalues, PowerLaw) {
  auto q = q_eigenvalues(NoiseSpec::power_law(0.0), 3);
  EXPECT_EQ(q, (std::vector<double>{1.0, 1.0, 1.0}));
  auto q1 = q_eigenvalues(NoiseSpec::power_law(-1.0), 2);
  EXPECT_NEAR(q1[0], 0.101321183642338, 1e-15);
  EXPECT_NEAR(q1[1], 0.101321183642338 / 4, 1e-15);
}

TEST(QEigenvalues, ExplicitAndZero) {
  auto q = q_eigenvalues(NoiseSpec::explicit_sequence({0.5, 0.25}), 4);
  EXPECT_EQ(q, (std::vector<double>{0.5, 0.25, 0.0, 0.0}));
  EXPECT_THROW(q_eigenvalues(NoiseSpec::explicit_sequence({1.0, -0.1}), 2), Error);
  EXPECT_THROW(q_eigenvalues(NoiseSpec::explicit_sequence({0.0}), 1), Error);
  auto z = q_eigenvalues(NoiseSpec::zero(), 3);
  EXPECT_EQ(z, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Admissibility, BaselSum) {
  auto a = admissibility(NoiseSpec::power_law(-1.0), 1.0);
  EXPECT_NEAR(a.value(), 1.0 / 6.0, 1e-9);
  EXPECT_GT(a.tail_bound, 0.0);
}

TEST(Admissibility, RoughNoiseZeta) {
  // pi^{-1.2} zeta(1.2)
  auto a = admissibility(NoiseSpec::power_law(0.0), 0.4);
  EXPECT_NEAR(a.value(), 1.41564671399541, 1e-6);
}

TEST(Admissibility, RejectsDivergentSeries) {
  for (auto [kappa, beta] : {std::pair{0.0, 1.0}, std::pair{1.0, 1.0}, std::pair{-0.4, 1.0}}) {
    try {
      admissibility(NoiseSpec::power_law(kappa), beta);
      FAIL() << kappa;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInadmissibleNoise);
    }
  }
  EXPECT_THROW(admissibility(NoiseSpec::power_law(-1.0), 0.0), Error);
  EXPECT_THROW(admissibility(NoiseSpec::power_law(-1.0), 1.5), Error);
}

TEST(Admissibility, MonotoneInKappa) {
  double prev = 0.0;
  for (double kappa = -2.0; kappa < -0.55; kappa += 0.1) {
    const double v = admissibility(NoiseSpec::power_law(kappa), 1.0).value();
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_EQ(admissibility(NoiseSpec::zero(), 1.0).value(), 0.0);
}

TEST(RangeCondition, PowerLaw) {
  // needs lambda^{-eps/2} <= C lambda^{kappa/2} for some eps < 1
  EXPECT_TRUE(satisfies_range_condition(NoiseSpec::power_law(0.0)));
  EXPECT_TRUE(satisfies_range_condition(NoiseSpec::power_law(-0.9)));
  EXPECT_FALSE(satisfies_range_condition(NoiseSpec::power_law(-1.0)));
  EXPECT_FALSE(satisfies_range_condition(NoiseSpec::explicit_sequence({1.0, 1.0})));
  EXPECT_FALSE(satisfies_range_condition(NoiseSpec::zero()));
}

TEST(SeedDerivation, DeterministicAndCollisionFree) {
  EXPECT_EQ(seed_derivation(7, 3, "clt"), seed_derivation(7, 3, "clt"));
  EXPECT_NE(seed_derivation(7, 0, "clt"), seed_derivation(7, 1, "clt"));
  EXPECT_NE(seed_derivation(7, 0, "clt"), seed_derivation(7, 0, "lln"));
  std::unordered_set<std::uint64_t> keys;
  for (std::uint64_t r = 0; r < 5000; ++r) {
    keys.insert(seed_derivation(42, r, "a").value);
    keys.insert(seed_derivation(42, r, "b").value);
  }
  EXPECT_EQ(keys.size(), 10000u);
  // Pinned so the stream stays stable across versions.
  static_assert(seed_derivation(0, 0, "") .value == mix64(mix64(0xCBF29CE484222325ULL)));
}

TEST(SampleIncrement, ModeOneVariance) {
  const std::size_t n = 100000;
  const double tau = 0.01;
  auto q = q_eigenvalues(NoiseSpec::power_law(0.0), 2);
  NoiseStream s{seed_derivation(1, 0, "test"), 0};
  double ss = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto w = sample_increment(s, q, tau);
    ss += w[0] * w[0];
    cross += w[0] * w[1];
  }
  const double se = tau * std::sqrt(2.0 / n);
  EXPECT_NEAR(ss / n, tau, 3 * se);
  EXPECT_NEAR(cross / n, 0.0, 3 * tau / std::sqrt(double(n)));
  EXPECT_EQ(s.step, n);
}

TEST(SampleIncrement, SameStateSameField) {
  auto q = q_eigenvalues(NoiseSpec::power_law(-1.0), 8);
  NoiseStream a{seed_derivation(9, 2, "x"), 17};
  NoiseStream b = a;
  EXPECT_EQ(sample_increment(a, q, 0.1), sample_increment(b, q, 0.1));
  EXPECT_THROW(sample_increment(a, q, 0.0), Error);
}

TEST(SampleIncrement, TruncationConsistency) {
  const auto key = seed_derivation(3, 0, "trunc");
  auto q_small = q_eigenvalues(NoiseSpec::power_law(-1.0), 4);
  auto q_big = q_eigenvalues(NoiseSpec::power_law(-1.0), 64);
  NoiseStream a{key, 0}, b{key, 0};
  for (int k = 0; k < 100; ++k) {
    auto ws = sample_increment(a, q_small, 0.01);
    auto wb = sample_increment(b, q_big, 0.01);
    for (std::size_t j = 0; j < 4; ++j) ASSERT_EQ(ws[j], wb[j]);
  }
}

TEST(CounterNormal, MomentsAndLaneIndependence) {
  const auto key = seed_derivation(11, 0, "cn");
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0, c01 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = counter_normal(key, i, 1, 0);
    const double y = counter_normal(key, i, 1, 1);
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
    c01 += z * y;
  }
  EXPECT_NEAR(s1 / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
  EXPECT_NEAR(c01 / n, 0.0, 4.0 / std::sqrt(n));
}

TEST(Aggregate, IdentityAndPairSums) {
  auto q = q_eigenvalues(NoiseSpec::power_law(0.0), 3);
  auto path = generate_path(seed_derivation(5, 0, "agg"), q, 0.01, 4);
  auto same = aggregate_increments(path, 1);
  ASSERT_EQ(same.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(same[k], path.increments[k]);

  auto two = aggregate_increments(path, 2);
  ASSERT_EQ(two.size(), 2u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(two[0][j], path.increments[0][j] + path.increments[1][j]);
    EXPECT_EQ(two[1][j], path.increments[2][j] + path.increments[3][j]);
  }
  EXPECT_THROW(aggregate_increments(path, 3), Error);
}

TEST(Aggregate, VariancePreserved) {
  const std::size_t paths = 100000;
  auto q = q_eigenvalues(NoiseSpec::power_law(0.0), 1);
  double ss = 0.0;
  for (std::size_t p = 0; p < paths; ++p) {
    auto path = generate_path(seed_derivation(6, p, "aggvar"), q, 0.0025, 4);
    const double w = aggregate_increments(path, 4)[0][0];
    ss += w * w;
  }
  EXPECT_NEAR(ss / paths, 0.01, 3 * 0.01 * std::sqrt(2.0 / paths));
}
