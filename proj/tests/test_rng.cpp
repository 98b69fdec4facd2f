#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "selfreport/rng.hpp"

using namespace selfreport;

TEST(Rng, DerivedSeedsDependOnEveryKeyField) {
  const SeedKey base{7, "target-weights", "ctx", 0};
  std::set<std::uint64_t> seeds{derive_seed(base)};
  seeds.insert(derive_seed({8, "target-weights", "ctx", 0}));
  seeds.insert(derive_seed({7, "native-weights", "ctx", 0}));
  seeds.insert(derive_seed({7, "target-weights", "ctx2", 0}));
  seeds.insert(derive_seed({7, "target-weights", "ctx", 1}));
  EXPECT_EQ(seeds.size(), 5u);
  EXPECT_EQ(derive_seed(base), derive_seed(SeedKey{7, "target-weights", "ctx", 0}));
}

TEST(Rng, FieldBoundariesAreSeparated) {
  EXPECT_NE(derive_seed({1, "ab", "c", 0}), derive_seed({1, "a", "bc", 0}));
}

TEST(Rng, SameKeySameStream) {
  Rng a(SeedKey{3, "p", "c", 9});
  Rng b(SeedKey{3, "p", "c", 9});
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, UniformStaysInHalfOpenUnitInterval) {
  Rng rng(11);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  // sd of the mean is sqrt(1/12/n) ~ 6.5e-4
  EXPECT_NEAR(sum / n, 0.5, 4e-3);
}

TEST(Rng, NormalMomentsMatchStandardNormal) {
  Rng rng(12);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.015);
}

TEST(Rng, ExponentialHasUnitMeanAndIsPositive) {
  Rng rng(13);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = rng.exponential();
    ASSERT_GE(e, 0.0);
    ASSERT_TRUE(std::isfinite(e));
    sum += e;
  }
  EXPECT_NEAR(sum / n, 1.0, 0.01);
}

TEST(Rng, BelowCoversRangeUniformly) {
  Rng rng(14);
  std::array<int, 4> hits{};
  for (int i = 0; i < 40000; ++i) ++hits.at(rng.below(4));
  for (int h : hits) EXPECT_NEAR(h, 10000, 400);
}
