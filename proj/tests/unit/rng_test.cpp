#include "elicit/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

namespace elicit {
namespace {

TEST(Fnv1a64, PublishedVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(DeriveSeed, DependsOnBaseAndKey) {
  EXPECT_EQ(derive_seed(1, "seg"), derive_seed(1, "seg"));
  EXPECT_NE(derive_seed(1, "seg"), derive_seed(2, "seg"));
  EXPECT_NE(derive_seed(1, "seg"), derive_seed(1, "seh"));
  EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformBelowStaysInRangeAndCoversIt) {
  Rng rng(3);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform_below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 850);
}

TEST(Rng, Uniform01InUnitInterval) {
  Rng rng(9);
  double sum = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  Rng rng(11);
  const int n = 50000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.02);
  EXPECT_NEAR(sq / n, 1.0, 0.03);
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(5);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Rng, PartialShuffleDrawsDistinctItems) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> v(20);
    std::iota(v.begin(), v.end(), 0);
    rng.partial_shuffle(std::span(v), 6);
    std::set<int> front(v.begin(), v.begin() + 6);
    EXPECT_EQ(front.size(), 6u);
    std::set<int> all(v.begin(), v.end());
    EXPECT_EQ(all.size(), 20u);
  }
}

TEST(Rng, PartialShuffleIsUniformOverFirstSlot) {
  Rng rng(13);
  std::vector<int> counts(5, 0);
  for (int trial = 0; trial < 50000; ++trial) {
    std::vector<int> v = {0, 1, 2, 3, 4};
    rng.partial_shuffle(std::span(v), 1);
    ++counts[v[0]];
  }
  for (int c : counts) EXPECT_NEAR(c / 50000.0, 0.2, 0.01);
}

}  // namespace
}  // namespace elicit
