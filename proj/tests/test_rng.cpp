#include <gtest/gtest.h>

#include <set>

#include "rsirs/rng.hpp"

namespace rsirs {
namespace {

// Known-answer vectors of the reference Philox4x32-10.
TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}), (PhiloxBlock{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (PhiloxBlock{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (PhiloxBlock{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(RngStream, SameKeySameSequence) {
  RngStream a(42, 7), b(42, 7);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(a(), b());
}

TEST(RngStream, DistinctPathsDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t k = 0; k < 100; ++k) {
    RngStream s(42, k);
    firsts.insert(s());
  }
  EXPECT_EQ(firsts.size(), 100u);
}

TEST(RngStream, UniformMomentsAndRange) {
  RngStream s(1, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sum2 / n - mean * mean, 1.0 / 12.0, 2e-3);
}

TEST(RngStream, ExponentialMean) {
  RngStream s(3, 9);
  const int n = 200000;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += s.exponential(2.5);
  EXPECT_NEAR(sum / n, 0.4, 5.0 * 0.4 / std::sqrt(n));
}

}  // namespace
}  // namespace rsirs
