#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "memweave/policy.hpp"

using namespace memweave;

namespace {

std::vector<std::size_t> emit(const InterleaveWeights& w, std::size_t n) {
  std::vector<std::size_t> out;
  AllocatorCursor cursor;
  for (std::size_t i = 0; i < n; ++i) {
    auto [tier, next] = next_tier(cursor, w);
    out.push_back(tier);
    cursor = next;
  }
  return out;
}

InterleaveWeights random_weights(std::mt19937_64& rng, std::size_t tiers, std::uint32_t max) {
  std::uniform_int_distribution<std::uint32_t> d(0, max);
  while (true) {
    std::vector<std::uint32_t> w(tiers);
    for (auto& x : w) x = d(rng);
    if (std::any_of(w.begin(), w.end(), [](auto x) { return x > 0; })) return InterleaveWeights(w);
  }
}

}  // namespace

TEST(InterleaveWeights, Invariants) {
  EXPECT_THROW(InterleaveWeights({0, 0}), ValidationError);
  EXPECT_THROW(InterleaveWeights({256, 1}), ValidationError);
  EXPECT_THROW(InterleaveWeights(std::vector<std::uint32_t>{}), ValidationError);
  EXPECT_NO_THROW(InterleaveWeights({255, 0}));
  EXPECT_EQ(InterleaveWeights({5, 2}).total(), 7u);
  EXPECT_EQ(InterleaveWeights({3, 1}).label(), "(3,1)");
  EXPECT_EQ(InterleaveWeights({3, 1}).spec(), "3,1");
}

TEST(InterleaveWeights, Parse) {
  EXPECT_EQ(parse_weights("3,1"), InterleaveWeights({3, 1}));
  EXPECT_EQ(parse_weights("5:2"), InterleaveWeights({5, 2}));
  EXPECT_EQ(parse_weights("1,0,2"), InterleaveWeights({1, 0, 2}));
  for (const char* bad : {"", ",", "3,", ",1", "3;1", "a,b", "-1,2", "3 1"}) {
    EXPECT_THROW(parse_weights(bad), ParseError) << bad;
  }
  EXPECT_THROW(parse_weights("0,0"), ValidationError);
  EXPECT_THROW(parse_weights("300,1"), ValidationError);
}

TEST(TrafficFraction, Examples) {
  EXPECT_EQ(traffic_fraction({3, 1}, 0), 0.75);
  EXPECT_EQ(traffic_fraction({1, 0}, 1), 0.0);
  EXPECT_DOUBLE_EQ(traffic_fraction({5, 2}, 1), 2.0 / 7.0);
  EXPECT_THROW(traffic_fraction({5, 2}, 2), ValidationError);
}

TEST(NextTier, Examples) {
  EXPECT_EQ(emit({3, 1}, 8), (std::vector<std::size_t>{0, 0, 0, 1, 0, 0, 0, 1}));
  EXPECT_EQ(emit({1, 1}, 4), (std::vector<std::size_t>{0, 1, 0, 1}));
  EXPECT_EQ(emit({1, 0}, 50), std::vector<std::size_t>(50, 0));
  EXPECT_EQ(emit({0, 2, 0, 1}, 6), (std::vector<std::size_t>{1, 1, 3, 1, 1, 3}));
}

TEST(NextTier, CursorStaysInRange) {
  const InterleaveWeights w{4, 0, 3};
  AllocatorCursor cursor;
  for (int i = 0; i < 100; ++i) {
    cursor = next_tier(cursor, w).second;
    ASSERT_TRUE(w.active(cursor.tier));
    ASSERT_GE(cursor.remaining, 1u);
    ASSERT_LE(cursor.remaining, w[cursor.tier]);
  }
}

TEST(NextTier, RejectsCursorForOtherWeights) {
  EXPECT_THROW(next_tier(AllocatorCursor{1, 1}, {1, 0}), ValidationError);
  EXPECT_THROW(next_tier(AllocatorCursor{0, 5}, {3, 1}), ValidationError);
  EXPECT_THROW(next_tier(AllocatorCursor{4, 1}, {3, 1}), ValidationError);
}

TEST(Allocate, Examples) {
  EXPECT_EQ(allocate(7, {5, 2}).counts(2), (std::vector<std::size_t>{5, 2}));
  EXPECT_EQ(allocate(0, {3, 1}).page_count(), 0u);
  EXPECT_EQ(allocate(1000, {3, 1}).counts(2), (std::vector<std::size_t>{750, 250}));
}

TEST(Allocate, MatchesDrivingNextTier) {
  const InterleaveWeights w{2, 5, 1};
  const auto map = allocate(97, w);
  const auto seq = emit(w, 97);
  for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(map.tier_of(i), seq[i]);
}

TEST(PageMap, Csv) {
  std::ostringstream out;
  allocate(5, {3, 1}).write_csv(out);
  EXPECT_EQ(out.str(), "page_index,tier_index\n0,0\n1,0\n2,0\n3,1\n4,0\n");
}

// Every aligned window of sum(w) pages holds exactly w_i pages of tier i.
TEST(AllocateProperty, WindowExactness) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto tiers = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const auto w = random_weights(rng, tiers, 12);
    const auto total = w.total();
    const auto map = allocate(total * 6, w);
    for (std::uint64_t start = 0; start < map.page_count(); start += total) {
      std::vector<std::uint64_t> counts(tiers, 0);
      for (std::uint64_t p = start; p < start + total; ++p) ++counts[map.tier_of(p)];
      for (std::size_t t = 0; t < tiers; ++t) ASSERT_EQ(counts[t], w[t]) << w.label();
    }
  }
}

TEST(AllocateProperty, FractionConvergenceAndZeroExclusion) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = random_weights(rng, 3, 9);
    const auto n = std::uniform_int_distribution<std::size_t>(1, 500)(rng);
    const auto counts = allocate(n, w).counts(3);
    for (std::size_t t = 0; t < 3; ++t) {
      const double observed = static_cast<double>(counts[t]) / static_cast<double>(n);
      EXPECT_LE(std::abs(observed - traffic_fraction(w, t)),
                static_cast<double>(w.total()) / static_cast<double>(n));
      if (!w.active(t)) {
        EXPECT_EQ(counts[t], 0u);
      }
    }
  }
}

TEST(AllocateProperty, FractionsScaleInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = random_weights(rng, 2, 25);
    const auto k = std::uniform_int_distribution<std::uint32_t>(1, 10)(rng);
    const InterleaveWeights scaled{w[0] * k, w[1] * k};
    for (std::size_t t = 0; t < 2; ++t) {
      EXPECT_DOUBLE_EQ(traffic_fraction(w, t), traffic_fraction(scaled, t));
    }
  }
}
