#include <algorithm>
#include <set>
#include <utility>

#include <gtest/gtest.h>

#include "cvd/error.hpp"
#include "cvd/pairing.hpp"

namespace cvd {
namespace {

// Direct enumeration of the level sets over all (i, j), independent of the
// library's construction.
std::set<std::pair<int, int>> brute_force(int n) {
  std::set<std::pair<int, int>> s;
  int max_level = 0;
  while ((1 << (max_level + 1)) <= n - 1) ++max_level;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (j - i == 1) s.insert({i, j});
      for (int l = 1; l <= max_level; ++l) {
        if (j - i == (1 << l) && i % (1 << (l - 1)) == 0) s.insert({i, j});
      }
    }
  }
  return s;
}

TEST(SamplePairs, TwoFrames) {
  const auto s = sample_pairs(2);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.pairs[0], (FramePair{0, 1}));
}

TEST(SamplePairs, FiveFramesExactList) {
  const std::vector<FramePair> expected = {{0, 1}, {1, 2}, {2, 3}, {3, 4},
                                           {0, 2}, {1, 3}, {2, 4}, {0, 4}};
  EXPECT_EQ(sample_pairs(5).pairs, expected);
}

TEST(SamplePairs, NineFrames) { EXPECT_EQ(sample_pairs(9).size(), 19u); }

TEST(SamplePairs, TooFewFrames) {
  for (int n : {-3, 0, 1}) {
    try {
      sample_pairs(n);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::TooFewFrames);
    }
  }
}

TEST(SamplePairs, MatchesBruteForceAndIsOrdered) {
  for (int n = 2; n <= 300; ++n) {
    const auto s = sample_pairs(n);
    const auto expected = brute_force(n);
    std::set<std::pair<int, int>> got;
    for (const auto& p : s.pairs) {
      ASSERT_LT(p.i, p.j);
      got.insert({p.i, p.j});
    }
    ASSERT_EQ(got.size(), s.size()) << "duplicates at N=" << n;
    ASSERT_EQ(got, expected) << "N=" << n;
    ASSERT_TRUE(std::is_sorted(s.pairs.begin(), s.pairs.end(), [](auto a, auto b) {
      return std::pair(a.gap(), a.i) < std::pair(b.gap(), b.i);
    }));
  }
}

TEST(SamplePairs, GrowsLinearly) {
  // The l = 1 level taken literally contributes N - 2 pairs, so the total
  // stays below 3N rather than 2N.
  for (int n = 2; n <= 4096; ++n) ASSERT_LT(sample_pairs(n).size(), 3u * n) << n;
  EXPECT_LT(sample_pairs(8).size(), 16u);
  EXPECT_GE(sample_pairs(9).size(), 18u);
}

TEST(SamplePairs, EveryFrameReachableFromZero) {
  for (int n : {2, 3, 17, 100, 513}) {
    std::vector<bool> seen(n, false);
    seen[0] = true;
    const auto s = sample_pairs(n);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& p : s.pairs) {
        if (seen[p.i] != seen[p.j]) {
          seen[p.i] = seen[p.j] = true;
          changed = true;
        }
      }
    }
    EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) << n;
  }
}

}  // namespace
}  // namespace cvd
