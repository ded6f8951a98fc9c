#pragma once

#include <vector>

namespace cvd {

struct FramePair {
  int i = 0;
  int j = 0;

  int gap() const noexcept { return j - i; }
  bool operator==(const FramePair&) const = default;
};

/// Sampled frame pairs, normalized to i < j, sorted by (gap, i).
struct FramePairSet {
  std::vector<FramePair> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
};

/// Dyadic hierarchy: all consecutive pairs, plus for every level
/// 1 <= l <= floor(log2(N - 1)) the pairs at distance 2^l whose first index is
/// a multiple of 2^(l-1). Throws TooFewFrames for n_frames < 2.
FramePairSet sample_pairs(int n_frames);

}  // namespace cvd
