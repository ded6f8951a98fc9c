#include "cvd/pairing.hpp"

#include <algorithm>
#include <string>

#include "cvd/error.hpp"

namespace cvd {

FramePairSet sample_pairs(int n_frames) {
  if (n_frames < 2) {
    throw Error(ErrorCode::TooFewFrames, "need at least 2 frames, got " + std::to_string(n_frames));
  }
  FramePairSet set;
  for (int i = 0; i + 1 < n_frames; ++i) set.pairs.push_back({i, i + 1});

  // floor(log2(N - 1)) without floating point.
  int max_level = 0;
  while ((2 << max_level) <= n_frames - 1) ++max_level;

  for (int level = 1; level <= max_level; ++level) {
    const int gap = 1 << level;
    const int stride = 1 << (level - 1);
    // |i - j| = gap and i mod stride == 0. Because gap is a multiple of
    // stride, the reversed ordering admits exactly the same unordered pairs.
    for (int i = 0; i + gap < n_frames; i += stride) set.pairs.push_back({i, i + gap});
  }
  // Levels have distinct gaps, so no duplicates arise; the sort fixes the
  // canonical (gap, i) order.
  std::sort(set.pairs.begin(), set.pairs.end(), [](const FramePair& a, const FramePair& b) {
    return a.gap() != b.gap() ? a.gap() < b.gap() : a.i < b.i;
  });
  return set;
}

}  // namespace cvd
