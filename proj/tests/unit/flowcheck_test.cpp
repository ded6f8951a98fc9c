#include <gtest/gtest.h>

#include "cvd/flowcheck.hpp"
#include "cvd/synth.hpp"

namespace cvd::flowcheck {
namespace {

ValidityMask mask_with(int w, int h, int n_valid) {
  ValidityMask m(w, h, 0);
  for (int k = 0; k < n_valid; ++k) m.values()[k] = 255;
  return m;
}

TEST(FbConsistency, PerfectInverseIsValidInBounds) {
  const int w = 20, h = 10;
  FlowField fwd(w, h, Eigen::Vector2d(3.0, -1.0));
  FlowField bwd(w, h, Eigen::Vector2d(-3.0, 1.0));
  const auto m = fb_consistency(fwd, bwd);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const bool in = x + 3 <= w - 1 && y - 1 >= 0;
      EXPECT_EQ(m(x, y) != 0, in) << x << "," << y;
    }
  }
}

TEST(FbConsistency, HandArithmetic) {
  FlowField fwd(10, 1, Eigen::Vector2d(5.0, 0.0));
  FlowField bwd(10, 1, Eigen::Vector2d(-5.0, 0.0));
  bwd(7, 0) = {-3.0, 0.0};  // error at x = 2 is |5 - 3| = 2 px
  const auto m = fb_consistency(fwd, bwd);
  EXPECT_EQ(m(2, 0), 0);
  EXPECT_EQ(m(1, 0), 255);
  EXPECT_EQ(m(3, 0), 255);
}

TEST(FbConsistency, ThresholdIsInclusiveAndMonotone) {
  FlowField fwd(4, 1, Eigen::Vector2d(1.0, 0.0));
  FlowField bwd(4, 1, Eigen::Vector2d(0.0, 0.0));  // error exactly 1 px
  EXPECT_EQ(count_valid(fb_consistency(fwd, bwd, 1.0)), 3u);
  EXPECT_EQ(count_valid(fb_consistency(fwd, bwd, 0.999)), 0u);
  FlowField noisy(16, 16);
  FlowField back(16, 16);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      noisy(x, y) = {0.1 * ((x * 7 + y * 3) % 11), 0.07 * ((x + y * 5) % 13) - 0.4};
      back(x, y) = {-0.05 * ((x * 3 + y) % 17), 0.03 * ((x * 11 + y) % 7)};
    }
  }
  for (double t : {0.1, 0.3, 0.6, 1.0, 2.0}) {
    const auto a = fb_consistency(noisy, back, t);
    const auto b = fb_consistency(noisy, back, t + 0.25);
    for (std::size_t k = 0; k < a.size(); ++k) {
      if (a.values()[k]) { EXPECT_TRUE(b.values()[k]); }
    }
  }
}

TEST(FbConsistency, SizeMismatch) {
  try {
    fb_consistency(FlowField(3, 3), FlowField(3, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
}

TEST(FbConsistency, OracleMovingPatchMasksOcclusionBoundary) {
  const auto spec = synth::moving_patch_scene(4);
  const auto r = synth::render(spec);
  const auto fw = synth::analytic_flow(spec, r, 0, 1);
  const auto bw = synth::analytic_flow(spec, r, 1, 0);
  const auto m = fb_consistency(fw.flow, bw.flow);
  // Wherever the oracle says the correspondence is visible with a clean
  // footprint, the analytic flows are mutually inverse.
  std::size_t visible = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (fw.visible(x, y)) {
        ++visible;
        EXPECT_EQ(m(x, y), 255) << x << "," << y;
      }
    }
  }
  EXPECT_GT(visible, m.size() / 2);
  // Rejected pixels lie within one pixel of a visibility change.
  for (int y = 1; y + 1 < m.height(); ++y) {
    for (int x = 1; x + 1 < m.width(); ++x) {
      if (m(x, y) || fw.visible(x, y)) continue;
      if (r.left.ids[0](x, y) < 0) continue;
      bool near_boundary = false;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) near_boundary |= fw.visible(x + dx, y + dy) == 0;
      EXPECT_TRUE(near_boundary);
    }
  }
}

TEST(OverlapAccept, BoundaryInclusive) {
  EXPECT_TRUE(overlap_accept(mask_with(10, 10, 100)));
  EXPECT_FALSE(overlap_accept(mask_with(10, 10, 19)));
  EXPECT_TRUE(overlap_accept(mask_with(10, 10, 20)));
  EXPECT_FALSE(overlap_accept(mask_with(10, 10, 0)));
  EXPECT_EQ(valid_ratio(mask_with(10, 10, 20)), 0.2);
}

TEST(OverlapAccept, RaisingThresholdNeverAccepts) {
  for (int n = 0; n <= 100; ++n) {
    const auto m = mask_with(10, 10, n);
    bool prev = true;
    for (double t = 0.0; t <= 1.0; t += 0.05) {
      const bool now = overlap_accept(m, t);
      EXPECT_FALSE(now && !prev);
      prev = now;
    }
  }
}

TEST(ExcludeDynamic, ClearsMovingPixels) {
  ValidityMask m(3, 1, 255);
  ValidityMask dyn(3, 1, 0);
  dyn(1, 0) = 255;
  exclude_dynamic(m, dyn);
  EXPECT_EQ(m(0, 0), 255);
  EXPECT_EQ(m(1, 0), 0);
  EXPECT_EQ(m(2, 0), 255);
  EXPECT_THROW(exclude_dynamic(m, ValidityMask(2, 1)), Error);
}

}  // namespace
}  // namespace cvd::flowcheck
