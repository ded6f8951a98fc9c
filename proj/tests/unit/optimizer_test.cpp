#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cvd/optimizer.hpp"
#include "cvd/synth.hpp"
#include "support/oracle.hpp"

namespace cvd::optimizer {
namespace {

const testing::OracleData& oracle() {
  static const auto d = testing::make_oracle(synth::resized(synth::plane_and_sphere_scene(8), 32, 24));
  return d;
}

TEST(GridSize, CapsAtImageAndKeepsAspect) {
  EXPECT_EQ(grid_size_for(640, 480, 384), (std::pair{384, 288}));
  EXPECT_EQ(grid_size_for(64, 48, 384), (std::pair{64, 48}));
  EXPECT_EQ(grid_size_for(48, 64, 16), (std::pair{12, 16}));
  EXPECT_THROW(grid_size_for(10, 10, 0), Error);
}

TEST(Decode, ConstantTheta) {
  DepthField f(2, 40, 30, 7, 5, std::log(2.0));
  const auto d = decode(f, 1);
  for (double v : d.values()) EXPECT_NEAR(v, 2.0, 1e-15);
}

TEST(Decode, FullResolutionIsPointwiseExp) {
  DepthField f(1, 5, 4, 5, 4);
  for (std::size_t k = 0; k < f.params().size(); ++k) f.params()[k] = 0.1 * k - 0.7;
  const auto d = decode(f, 0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) EXPECT_EQ(d(x, y), std::exp(f.at(0, x, y)));
}

TEST(Decode, MonotoneInEachParameter) {
  DepthField f(1, 20, 15, 6, 4, 1.0);
  for (std::size_t k = 0; k < f.params().size(); ++k) f.params()[k] += 0.01 * ((k * 7) % 5);
  const auto before = decode(f, 0);
  f.params()[9] += 0.3;
  const auto after = decode(f, 0);
  bool any_greater = false;
  for (std::size_t k = 0; k < before.size(); ++k) {
    EXPECT_GE(after.values()[k], before.values()[k]);
    any_greater |= after.values()[k] > before.values()[k];
  }
  EXPECT_TRUE(any_greater);
}

TEST(Decode, UpsamplingMatchesHandBilinear) {
  // 4 image pixels over 2 grid nodes: centers map to g = -0.25, 0.25, 0.75, 1.25.
  DepthField f(1, 4, 1, 2, 1);
  f.at(0, 0, 0) = 0.0;
  f.at(0, 1, 0) = 1.0;
  const auto d = decode(f, 0);
  EXPECT_NEAR(d(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(d(1, 0), std::exp(0.25), 1e-15);
  EXPECT_NEAR(d(2, 0), std::exp(0.75), 1e-15);
  EXPECT_NEAR(d(3, 0), std::exp(1.0), 1e-15);
}

TEST(BackpropDecode, MatchesFiniteDifferences) {
  DepthField f(1, 23, 17, 9, 7);
  for (std::size_t k = 0; k < f.params().size(); ++k) f.params()[k] = std::sin(0.37 * k);
  DepthMap w(23, 17);
  for (std::size_t k = 0; k < w.size(); ++k) w.values()[k] = std::cos(0.11 * k);
  auto objective = [&] {
    const auto d = decode(f, 0);
    double s = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) s += w.values()[k] * d.values()[k];
    return s;
  };
  std::vector<double> grad(f.params_per_frame(), 0.0);
  backprop_decode(f, decode(f, 0), w, grad);
  for (std::size_t k = 0; k < grad.size(); ++k) {
    const double base = f.params()[k];
    f.params()[k] = base + 1e-6;
    const double plus = objective();
    f.params()[k] = base - 1e-6;
    const double minus = objective();
    f.params()[k] = base;
    EXPECT_NEAR(grad[k], (plus - minus) / 2e-6, 1e-6 * (1.0 + std::abs(grad[k])));
  }
}

TEST(InitFromDepth, ConstantDepth) {
  std::vector<DepthMap> d = {DepthMap(50, 30, 3.25)};
  const auto f = init_from_depth(d, 20);
  EXPECT_EQ(f.grid_width(), 20);
  EXPECT_EQ(f.grid_height(), 12);
  const auto back = decode(f, 0);
  for (double v : back.values()) EXPECT_NEAR(v, 3.25, 1e-6);
}

TEST(InitFromDepth, FullResolutionRoundTrip) {
  DepthMap d(13, 9);
  for (std::size_t k = 0; k < d.size(); ++k) d.values()[k] = 1.0 + 0.37 * (k % 11);
  const auto f = init_from_depth(std::vector{d});
  const auto back = decode(f, 0);
  for (std::size_t k = 0; k < d.size(); ++k) EXPECT_NEAR(back.values()[k], d.values()[k], 1e-12);
}

TEST(InitFromDepth, RampWithinOnePercentRms) {
  auto spec = synth::static_plane_scene(2);
  spec.intrinsics = {200, 200, 99.5, 74.5, 200, 150};
  const auto r = synth::render(spec);
  const auto f = init_from_depth(r.left.depth, 64);
  const auto back = decode(f, 0);
  double sq = 0.0;
  for (std::size_t k = 0; k < back.size(); ++k) {
    const double rel = back.values()[k] / r.left.depth[0].values()[k] - 1.0;
    sq += rel * rel;
  }
  EXPECT_LT(std::sqrt(sq / back.size()), 0.01);
}

TEST(InitFromDepth, FillsUndefinedFromNearest) {
  DepthMap d(4, 1, 0.0);
  d(3, 0) = 5.0;
  const auto f = init_from_depth(std::vector{d});
  const auto back = decode(f, 0);
  for (double v : back.values()) EXPECT_NEAR(v, 5.0, 1e-12);
}

TEST(InitFromDepth, Errors) {
  try {
    init_from_depth(std::vector{DepthMap(3, 3, 0.0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllUndefined);
  }
  EXPECT_THROW(init_from_depth(std::vector<DepthMap>{}), Error);
  EXPECT_THROW(init_from_depth(std::vector{DepthMap(3, 3, 1.0), DepthMap(3, 2, 1.0)}), Error);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> theta = {1.0, -2.0, 3.5};
  const auto before = theta;
  auto st = AdamState::for_size(3, 4e-4);
  adam_step(st, theta, std::vector<double>(3, 0.0));
  EXPECT_EQ(theta, before);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepIsSignTimesLr) {
  std::vector<double> theta = {0.0, 0.0, 0.0, 0.0};
  const std::vector<double> g = {3.0, -0.02, 1e3, -7.5};
  auto st = AdamState::for_size(4, 4e-4);
  adam_step(st, theta, g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expected = -4e-4 * g[k] / (std::abs(g[k]) + 1e-8);
    EXPECT_NEAR(theta[k], expected, 1e-15);
    EXPECT_NEAR(theta[k], -4e-4 * (g[k] > 0 ? 1 : -1), 1e-6);
  }
}

TEST(Adam, ClosedFormSecondStep) {
  std::vector<double> theta = {0.5};
  auto st = AdamState::for_size(1, 0.01);
  adam_step(st, theta, std::vector{2.0});
  adam_step(st, theta, std::vector{-1.0});
  const double m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0;
  const double v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0;
  const double m_hat = m / (1 - 0.81);
  const double v_hat = v / (1 - 0.999 * 0.999);
  const double first = 0.5 - 0.01 * 2.0 / (2.0 + 1e-8);
  EXPECT_NEAR(theta[0], first - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
}

TEST(Adam, ConstantGradientMovesMonotonically) {
  std::vector<double> theta = {0.0};
  auto st = AdamState::for_size(1, 1e-3);
  double prev = theta[0];
  for (int k = 0; k < 5; ++k) {
    adam_step(st, theta, std::vector{0.3});
    EXPECT_LT(theta[0], prev);
    prev = theta[0];
  }
}

TEST(Adam, ShapeMismatch) {
  std::vector<double> theta = {0.0, 1.0};
  auto st = AdamState::for_size(2, 1e-3);
  try {
    adam_step(st, theta, std::vector{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(FinetuneConfig, Validation) {
  FinetuneConfig c;
  EXPECT_EQ(c.epochs, 20);
  EXPECT_EQ(c.batch_size, 4);
  EXPECT_EQ(c.lr, 4e-4);
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Finetune, FixedPointAtTruth) {
  const auto& d = oracle();
  const auto field = init_from_depth(d.rendering.left.depth);
  // The disparity term of a curved surface is not exactly zero under
  // bilinear interpolation, so only the spatial part is at its minimum.
  EXPECT_LT(mean_loss(d.cameras, d.constraints, field, {}).spatial, 1e-6);
}

TEST(Finetune, StaticPlaneTruthDoesNotMove) {
  const auto d = testing::make_oracle(synth::resized(synth::static_plane_scene(5), 32, 24));
  const auto field = init_from_depth(d.rendering.left.depth);
  const auto before = mean_loss(d.cameras, d.constraints, field, {});
  EXPECT_LT(before.total, 1e-6);
  // One full-batch step: the gradient at the truth is far below Adam's eps,
  // so the update is negligible. Later steps leave the kink of the smoothed
  // norm and move by about lr, as any L1-type objective would.
  FinetuneConfig c;
  c.epochs = 1;
  c.batch_size = static_cast<int>(d.constraints.size());
  const auto res = finetune(d.cameras, d.constraints, field, c);
  EXPECT_LT(res.history[0].mean_total, 1e-6);
  for (std::size_t k = 0; k < field.params().size(); ++k) {
    ASSERT_NEAR(res.field.params()[k], field.params()[k], 1e-6);
  }
}

TEST(Finetune, LossDecreasesFromPerturbation) {
  const auto& d = oracle();
  const auto field = synth::perturb(init_from_depth(d.rendering.left.depth),
                                    synth::PerturbKind::GaussianLog, 0.2, 4);
  FinetuneConfig c;
  const auto res = finetune(d.cameras, d.constraints, field, c);
  ASSERT_EQ(res.history.size(), 20u);
  int non_monotone = 0;
  for (std::size_t e = 1; e < res.history.size(); ++e) {
    non_monotone += res.history[e].mean_total > res.history[e - 1].mean_total;
  }
  EXPECT_LE(non_monotone, 2);
  EXPECT_LT(res.history.back().mean_total, res.history.front().mean_total);
  const auto after = mean_loss(d.cameras, d.constraints, res.field, {});
  EXPECT_LT(after.spatial, mean_loss(d.cameras, d.constraints, field, {}).spatial);
}

TEST(Finetune, SinglePairDescends) {
  const auto& d = oracle();
  std::vector<PairConstraints> one = {d.constraints[2]};
  const auto field = synth::perturb(init_from_depth(d.rendering.left.depth),
                                    synth::PerturbKind::GaussianLog, 0.2, 5);
  const auto before = mean_loss(d.cameras, one, field, {}).total;
  FinetuneConfig c;
  c.epochs = 1;
  const auto res = finetune(d.cameras, one, field, c);
  EXPECT_LT(mean_loss(d.cameras, one, res.field, {}).total, before);
}

TEST(Finetune, DeterministicAndThreadIndependent) {
  const auto& d = oracle();
  const auto field = synth::perturb(init_from_depth(d.rendering.left.depth),
                                    synth::PerturbKind::GaussianLog, 0.2, 6);
  FinetuneConfig c;
  c.epochs = 3;
  c.rng_seed = 77;
  const auto a = finetune(d.cameras, d.constraints, field, c);
  const auto b = finetune(d.cameras, d.constraints, field, c);
  c.threads = 3;
  const auto t = finetune(d.cameras, d.constraints, field, c);
  EXPECT_TRUE(a.field == b.field);
  EXPECT_TRUE(a.field == t.field);
  ASSERT_EQ(a.pair_log.size(), t.pair_log.size());
  for (std::size_t k = 0; k < a.pair_log.size(); ++k) {
    EXPECT_EQ(a.pair_log[k].breakdown.total, t.pair_log[k].breakdown.total);
  }
  c.threads = 1;
  c.rng_seed = 78;
  const auto other = finetune(d.cameras, d.constraints, field, c);
  EXPECT_FALSE(a.field == other.field);
}

TEST(Finetune, GaugeStability) {
  const auto& d = oracle();
  const auto field = synth::perturb(init_from_depth(d.rendering.left.depth),
                                    synth::PerturbKind::GaussianLog, 0.2, 8);
  FinetuneConfig c;
  c.epochs = 3;
  c.loss.lambda = 0.0;  // the disparity term rescales with the gauge
  const auto base = finetune(d.cameras, d.constraints, field, c);
  const double s = 2.5;
  auto cams = d.cameras;
  for (auto& cam : cams) cam.pose.t *= s;
  auto scaled_field = field;
  for (double& v : scaled_field.params()) v += std::log(s);
  const auto scaled = finetune(cams, d.constraints, scaled_field, c);
  for (std::size_t e = 0; e < base.history.size(); ++e) {
    EXPECT_NEAR(base.history[e].mean_spatial, scaled.history[e].mean_spatial, 1e-6);
  }
}

TEST(Finetune, SmoothnessTermPullsTowardsNeighbours) {
  const auto& d = oracle();
  const auto field = synth::perturb(init_from_depth(d.rendering.left.depth),
                                    synth::PerturbKind::GaussianLog, 0.2, 10);
  auto roughness = [](const DepthField& f) {
    double s = 0.0;
    for (int fr = 0; fr < f.frames(); ++fr)
      for (int y = 0; y < f.grid_height(); ++y)
        for (int x = 0; x + 1 < f.grid_width(); ++x) s += std::pow(f.at(fr, x, y) - f.at(fr, x + 1, y), 2);
    return s;
  };
  FinetuneConfig c;
  c.epochs = 2;
  const auto plain = finetune(d.cameras, d.constraints, field, c);
  c.smooth_weight = 10.0;
  const auto smooth = finetune(d.cameras, d.constraints, field, c);
  EXPECT_LT(roughness(smooth.field), roughness(plain.field));
}

TEST(Finetune, Errors) {
  const auto& d = oracle();
  const auto field = init_from_depth(d.rendering.left.depth);
  try {
    finetune(d.cameras, std::vector<PairConstraints>{}, field, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoAcceptedPairs);
  }
  // Every mask empty: nothing can be evaluated.
  auto empty = d.constraints;
  for (auto& pc : empty) {
    for (auto& v : pc.forward.mask.values()) v = 0;
    for (auto& v : pc.backward->mask.values()) v = 0;
  }
  try {
    finetune(d.cameras, empty, field, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoAcceptedPairs);
  }
  // A non-finite camera makes the loss non-finite; the message names the pair.
  auto cams = d.cameras;
  cams[1].intrinsics.fx = std::numeric_limits<double>::infinity();
  try {
    FinetuneConfig c;
    c.epochs = 1;
    finetune(cams, d.constraints, field, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("("), std::string::npos);
  }
}

}  // namespace
}  // namespace cvd::optimizer
