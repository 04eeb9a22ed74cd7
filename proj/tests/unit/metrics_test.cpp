#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "abm/metrics.hpp"

#include "metric_oracles.hpp"

namespace abm {
namespace {

using namespace oracle;

// ---- Tests ----

TEST(Metrics, PerfectPredictionIsExactlyZero) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto m = random_matte(9, 11, s);
    EXPECT_EQ(sad(m, m), 0.0);
    EXPECT_EQ(mse(m, m), 0.0);
    EXPECT_EQ(gradient_error(m, m), 0.0);
    EXPECT_EQ(connectivity_error(m, m), 0.0);
  }
}

TEST(Metrics, ConstantErrorCases) {
  AlphaMatte a(6, 7, 0.5), b(6, 7, 0.504), c(6, 7, 0.52);
  EXPECT_NEAR(sad(a, b), 4.0, 1e-9);
  EXPECT_NEAR(mse(a, c), 0.4, 1e-9);
  EXPECT_NEAR(gradient_error(AlphaMatte(8, 8, 0.1), AlphaMatte(8, 8, 0.9)), 0.0, 1e-15);
  EXPECT_THROW(sad(AlphaMatte(2, 2), AlphaMatte(2, 3)), ShapeError);
}

TEST(Metrics, MatchBruteForceOraclesOnRandomPairs) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const bool blocky = s % 2;
    auto p = blocky ? blocky_matte(8, 8, 100 + s) : random_matte(8, 8, 100 + s);
    auto g = blocky ? blocky_matte(8, 8, 200 + s) : random_matte(8, 8, 200 + s);
    EXPECT_NEAR(sad(p, g), oracle_sad(p, g), 1e-9);
    EXPECT_NEAR(mse(p, g), oracle_mse(p, g), 1e-9);
    EXPECT_NEAR(gradient_error(p, g), oracle_gradient(p, g), 1e-9);
    EXPECT_NEAR(connectivity_error(p, g), oracle_connectivity(p, g), 1e-9);
  }
}

TEST(Metrics, SymmetryAndFlipInvariance) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto p = random_matte(10, 13, 300 + s), g = random_matte(10, 13, 400 + s);
    EXPECT_DOUBLE_EQ(sad(p, g), sad(g, p));
    EXPECT_DOUBLE_EQ(mse(p, g), mse(g, p));
    EXPECT_NEAR(gradient_error(p, g), gradient_error(g, p), 1e-12);
    const auto fp = flip_horizontal(p), fg = flip_horizontal(g);
    EXPECT_NEAR(sad(fp, fg), sad(p, g), 1e-9);
    EXPECT_NEAR(mse(fp, fg), mse(p, g), 1e-9);
    EXPECT_NEAR(gradient_error(fp, fg), gradient_error(p, g), 1e-9);
    EXPECT_NEAR(connectivity_error(fp, fg), connectivity_error(p, g), 1e-9);
  }
}

TEST(Metrics, SadAndMseVanishOnlyOnEquality) {
  auto p = random_matte(5, 5, 1);
  auto q = p;
  q.at(2, 3) += 1e-6;
  EXPECT_GT(sad(p, q), 0.0);
  EXPECT_GT(mse(p, q), 0.0);
}

TEST(Gradient, ShiftedStepEdgeMatchesReferenceConvolution) {
  AlphaMatte a(16, 16), b(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      a.at(y, x) = x >= 7;
      b.at(y, x) = x >= 9;
    }
  const double e = gradient_error(a, b);
  EXPECT_GT(e, 0.0);
  EXPECT_NEAR(e, oracle_gradient(a, b), 1e-9);
  // Smaller than the kernel: still defined through edge replication.
  EXPECT_NEAR(gradient_error(random_matte(3, 2, 5), random_matte(3, 2, 6)),
              oracle_gradient(random_matte(3, 2, 5), random_matte(3, 2, 6)), 1e-9);
}

TEST(Components, LargestComponentExamples) {
  EXPECT_EQ(largest_connected_component(BinaryMap(4, 4, false)).count(), 0u);
  EXPECT_EQ(largest_connected_component(BinaryMap(4, 4, true)).count(), 16u);
  BinaryMap m(5, 6);
  for (int x = 0; x < 3; ++x) m.set(0, x, true);  // size 3
  for (int y = 2; y < 5; ++y) m.set(y, 4, true);  // size 5 (an L shape)
  m.set(4, 5, true);
  m.set(3, 5, true);
  auto lcc = largest_connected_component(m);
  EXPECT_EQ(lcc.count(), 5u);
  EXPECT_TRUE(lcc.at(2, 4));
  EXPECT_FALSE(lcc.at(0, 0));
  // Diagonal neighbours are not connected.
  BinaryMap diag(2, 2);
  diag.set(0, 0, true);
  diag.set(1, 1, true);
  auto d = largest_connected_component(diag);
  EXPECT_EQ(d.count(), 1u);
  EXPECT_TRUE(d.at(0, 0));  // tie goes to the first raster pixel
  auto tied = largest_components_union(diag);
  EXPECT_EQ(tied.count(), 2u);
  EXPECT_EQ(largest_components_union(m), lcc);
}

TEST(Connectivity, BinaryBlobLevelsEqualMatte) {
  auto blob = disc(16, 16, 7.5, 6.0, 4.5);
  BinaryMap omega = largest_connected_component(threshold_map(blob, 0.5));
  auto levels = connectivity_levels(blob, omega);
  EXPECT_EQ(levels, blob);
  EXPECT_EQ(connectivity_error(blob, blob), 0.0);
  // Identical binary mattes of any topology.
  AlphaMatte rings = disc(16, 16, 8, 8, 7);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      if (std::hypot(y - 8, x - 8) < 3) rings.at(y, x) = 0.0;
  rings.at(0, 0) = 1.0;
  EXPECT_EQ(connectivity_error(rings, rings), 0.0);
}

TEST(Connectivity, DetachedSatelliteIsPenalised) {
  auto gt = disc(16, 16, 6, 6, 3.5);
  auto pred = gt;
  for (int y = 11; y < 14; ++y)
    for (int x = 11; x < 14; ++x) pred.at(y, x) = 0.4;
  const double e = connectivity_error(pred, gt);
  EXPECT_GT(e, 0.0);
  EXPECT_NEAR(e, oracle_connectivity(pred, gt), 1e-9);
  // Satellite pixels have l = 0, d = 0.4, phi = 0.6; gt there has phi = 1.
  EXPECT_NEAR(e, 1e3 * 9 * 0.4 / 256, 1e-9);
}

TEST(Connectivity, EmptyOmegaUsesZeroLevels) {
  AlphaMatte pred(6, 6, 0.3), gt(6, 6, 0.0);
  const auto l = connectivity_levels(pred, BinaryMap(6, 6, false));
  for (double v : l.data()) EXPECT_EQ(v, 0.0);
  EXPECT_NEAR(connectivity_error(pred, gt), 1e3 * 0.3, 1e-9);
  EXPECT_NEAR(connectivity_error(pred, gt), oracle_connectivity(pred, gt), 1e-9);
}

TEST(BgDifference, Cases) {
  Frame a(4, 5, 0.3);
  EXPECT_EQ(bg_difference(a, a), 0.0);
  EXPECT_NEAR(bg_difference(a, Frame(4, 5, 0.4)), 0.1, 1e-15);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  Frame p(3, 4), q(3, 4);
  for (double& v : p.data()) v = u(rng);
  for (double& v : q.data()) v = u(rng);
  double s = 0;
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) s += std::abs(p.at(y, x, c) - q.at(y, x, c)) / 3;
  EXPECT_NEAR(bg_difference(p, q), s / 12, 1e-15);
}

TEST(MaskIou, CountsOverlapWithStrictGroundTruthThreshold) {
  AlphaMatte p(1, 4, std::vector<double>{0.5, 0.9, 0.1, 0.0});
  AlphaMatte g(1, 4, std::vector<double>{0.5, 1.0, 0.7, 0.0});
  EXPECT_DOUBLE_EQ(mask_iou(p, g), 1.0 / 3.0);
  EXPECT_EQ(mask_iou(AlphaMatte(2, 2), AlphaMatte(2, 2)), 1.0);
  EXPECT_THROW(mask_iou(AlphaMatte(2, 2), AlphaMatte(2, 3)), ShapeError);
}

TEST(Evaluate, AveragesFramesAndSerializes) {
  SyntheticClip clip;
  for (std::uint64_t s = 0; s < 2; ++s) clip.samples.push_back({Frame(8, 8), random_matte(8, 8, s), Frame(8, 8), Frame(8, 8)});
  std::vector<AlphaMatte> perfect = {clip.samples[0].alpha_gt, clip.samples[1].alpha_gt};
  auto zero = evaluate_clip(perfect, clip);
  EXPECT_EQ(zero.sad + zero.mse + zero.gradient + zero.connectivity, 0.0);

  std::vector<AlphaMatte> pred = {random_matte(8, 8, 10), random_matte(8, 8, 11)};
  auto r = evaluate_clip(pred, clip, 2);
  const auto f0 = evaluate_frame(pred[0], clip.samples[0].alpha_gt);
  const auto f1 = evaluate_frame(pred[1], clip.samples[1].alpha_gt);
  EXPECT_DOUBLE_EQ(r.sad, (f0.sad + f1.sad) / 2);
  EXPECT_DOUBLE_EQ(r.connectivity, (f0.connectivity + f1.connectivity) / 2);
  EXPECT_EQ(r.n_frames, 2u);
  auto single = evaluate_mattes({pred[0]}, {clip.samples[0].alpha_gt});
  EXPECT_EQ(single.gradient, f0.gradient);
  auto j = to_json(r);
  for (const char* key : {"sad", "mse", "gradient", "connectivity", "n_frames", "per_frame"}) EXPECT_TRUE(j.contains(key));
  EXPECT_EQ(j["per_frame"].size(), 2u);
  EXPECT_THROW(evaluate_clip({pred[0]}, clip), InputError);
}

}  // namespace
}  // namespace abm
