#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tpsmooth/metrics.hpp"
#include "tpsmooth/rng.hpp"
#include "tpsmooth/synth.hpp"

using namespace tpsmooth;
using namespace tpsmooth::synth;

namespace {

SceneSpec single_disk(double vx, double vy, int frames = 5) {
  SceneSpec s;
  s.width = 64;
  s.height = 48;
  s.frame_count = frames;
  ShapeSpec d;
  d.radius = 6;
  d.start_x = 20;
  d.start_y = 24;
  d.velocity_x = vx;
  d.velocity_y = vy;
  s.shapes = {d};
  return s;
}

double mean_tiou(const std::vector<std::vector<Mask>>& masks) {
  double s = 0;
  for (std::size_t t = 1; t < masks.size(); ++t) s += metrics::temporal_iou(masks[t][0], masks[t - 1][0]);
  return s / static_cast<double>(masks.size() - 1);
}

}  // namespace

TEST(Rng, ReferenceConstants) {
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFull);
  EXPECT_EQ(fnv1a(""), 0xCBF29CE484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xAF63DC4C8601EC8Cull);
}

TEST(Rng, StreamsAreDeterministicAndDistinct) {
  Rng a = Rng::stream(42, "noise", 3), b = Rng::stream(42, "noise", 3), c = Rng::stream(42, "noise", 4),
      d = Rng::stream(42, "jitter", 3);
  const auto x = a.next_u64();
  EXPECT_EQ(x, b.next_u64());
  EXPECT_NE(x, c.next_u64());
  EXPECT_NE(x, d.next_u64());
}

TEST(Rng, MomentsAreSane) {
  Rng r(9);
  double su = 0, sn = 0, sn2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = r.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Generate, StaticShapeHasZeroFlowAndFixedMasks) {
  const Sequence seq = generate(single_disk(0, 0));
  for (const FlowField& f : seq.flow) EXPECT_EQ(f, FlowField(64, 48));
  for (const auto& m : seq.masks) EXPECT_EQ(m[0], seq.masks[0][0]);
}

TEST(Generate, LinearMotionTranslatesMask) {
  const Sequence seq = generate(single_disk(2, 0));
  for (std::size_t t = 1; t < seq.masks.size(); ++t) {
    const Mask& prev = seq.masks[t - 1][0];
    const Mask& cur = seq.masks[t][0];
    for (int y = 0; y < 48; ++y)
      for (int x = 2; x < 64; ++x) ASSERT_EQ(cur(x, y), prev(x - 2, y));
    EXPECT_FLOAT_EQ(seq.flow[t - 1].u(20 + 2 * static_cast<int>(t - 1), 24), 2.f);
    EXPECT_FLOAT_EQ(seq.flow[t - 1].u(2, 2), 0.f);
  }
}

TEST(Generate, DeterministicForFixedSeed) {
  const SceneSpec s = preset_two_object_scene(5);
  const Sequence a = generate(s), b = generate(s);
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_EQ(a.masks, b.masks);
  EXPECT_EQ(a.flow, b.flow);
  for (const GrayFrame& f : a.frames)
    for (float v : f.values()) {
      ASSERT_GE(v, 0.f);
      ASSERT_LE(v, 255.f);
    }
}

TEST(Generate, DiscIouMatchesAnalyticOverlap) {
  SceneSpec s = single_disk(2, 0, 3);
  s.width = 96;
  s.shapes[0].radius = 20;
  s.shapes[0].start_x = 40;
  const Sequence seq = generate(s);
  EXPECT_NEAR(metrics::temporal_iou(seq.masks[1][0], seq.masks[0][0]), oracle::disc_translation_iou(20, 2), 0.01);
}

TEST(Generate, SpecValidation) {
  EXPECT_THROW(generate(single_disk(10, 0, 5)), ConfigError);
  SceneSpec s = single_disk(0, 0);
  s.frame_count = 1;
  EXPECT_THROW(s.validate(), ConfigError);
  s = single_disk(0, 0);
  s.shapes.push_back(s.shapes[0]);
  EXPECT_THROW(s.validate(), ConfigError);
  s = single_disk(0, 0);
  s.margin = 15;
  EXPECT_THROW(s.validate(), ConfigError);
  DegradationSpec d;
  d.flicker_scale = 1.0;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(Degrade, ZeroSpecThresholdsBackToGroundTruth) {
  const Sequence seq = generate(preset_two_object_scene(3));
  const auto probs = degrade(seq.masks, DegradationSpec{});
  for (std::size_t t = 0; t < probs.size(); ++t)
    for (std::size_t k = 0; k < probs[t].size(); ++k) EXPECT_EQ(threshold_mask(probs[t][k], 0.5), seq.masks[t][k]);
}

TEST(Degrade, FullDropoutZeroesEveryPlane) {
  const Sequence seq = generate(single_disk(1, 0));
  DegradationSpec d;
  d.dropout_prob = 1.0;
  d.logit_noise_std = 1.0;
  for (const auto& row : degrade(seq.masks, d)) {
    EXPECT_EQ(row[0], ScalarField(64, 48, 0.f));
    EXPECT_EQ(metrics::dropout_indicator(threshold_mask(row[0], 0.5)), 1);
  }
}

TEST(Degrade, DropoutFramesFollowTheirStream) {
  SceneSpec s = single_disk(0.1, 0, 100);
  const Sequence seq = generate(s);
  DegradationSpec d;
  d.dropout_prob = 0.05;
  d.seed = 42;
  const auto probs = degrade(seq.masks, d);
  int dropped = 0;
  for (std::size_t t = 0; t < probs.size(); ++t) {
    const bool expected = Rng::stream(42, "dropout", stream_index(t, 0)).bernoulli(0.05);
    EXPECT_EQ(metrics::dropout_indicator(threshold_mask(probs[t][0], 0.5)), expected ? 1 : 0) << "frame " << t;
    dropped += expected;
  }
  EXPECT_GT(dropped, 0);
  EXPECT_LT(dropped, 15);
}

TEST(Degrade, JitterLowersTemporalIou) {
  const Sequence seq = generate(preset_disk_scene(42));
  DegradationSpec d;
  d.jitter_std = 2.0;
  d.seed = 42;
  const auto probs = degrade(seq.masks, d);
  std::vector<std::vector<Mask>> masks;
  for (const auto& row : probs) masks.push_back({threshold_mask(row[0], 0.5)});
  EXPECT_LT(mean_tiou(masks), mean_tiou(seq.masks));
}

// Holds while noise is small against the logit amplitude: each pixel flips
// with probability Phi(-L / std), so unequal foreground and background
// counts bias the area by (n_bg - n_fg) * Phi(-L / std).
TEST(Degrade, LogitNoisePreservesAreaOnAverage) {
  const Sequence seq = generate(single_disk(0, 0, 2));
  const double gt_area = static_cast<double>(count_foreground(seq.masks[0][0]));
  double area = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    DegradationSpec d;
    d.logit_noise_std = 1.0;
    d.seed = static_cast<std::uint64_t>(s);
    area += static_cast<double>(count_foreground(threshold_mask(degrade_plane(seq.masks[0][0], d, 0, 0), 0.5)));
  }
  EXPECT_NEAR(area / seeds / gt_area, 1.0, 0.02);
}

TEST(Degrade, PlanesAreProbabilities) {
  const Sequence seq = generate(preset_disk_scene(8));
  for (const auto& row : degrade(seq.masks, preset_flicker_degradation(8)))
    for (float v : row[0].values()) {
      ASSERT_GE(v, 0.f);
      ASSERT_LE(v, 1.f);
    }
}
