#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tpsmooth/smoother.hpp"
#include "tpsmooth/synth.hpp"

using namespace tpsmooth;

namespace {

ScalarField uniform_field(int w, int h, std::uint64_t seed, float lo = 0.f, float hi = 1.f) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> dist(lo, hi);
  ScalarField f(w, h);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = dist(gen);
  return f;
}

GrayFrame textured(int w, int h, std::uint64_t seed) { return synth::translation_pair(w, h, 0, 0, seed).first; }

}  // namespace

TEST(Entropy, ClosedFormValues) {
  const ScalarField p(4, 1, std::vector<float>{0.5f, 0.f, 1.f, 0.9f});
  const ScalarField r = entropy_map(p);
  EXPECT_NEAR(r[0], std::numbers::ln2, 1e-7);
  EXPECT_EQ(r[1], 0.f);
  EXPECT_EQ(r[2], 0.f);
  EXPECT_NEAR(r[3], static_cast<double>(oracle::binary_entropy(0.9f)), 1e-7);
  EXPECT_NEAR(r[3], 0.325083, 1e-6);
  EXPECT_NEAR(entropy_map(p, true)[0], 1.0, 1e-7);
}

TEST(Entropy, RangeAndErrors) {
  const ScalarField r = entropy_map(uniform_field(50, 50, 1));
  for (float v : r.values()) {
    EXPECT_GE(v, 0.f);
    EXPECT_LE(v, static_cast<float>(std::numbers::ln2));
  }
  EXPECT_THROW(entropy_map(ScalarField(1, 1, 1.5f)), InvalidInput);
  EXPECT_THROW(entropy_map(ScalarField(1, 1, -0.1f)), InvalidInput);
}

TEST(Blend, ClosedFormValues) {
  const FusionParams params;
  EXPECT_NEAR(blend_coefficient(ScalarField(1, 1, 0.3f), ScalarField(1, 1, 0.3f), params)[0], 0.5, 1e-5);
  EXPECT_FLOAT_EQ(blend_coefficient(ScalarField(1, 1, 0.f), ScalarField(1, 1, 0.7f), params)[0], 0.05f);
  const float k = blend_coefficient(ScalarField(1, 1, 0.393469f), ScalarField(1, 1, 0.693147f), params)[0];
  EXPECT_NEAR(k, 0.393469 / (0.393469 + 0.693147 + 1e-6), 1e-7);
  // The quotient is 0.362105; 0.36213 is a loose rounding of it.
  EXPECT_NEAR(k, 0.36213, 1e-4);
  EXPECT_FLOAT_EQ(blend_coefficient(ScalarField(1, 1, 0.99f), ScalarField(1, 1, 0.f), params)[0], 0.95f);
  EXPECT_THROW(blend_coefficient(ScalarField(2, 1), ScalarField(1, 2), params), InvalidInput);
}

TEST(Blend, BoundedOnRandomFields) {
  const FusionParams params;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScalarField k = blend_coefficient(uniform_field(40, 40, seed, 0.f, 0.9999f),
                                            uniform_field(40, 40, seed + 1000, 0.f, 0.6931f), params);
    for (float v : k.values()) {
      EXPECT_GE(v, 0.05f);
      EXPECT_LE(v, 0.95f);
    }
  }
}

TEST(Blend, AblationConstants) {
  FusionParams both;
  both.disable_motion_uncertainty = true;
  both.disable_entropy = true;
  const ScalarField k = blend_coefficient(uniform_field(30, 30, 3), uniform_field(30, 30, 4), both);
  const float expected = static_cast<float>(0.5 / (1.0 + 1e-6));
  for (float v : k.values()) EXPECT_EQ(v, expected);

  FusionParams no_q;
  no_q.disable_motion_uncertainty = true;
  const ScalarField r = uniform_field(10, 10, 5, 0.f, 0.69f);
  const ScalarField kq = blend_coefficient(ScalarField(10, 10, 0.f), r, no_q);
  for (std::size_t i = 0; i < r.size(); ++i) {
    EXPECT_FLOAT_EQ(kq[i], static_cast<float>(std::clamp(0.5 / (0.5 + r[i] + 1e-6), 0.05, 0.95)));
  }
}

TEST(Fuse, ClosedFormValues) {
  EXPECT_FLOAT_EQ(fuse(ScalarField(1, 1, 0.7f), ScalarField(1, 1, 0.7f), ScalarField(1, 1, 0.3f))[0], 0.7f);
  EXPECT_FLOAT_EQ(fuse(ScalarField(1, 1, 1.f), ScalarField(1, 1, 0.f), ScalarField(1, 1, 0.95f))[0], 0.95f);
  EXPECT_FLOAT_EQ(fuse(ScalarField(1, 1, 0.2f), ScalarField(1, 1, 0.8f), ScalarField(1, 1, 0.5f))[0], 0.5f);
  EXPECT_THROW(fuse(ScalarField(1, 1), ScalarField(1, 1), ScalarField(1, 1, 1.5f)), InvalidInput);
  EXPECT_THROW(fuse(ScalarField(1, 1), ScalarField(2, 1), ScalarField(1, 1)), InvalidInput);
}

TEST(Fuse, ConvexOnRandomFields) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ScalarField p = uniform_field(32, 32, seed), q = uniform_field(32, 32, seed + 77);
    const ScalarField k = uniform_field(32, 32, seed + 999, 0.05f, 0.95f);
    const ScalarField out = fuse(p, q, k);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_GE(out[i], std::min(p[i], q[i]));
      EXPECT_LE(out[i], std::max(p[i], q[i]));
    }
  }
}

TEST(FusionMode, ParsingAndValidation) {
  FusionParams p;
  parse_fusion_mode("fixed:0.25", p);
  EXPECT_EQ(p.mode, FusionMode::kFixed);
  EXPECT_DOUBLE_EQ(p.fixed_weight, 0.25);
  EXPECT_EQ(to_string(p.mode, p.fixed_weight), "fixed:0.25");
  parse_fusion_mode("passthrough", p);
  EXPECT_EQ(p.mode, FusionMode::kPassthrough);
  EXPECT_THROW(parse_fusion_mode("fixed:abc", p), ConfigError);
  EXPECT_THROW(parse_fusion_mode("fixed:1.5", p), ConfigError);
  EXPECT_THROW(parse_fusion_mode("median", p), ConfigError);
  FusionParams bad;
  bad.kappa_min = 0.9;
  bad.kappa_max = 0.1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = {};
  bad.epsilon = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SmoothStep, FirstFramePassesThrough) {
  SmootherState state;
  const std::vector<ScalarField> probs{uniform_field(24, 24, 1), uniform_field(24, 24, 2)};
  const StepResult r = smooth_step(state, nullptr, textured(24, 24, 1), probs, {});
  EXPECT_EQ(r.refined, probs);
  EXPECT_EQ(state.frame_index, 1u);
}

TEST(SmoothStep, MissingPreviousFrameIsSequencingError) {
  SmootherState state;
  const GrayFrame f = textured(24, 24, 1);
  smooth_step(state, nullptr, f, {uniform_field(24, 24, 1)}, {});
  EXPECT_THROW(smooth_step(state, nullptr, f, {uniform_field(24, 24, 2)}, {}), SequencingError);
  SmootherState fresh;
  smooth_step(fresh, nullptr, f, {uniform_field(24, 24, 1)}, {});
  EXPECT_THROW(smooth_step(fresh, &f, f, {uniform_field(24, 24, 1), uniform_field(24, 24, 2)}, {}), SequencingError);
}

TEST(SmoothStep, StaticSceneIsAFixedPoint) {
  const GrayFrame f = textured(48, 48, 3);
  const ScalarField p = uniform_field(48, 48, 8);
  SmootherState state;
  smooth_step(state, nullptr, f, {p}, {});
  const StepResult r = smooth_step(state, &f, f, {p}, {});
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(r.refined[0][i], p[i], 1e-6);
}

TEST(SmoothStep, FixedWeightIsClippedToBounds) {
  const GrayFrame a = textured(32, 32, 4);
  SmoothParams params;
  params.keep_planes = true;
  parse_fusion_mode("fixed:1.0", params.fusion);
  SmootherState state;
  smooth_step(state, nullptr, a, {uniform_field(32, 32, 1)}, params);
  const StepResult r = smooth_step(state, &a, a, {uniform_field(32, 32, 2)}, params);
  for (float k : r.diagnostics.blend[0].values()) EXPECT_EQ(k, 0.95f);
}

TEST(SmoothStep, ResponsivenessFloor) {
  // A persistent jump from 0 to 1 is tracked at least geometrically.
  const GrayFrame f = textured(32, 32, 6);
  SmootherState state;
  smooth_step(state, nullptr, f, {ScalarField(32, 32, 0.f)}, {});
  double lag = 1.0;
  int crossed_at = -1;
  for (int t = 1; t <= 30; ++t) {
    const StepResult r = smooth_step(state, &f, f, {ScalarField(32, 32, 1.f)}, {});
    lag *= 0.95;
    EXPECT_GE(r.refined[0](16, 16), 1.0 - lag - 1e-5);
    if (crossed_at < 0 && r.refined[0](16, 16) > 0.5f) crossed_at = t;
  }
  EXPECT_GT(crossed_at, 0);
  EXPECT_LE(crossed_at, 14);
}

TEST(RunSequence, PassthroughAndSingleFrame) {
  const auto scene = synth::preset_disk_scene(42);
  const auto seq = synth::generate(scene);
  const auto probs = synth::degrade(seq.masks, synth::preset_flicker_degradation(42));
  SmoothParams params;
  params.fusion.mode = FusionMode::kPassthrough;
  const std::vector<GrayFrame> frames(seq.frames.begin(), seq.frames.begin() + 6);
  const std::vector<std::vector<ScalarField>> p6(probs.begin(), probs.begin() + 6);
  const SequenceResult r = run_sequence(frames, p6, params);
  EXPECT_EQ(r.refined, p6);

  const SequenceResult one = run_sequence({frames[0]}, {p6[0]}, SmoothParams{});
  EXPECT_EQ(one.refined[0], p6[0]);
  EXPECT_EQ(one.masks[0][0], threshold_mask(p6[0][0], 0.5));
  EXPECT_THROW(run_sequence(frames, {p6[0]}, params), InvalidInput);
}

TEST(RunSequence, ConvexAndBoundedOnFlickerPreset) {
  const auto seq = synth::generate(synth::preset_disk_scene(7));
  const auto probs = synth::degrade(seq.masks, synth::preset_flicker_degradation(7));
  SmootherState state;
  SmoothParams params;
  params.keep_planes = true;
  for (std::size_t t = 0; t < 20; ++t) {
    const StepResult r = smooth_step(state, t ? &seq.frames[t - 1] : nullptr, seq.frames[t], probs[t], params);
    if (t == 0) continue;
    const auto& prior = r.diagnostics.warped_prior[0];
    const auto& k = r.diagnostics.blend[0];
    for (std::size_t i = 0; i < prior.size(); ++i) {
      ASSERT_GE(r.refined[0][i], std::min(probs[t][0][i], prior[i]));
      ASSERT_LE(r.refined[0][i], std::max(probs[t][0][i], prior[i]));
      ASSERT_GE(k[i], 0.05f);
      ASSERT_LE(k[i], 0.95f);
    }
  }
}

TEST(RunSequence, Deterministic) {
  const auto seq = synth::generate(synth::preset_disk_scene(1));
  const auto probs = synth::degrade(seq.masks, synth::preset_flicker_degradation(1));
  const std::vector<GrayFrame> frames(seq.frames.begin(), seq.frames.begin() + 5);
  const std::vector<std::vector<ScalarField>> p(probs.begin(), probs.begin() + 5);
  EXPECT_EQ(run_sequence(frames, p, {}).refined, run_sequence(frames, p, {}).refined);
}
