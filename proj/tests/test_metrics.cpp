#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tpsmooth/metrics.hpp"

using namespace tpsmooth;
using namespace tpsmooth::metrics;

namespace {

Mask rect(int w, int h, int x0, int y0, int x1, int y1) {
  Mask m(w, h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.at(x, y) = 1;
  return m;
}

Mask random_mask(int w, int h, std::mt19937_64& gen, double density) {
  std::bernoulli_distribution on(density);
  Mask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = on(gen);
  return m;
}

}  // namespace

TEST(Iou, ConventionsAndCounting) {
  const Mask a = rect(10, 10, 1, 1, 4, 3);  // 6 pixels
  EXPECT_DOUBLE_EQ(temporal_iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(temporal_iou(a, rect(10, 10, 6, 6, 8, 8)), 0.0);
  EXPECT_DOUBLE_EQ(temporal_iou(a, rect(10, 10, 1, 2, 4, 4)), 3.0 / 9.0);
  EXPECT_DOUBLE_EQ(temporal_iou(Mask(5, 5), Mask(5, 5)), 1.0);
  EXPECT_DOUBLE_EQ(temporal_iou(Mask(10, 10), a), 0.0);
  EXPECT_THROW(temporal_iou(Mask(3, 3), Mask(3, 4)), InvalidInput);
}

TEST(Iou, SymmetricAndBounded) {
  std::mt19937_64 gen(1);
  for (int i = 0; i < 50; ++i) {
    const Mask a = random_mask(13, 9, gen, 0.3), b = random_mask(13, 9, gen, 0.6);
    const double v = temporal_iou(a, b);
    EXPECT_EQ(v, temporal_iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(WarpedIou, ZeroFlowMatchesTemporalIou) {
  std::mt19937_64 gen(2);
  for (int i = 0; i < 100; ++i) {
    const Mask a = random_mask(16, 12, gen, 0.4), b = random_mask(16, 12, gen, 0.4);
    EXPECT_EQ(warped_iou(a, b, FlowField(16, 12)), temporal_iou(a, b));
  }
}

TEST(WarpedIou, CompensatesIntegerTranslation) {
  const Mask prev = rect(30, 30, 5, 8, 12, 15);
  const Mask cur = rect(30, 30, 8, 8, 15, 15);
  EXPECT_LT(temporal_iou(cur, prev), 1.0);
  EXPECT_DOUBLE_EQ(warped_iou(cur, prev, FlowField(30, 30, 3.f, 0.f)), 1.0);
}

TEST(WarpedIou, FlowOutOfFrameGivesZero) {
  const Mask m = rect(20, 20, 5, 5, 10, 10);
  EXPECT_DOUBLE_EQ(warped_iou(m, m, FlowField(20, 20, 50.f, 0.f)), 0.0);
}

TEST(Boundary, Definition) {
  EXPECT_EQ(extract_boundary(Mask(6, 6)), Mask(6, 6));
  const Mask dot = rect(6, 6, 2, 3, 3, 4);
  EXPECT_EQ(extract_boundary(dot), dot);
  const Mask ring = extract_boundary(Mask(5, 4, 1));
  EXPECT_EQ(count_foreground(ring), 14u);
  EXPECT_EQ(ring(2, 1), 0);
  EXPECT_EQ(ring(0, 2), 1);
}

TEST(BoundaryF, Examples) {
  const Mask sq = rect(30, 30, 8, 8, 18, 18);
  EXPECT_DOUBLE_EQ(boundary_f(sq, sq, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(boundary_f(sq, rect(30, 30, 9, 8, 19, 18), 2.0), 1.0);
  EXPECT_DOUBLE_EQ(boundary_f(rect(40, 40, 1, 1, 5, 5), rect(40, 40, 30, 30, 35, 35), 2.0), 0.0);
  EXPECT_DOUBLE_EQ(boundary_f(Mask(8, 8), Mask(8, 8), 2.0), 1.0);
  EXPECT_DOUBLE_EQ(boundary_f(Mask(8, 8), rect(8, 8, 1, 1, 3, 3), 2.0), 0.0);
  EXPECT_THROW(boundary_f(sq, sq, -1.0), ConfigError);
}

TEST(BoundaryF, MatchesAllPairsOracle) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 60; ++i) {
    const Mask a = random_mask(14, 11, gen, 0.25), b = random_mask(14, 11, gen, 0.5);
    for (double tol : {0.0, 1.0, 1.5, 2.0, 3.0}) EXPECT_NEAR(boundary_f(a, b, tol), oracle::boundary_f(a, b, tol), 1e-12);
  }
}

TEST(BoundaryF, SelfIsOne) {
  std::mt19937_64 gen(4);
  for (int i = 0; i < 20; ++i) {
    Mask m = random_mask(10, 10, gen, 0.4);
    m.at(0, 0) = 1;
    EXPECT_DOUBLE_EQ(boundary_f(m, m, 0.0), 1.0);
  }
}

TEST(Dropout, Indicator) {
  EXPECT_EQ(dropout_indicator(Mask(4, 4)), 1);
  EXPECT_EQ(dropout_indicator(rect(4, 4, 1, 1, 2, 2)), 0);
}

TEST(RobustNormalize, Formula) {
  const std::vector<double> s{1, 2, 3, 4, 5};  // median 3, IQR 2
  const RobustScale sc = RobustScale::fit(s);
  EXPECT_DOUBLE_EQ(sc.median, 3.0);
  EXPECT_DOUBLE_EQ(sc.iqr, 2.0);
  EXPECT_EQ(sc.apply(3.0), 0.5);
  EXPECT_EQ(sc.apply(5.0), 0.75);
  EXPECT_EQ(sc.apply(3.0 + 3 * 2.0), 1.0);
  EXPECT_EQ(sc.apply(-100.0), 0.0);
  for (double v : robust_normalize(std::vector<double>(7, 0.3))) EXPECT_EQ(v, 0.5);
  EXPECT_THROW(robust_normalize(std::vector<double>{}), InvalidInput);
}

TEST(RobustNormalize, LinearInterpolationQuantiles) {
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.75), 7.0);
}

TEST(RobustNormalize, AffineInvariance) {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> d;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> s(31), t;
    for (double& x : s) x = d(gen);
    for (double x : s) t.push_back(3.5 * x - 2.0);
    const auto a = robust_normalize(s), b = robust_normalize(t);
    for (std::size_t k = 0; k < s.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(Uss, Examples) {
  const std::vector<double> c(9, 0.8), z(9, 0.0);
  for (double v : uss_series(c, c, z)) EXPECT_DOUBLE_EQ(v, 0.5);

  // Frame 2 sits at the median of every component.
  const std::vector<double> w{0.1, 0.5, 0.9}, b{0.2, 0.6, 0.7}, d{0, 0, 1};
  EXPECT_NEAR(uss_series(w, b, d)[1], 0.5, 1e-15);

  // Components normalised to 0.75, 0.75 and 0.5.
  UssScales sc{{0.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}};
  EXPECT_NEAR(uss_series({1.0}, {1.0}, {0.0}, {}, sc)[0], 0.675, 1e-12);
  EXPECT_THROW(uss_series({1.0, 2.0}, {1.0}, {0.0}), InvalidInput);
  UssWeights bad{0.5, 0.5, 0.5};
  EXPECT_THROW(uss_series(w, b, d, bad), ConfigError);
}

TEST(Uss, HandComputedWeightedSums) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> w(25), b(25), d(25);
    for (std::size_t k = 0; k < 25; ++k) {
      w[k] = u(gen);
      b[k] = u(gen);
      d[k] = u(gen) < 0.2;
    }
    const auto nw = robust_normalize(w), nb = robust_normalize(b), np = robust_normalize(persistence_series(d));
    const auto uss = uss_series(w, b, d);
    for (std::size_t k = 0; k < 25; ++k) {
      EXPECT_NEAR(uss[k], 0.4 * nw[k] + 0.3 * nb[k] + 0.3 * np[k], 1e-12);
      EXPECT_GE(uss[k], 0.0);
      EXPECT_LE(uss[k], 1.0);
    }
  }
}

TEST(Aggregate, PerFrameAndSummary) {
  std::vector<FrameMetrics> rec;
  for (std::size_t t = 1; t <= 4; ++t) {
    rec.push_back({t, 1, 0.2, 0.4, 0.6, 0, 1.0, 0.5});
    rec.push_back({t, 2, 0.4, 0.8, 0.2, 1, 3.0, 0.5});
  }
  const FrameSeries s = per_frame(rec);
  ASSERT_EQ(s.frames.size(), 4u);
  for (double v : s[Metric::kTiou]) EXPECT_NEAR(v, 0.3, 1e-15);
  for (double v : s[Metric::kDropout]) EXPECT_DOUBLE_EQ(v, 0.5);
  const Summary sum = summarize(s[Metric::kFlowMag]);
  EXPECT_DOUBLE_EQ(sum.mean, 2.0);
  EXPECT_DOUBLE_EQ(sum.std, 0.0);
  EXPECT_DOUBLE_EQ(sum.median, 2.0);
  const Summary spread = summarize({1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(spread.std, std::sqrt(1.25));
  EXPECT_DOUBLE_EQ(spread.median, 2.5);
  EXPECT_THROW(per_frame({}), InvalidInput);
}

TEST(Aggregate, ImprovedPercentage) {
  std::vector<double> base(10, 0.5), enh(10, 0.6);
  enh[3] = 0.4;
  EXPECT_DOUBLE_EQ(improved_pct(base, enh, +1), 90.0);
  EXPECT_DOUBLE_EQ(improved_pct(base, enh, -1), 10.0);
  EXPECT_DOUBLE_EQ(improved_pct(base, base, +1), 0.0);
  EXPECT_EQ(metric_direction(Metric::kDropout), -1);
  EXPECT_EQ(metric_direction(Metric::kTiou), 1);
}

TEST(Evaluate, RecordsStartAtSecondFrame) {
  const std::vector<Mask> masks{rect(20, 20, 2, 2, 8, 8), rect(20, 20, 4, 2, 10, 8), Mask(20, 20)};
  const std::vector<FlowField> flows{FlowField(20, 20, 2.f, 0.f), FlowField(20, 20)};
  auto rec = evaluate_object(7, masks, flows, 2.0);
  ASSERT_EQ(rec.size(), 2u);
  EXPECT_EQ(rec[0].frame_index, 1u);
  EXPECT_EQ(rec[0].object_id, 7u);
  EXPECT_DOUBLE_EQ(rec[0].wiou, 1.0);
  EXPECT_DOUBLE_EQ(rec[0].tiou, 24.0 / 48.0);
  EXPECT_DOUBLE_EQ(rec[0].flow_mag, 2.0);
  EXPECT_EQ(rec[1].dropout, 1);
  EXPECT_DOUBLE_EQ(rec[1].boundary_f, 0.0);
  EXPECT_THROW(evaluate_object(1, masks, {flows[0]}, 2.0), InvalidInput);
  fill_uss(rec, {});
  for (const auto& r : rec) {
    EXPECT_GE(r.uss, 0.0);
    EXPECT_LE(r.uss, 1.0);
  }
}
