#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tpsmooth/stats.hpp"

using namespace tpsmooth;
using namespace tpsmooth::stats;

namespace {

PairedSample random_pair(std::size_t n, std::mt19937_64& gen, bool with_ties) {
  std::normal_distribution<double> d(0.1, 1.0);
  std::uniform_int_distribution<int> q(-4, 4);
  PairedSample s;
  for (std::size_t i = 0; i < n; ++i) {
    s.baseline.push_back(0.0);
    s.enhanced.push_back(with_ties ? 0.5 * q(gen) : d(gen));
  }
  return s;
}

}  // namespace

TEST(Wilcoxon, FiveDistinctPositives) {
  const auto r = wilcoxon_signed_rank({{0, 0, 0, 0, 0}, {1, 2, 3, 4, 5}});
  EXPECT_EQ(r.w, 0.0);
  EXPECT_EQ(r.w_minus, 0.0);
  EXPECT_EQ(r.w_plus, 15.0);
  EXPECT_EQ(r.n_effective, 5u);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.p_two_sided, 0.0625);
}

TEST(Wilcoxon, SymmetricDifferencesGivePOne) {
  const auto r = wilcoxon_signed_rank({{0, 0, 0, 0, 0, 0}, {1, -1, 2, -2, 3, -3}});
  EXPECT_EQ(r.p_two_sided, 1.0);
}

TEST(Wilcoxon, AllZeroIsUndefined) {
  EXPECT_THROW(wilcoxon_signed_rank({{1, 2, 3}, {1, 2, 3}}), UndefinedTest);
  EXPECT_THROW(wilcoxon_signed_rank({{1, 2}, {1}}), InvalidInput);
  EXPECT_THROW(wilcoxon_signed_rank({{}, {}}), InvalidInput);
}

TEST(Wilcoxon, ExactBranchMatchesBruteForce) {
  std::mt19937_64 gen(11);
  for (std::size_t n = 1; n <= 14; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      const PairedSample s = random_pair(n, gen, trial % 2 == 1);
      const auto o = oracle::wilcoxon_brute_force(s.baseline, s.enhanced);
      if (o.n == 0) {
        EXPECT_THROW(wilcoxon_signed_rank(s), UndefinedTest);
        continue;
      }
      const auto r = wilcoxon_signed_rank(s);
      EXPECT_EQ(r.n_effective, o.n);
      EXPECT_DOUBLE_EQ(r.w, o.w);
      EXPECT_NEAR(r.p_two_sided, o.p, 1e-12) << "n=" << n;
    }
  }
}

TEST(Wilcoxon, LargeSampleUsesNormalApproximation) {
  PairedSample s;
  for (int i = 0; i < 30; ++i) {
    s.baseline.push_back(0);
    s.enhanced.push_back(i + 1);
  }
  const auto r = wilcoxon_signed_rank(s);
  EXPECT_FALSE(r.exact);
  EXPECT_LT(r.p_two_sided, 0.001);
  EXPECT_GT(r.p_two_sided, 0.0);
}

TEST(Wilcoxon, ApproximationAgreesWithExactAtTwenty) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const PairedSample s = random_pair(20, gen, false);
    const auto r = wilcoxon_signed_rank(s);
    ASSERT_TRUE(r.exact);
    std::vector<double> mags;
    for (std::size_t i = 0; i < 20; ++i) mags.push_back(std::abs(s.enhanced[i] - s.baseline[i]));
    EXPECT_NEAR(normal_approx_p(mags, r.w), r.p_two_sided, 0.01);
  }
}

TEST(Wilcoxon, NegationAndZeroDroppingInvariance) {
  std::mt19937_64 gen(13);
  for (std::size_t n : {8u, 20u, 40u}) {
    const PairedSample s = random_pair(n, gen, true);
    PairedSample neg{s.enhanced, s.baseline};
    PairedSample filtered;
    for (std::size_t i = 0; i < n; ++i) {
      if (s.enhanced[i] != s.baseline[i]) {
        filtered.baseline.push_back(s.baseline[i]);
        filtered.enhanced.push_back(s.enhanced[i]);
      }
    }
    const auto a = wilcoxon_signed_rank(s), b = wilcoxon_signed_rank(neg), c = wilcoxon_signed_rank(filtered);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.p_two_sided, b.p_two_sided);
    EXPECT_EQ(a.w, c.w);
    EXPECT_EQ(a.p_two_sided, c.p_two_sided);
    EXPECT_GT(a.p_two_sided, 0.0);
    EXPECT_LE(a.p_two_sided, 1.0);
  }
}

TEST(Wilcoxon, AverageRanksForTies) {
  const auto ranks = signed_rank_magnitudes({2.0, 1.0, 2.0, 3.0});
  EXPECT_EQ(ranks, (std::vector<double>{2.5, 1.0, 2.5, 4.0}));
  EXPECT_EQ(ranks, oracle::average_ranks({2.0, 1.0, 2.0, 3.0}));
}
