#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tpsmooth/error.hpp"

namespace tpsmooth::stats {

struct PairedSample {
  std::vector<double> baseline;
  std::vector<double> enhanced;
};

struct WilcoxonResult {
  double w = 0.0;        // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_two_sided = 1.0;
  std::size_t n_effective = 0;
  bool exact = false;
};

// Largest effective sample size evaluated by exact enumeration.
inline constexpr std::size_t kExactCutoff = 25;

// Average ranks (1-based) of |d| with ties sharing the mean rank.
inline std::vector<double> signed_rank_magnitudes(const std::vector<double>& abs_diffs) {
  const std::size_t n = abs_diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// P(W+ <= w) under the null, where every sign pattern of the ranked
// magnitudes is equally likely. Ranks are doubled so tied half-integer ranks
// become integers; the count of sign patterns reaching each doubled sum is
// built one rank at a time, which is the full 2^n enumeration folded by sum.
inline double exact_lower_tail(const std::vector<double>& ranks, double w) {
  std::vector<std::int64_t> doubled;
  std::int64_t total = 0;
  for (double r : ranks) {
    doubled.push_back(std::llround(2.0 * r));
    total += doubled.back();
  }
  std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
  counts[0] = 1.0;
  std::int64_t reach = 0;
  for (std::int64_t r : doubled) {
    for (std::int64_t s = reach; s >= 0; --s) {
      if (counts[static_cast<std::size_t>(s)] != 0.0) counts[static_cast<std::size_t>(s + r)] += counts[static_cast<std::size_t>(s)];
    }
    reach += r;
  }
  const std::int64_t limit = std::llround(2.0 * w);
  double below = 0.0;
  for (std::int64_t s = 0; s <= std::min(limit, total); ++s) below += counts[static_cast<std::size_t>(s)];
  return below / std::ldexp(1.0, static_cast<int>(ranks.size()));
}

// Two-sided p from the normal approximation to W, with tie and continuity
// corrections. `mags` are the nonzero |d|.
inline double normal_approx_p(const std::vector<double>& mags, double w) {
  const double n = static_cast<double>(mags.size());
  double tie_term = 0.0;
  std::vector<double> sorted = mags;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::clamp(std::erfc(z / std::sqrt(2.0)), std::numeric_limits<double>::min(), 1.0);
}

// Paired Wilcoxon signed-rank test on enhanced - baseline. Zero differences
// are dropped; tied magnitudes get average ranks. Exact for n <= 25, normal
// approximation with tie and continuity corrections above.
inline WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample) {
  if (sample.baseline.size() != sample.enhanced.size() || sample.baseline.empty()) {
    throw InvalidInput("wilcoxon: paired series must have equal, nonzero length");
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < sample.baseline.size(); ++i) {
    const double d = sample.enhanced[i] - sample.baseline[i];
    if (!std::isfinite(d)) throw InvalidInput("wilcoxon: non-finite difference");
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw UndefinedTest("wilcoxon: all paired differences are zero");

  std::vector<double> mags;
  for (double d : diffs) mags.push_back(std::abs(d));
  const std::vector<double> ranks = signed_rank_magnitudes(mags);

  WilcoxonResult res;
  res.n_effective = diffs.size();
  for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? res.w_plus : res.w_minus) += ranks[i];
  res.w = std::min(res.w_plus, res.w_minus);

  if (res.n_effective <= kExactCutoff) {
    res.exact = true;
    res.p_two_sided = std::min(1.0, 2.0 * exact_lower_tail(ranks, res.w));
    return res;
  }

  res.p_two_sided = normal_approx_p(mags, res.w);
  return res;
}

}  // namespace tpsmooth::stats
