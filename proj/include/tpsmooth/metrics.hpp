#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tpsmooth/flow.hpp"
#include "tpsmooth/grid.hpp"

namespace tpsmooth::metrics {

struct FrameMetrics {
  std::size_t frame_index = 0;
  std::uint32_t object_id = 0;
  double tiou = 0.0;
  double wiou = 0.0;
  double boundary_f = 0.0;
  int dropout = 0;
  double flow_mag = 0.0;
  double uss = 0.0;
};

struct UssWeights {
  double alpha = 0.4;
  double beta = 0.3;
  double gamma = 0.3;

  void validate() const {
    for (double w : {alpha, beta, gamma}) {
      if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("USS weights must lie in [0, 1]");
    }
    if (std::abs(alpha + beta + gamma - 1.0) > 1e-9) throw ConfigError("USS weights must sum to 1");
  }
};

// |A & B| / |A | B|. Two empty masks count as perfectly consistent.
inline double iou(const Mask& a, const Mask& b) {
  require_same_shape(a, b, "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    uni += (a[i] || b[i]) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline double temporal_iou(const Mask& current, const Mask& previous) { return iou(current, previous); }

inline double warped_iou(const Mask& current, const Mask& previous, const FlowField& flow) {
  require_same_shape(current, previous, "warped_iou");
  require_same_shape(current, flow, "warped_iou");
  const Mask aligned = threshold_mask(warp_backward(mask_to_field(previous), flow), 0.5);
  return iou(current, aligned);
}

// Foreground pixels with at least one 4-neighbour in the background; pixels
// outside the grid count as background.
inline Mask extract_boundary(const Mask& mask) {
  Mask out(mask.width(), mask.height());
  auto bg = [&](int x, int y) { return !mask.contains(x, y) || mask(x, y) == 0; };
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask(x, y) && (bg(x - 1, y) || bg(x + 1, y) || bg(x, y - 1) || bg(x, y + 1))) out.at(x, y) = 1;
    }
  }
  return out;
}

namespace detail {

// Exact 1-D squared distance transform (lower envelope of parabolas).
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = 1; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (f[v[k]] == kInf) {
      v[k] = q;
      continue;
    }
    double s = 0.0;
    while (true) {
      s = ((f[q] + q * static_cast<double>(q)) - (f[v[k]] + v[k] * static_cast<double>(v[k]))) / (2.0 * (q - v[k]));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = f[v[k]] == kInf ? kInf : dq * dq + f[v[k]];
  }
}

}  // namespace detail

// Squared Euclidean distance from every pixel to the nearest set pixel.
inline std::vector<double> squared_distance_transform(const Mask& seeds) {
  const int w = seeds.width();
  const int h = seeds.height();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> grid(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = seeds[i] ? 0.0 : kInf;
  const int n = std::max(w, h);
  std::vector<double> f(static_cast<std::size_t>(n)), d(static_cast<std::size_t>(n)), z(static_cast<std::size_t>(n) + 1);
  std::vector<int> v(static_cast<std::size_t>(n));
  for (int x = 0; x < w; ++x) {
    f.resize(h);
    d.resize(h);
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    detail::edt_1d(f, d, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {
    f.assign(grid.begin() + static_cast<std::ptrdiff_t>(y) * w, grid.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
    d.resize(w);
    detail::edt_1d(f, d, v, z);
    std::copy(d.begin(), d.end(), grid.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  return grid;
}

// Boundary F-measure between consecutive masks with a Euclidean match
// tolerance in pixels.
inline double boundary_f(const Mask& current, const Mask& previous, double tolerance = 2.0) {
  require_same_shape(current, previous, "boundary_f");
  if (!(tolerance >= 0.0)) throw ConfigError("boundary tolerance must be >= 0");
  const Mask bc = extract_boundary(current);
  const Mask bp = extract_boundary(previous);
  const std::size_t nc = count_foreground(bc);
  const std::size_t np = count_foreground(bp);
  if (nc == 0 && np == 0) return 1.0;
  if (nc == 0 || np == 0) return 0.0;

  const double tol2 = tolerance * tolerance;
  auto matched = [&](const Mask& from, const std::vector<double>& dist_to) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < from.size(); ++i) hits += (from[i] && dist_to[i] <= tol2) ? 1 : 0;
    return hits;
  };
  const double precision = static_cast<double>(matched(bc, squared_distance_transform(bp))) / static_cast<double>(nc);
  const double recall = static_cast<double>(matched(bp, squared_distance_transform(bc))) / static_cast<double>(np);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

inline int dropout_indicator(const Mask& mask) { return count_foreground(mask) == 0 ? 1 : 0; }

// Quantile by linear interpolation between order statistics at rank q (n - 1).
inline double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("quantile of empty series");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

// Location and spread used by the robust normaliser.
struct RobustScale {
  double median = 0.0;
  double iqr = 0.0;

  static constexpr double kDegenerateIqr = 1e-12;

  static RobustScale fit(const std::vector<double>& series) {
    if (series.empty()) throw InvalidInput("robust_normalize: empty series");
    return {quantile(series, 0.5), quantile(series, 0.75) - quantile(series, 0.25)};
  }

  double apply(double x) const {
    if (iqr < kDegenerateIqr) return 0.5;
    return std::clamp(0.5 + 0.25 * (x - median) / iqr, 0.0, 1.0);
  }
};

inline std::vector<double> robust_normalize(const std::vector<double>& series, const RobustScale& scale) {
  std::vector<double> out;
  out.reserve(series.size());
  for (double x : series) out.push_back(scale.apply(x));
  return out;
}

inline std::vector<double> robust_normalize(const std::vector<double>& series) {
  return robust_normalize(series, RobustScale::fit(series));
}

// Fitted scales for the three USS components.
struct UssScales {
  RobustScale wiou, boundary_f, persistence;
};

inline std::vector<double> persistence_series(const std::vector<double>& dropout) {
  std::vector<double> out;
  for (double d : dropout) out.push_back(1.0 - d);
  return out;
}

inline UssScales fit_uss_scales(const std::vector<double>& wiou, const std::vector<double>& bf,
                                const std::vector<double>& dropout) {
  return {RobustScale::fit(wiou), RobustScale::fit(bf), RobustScale::fit(persistence_series(dropout))};
}

inline std::vector<double> uss_series(const std::vector<double>& wiou, const std::vector<double>& bf,
                                      const std::vector<double>& dropout, const UssWeights& weights,
                                      const UssScales& scales) {
  weights.validate();
  if (wiou.size() != bf.size() || wiou.size() != dropout.size()) throw InvalidInput("uss_series: length mismatch");
  std::vector<double> out;
  out.reserve(wiou.size());
  for (std::size_t i = 0; i < wiou.size(); ++i) {
    out.push_back(weights.alpha * scales.wiou.apply(wiou[i]) + weights.beta * scales.boundary_f.apply(bf[i]) +
                  weights.gamma * scales.persistence.apply(1.0 - dropout[i]));
  }
  return out;
}

// Each component normalised against its own series.
inline std::vector<double> uss_series(const std::vector<double>& wiou, const std::vector<double>& bf,
                                      const std::vector<double>& dropout, const UssWeights& weights = {}) {
  if (wiou.size() != bf.size() || wiou.size() != dropout.size()) throw InvalidInput("uss_series: length mismatch");
  return uss_series(wiou, bf, dropout, weights, fit_uss_scales(wiou, bf, dropout));
}

enum class Metric { kTiou, kWiou, kBoundaryF, kDropout, kFlowMag, kUss };

inline constexpr Metric kAllMetrics[] = {Metric::kTiou, Metric::kWiou, Metric::kBoundaryF,
                                         Metric::kDropout, Metric::kFlowMag, Metric::kUss};

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::kTiou: return "tiou";
    case Metric::kWiou: return "wiou";
    case Metric::kBoundaryF: return "boundary_f";
    case Metric::kDropout: return "dropout";
    case Metric::kFlowMag: return "flow_mag";
    case Metric::kUss: return "uss";
  }
  return "";
}

// +1 higher is better, -1 lower is better, 0 not a quality metric.
inline int metric_direction(Metric m) {
  switch (m) {
    case Metric::kDropout: return -1;
    case Metric::kFlowMag: return 0;
    default: return 1;
  }
}

inline double metric_value(const FrameMetrics& r, Metric m) {
  switch (m) {
    case Metric::kTiou: return r.tiou;
    case Metric::kWiou: return r.wiou;
    case Metric::kBoundaryF: return r.boundary_f;
    case Metric::kDropout: return r.dropout;
    case Metric::kFlowMag: return r.flow_mag;
    case Metric::kUss: return r.uss;
  }
  return 0.0;
}

// Per-frame means over objects, in frame order.
struct FrameSeries {
  std::vector<std::size_t> frames;
  std::map<Metric, std::vector<double>> values;

  const std::vector<double>& operator[](Metric m) const { return values.at(m); }
};

inline FrameSeries per_frame(const std::vector<FrameMetrics>& records) {
  if (records.empty()) throw InvalidInput("aggregate: no metric records");
  std::map<std::size_t, std::vector<const FrameMetrics*>> by_frame;
  for (const FrameMetrics& r : records) by_frame[r.frame_index].push_back(&r);
  FrameSeries out;
  for (const auto& [frame, rows] : by_frame) {
    out.frames.push_back(frame);
    for (Metric m : kAllMetrics) {
      double s = 0.0;
      for (const FrameMetrics* r : rows) s += metric_value(*r, m);
      out.values[m].push_back(s / static_cast<double>(rows.size()));
    }
  }
  return out;
}

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  double median = 0.0;
};

inline Summary summarize(const std::vector<double>& series) {
  if (series.empty()) throw InvalidInput("summarize: empty series");
  Summary s;
  double sum = 0.0;
  for (double x : series) sum += x;
  s.mean = sum / static_cast<double>(series.size());
  double ss = 0.0;
  for (double x : series) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(series.size()));
  s.median = quantile(series, 0.5);
  return s;
}

// Share of paired frames (in percent) where `enhanced` beats `baseline`
// strictly in the metric's preferred direction.
inline double improved_pct(const std::vector<double>& baseline, const std::vector<double>& enhanced, int direction) {
  if (baseline.size() != enhanced.size() || baseline.empty()) throw InvalidInput("improved_pct: bad series");
  if (direction == 0) return 0.0;
  std::size_t better = 0;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    better += (direction > 0 ? enhanced[i] > baseline[i] : enhanced[i] < baseline[i]) ? 1 : 0;
  }
  return 100.0 * static_cast<double>(better) / static_cast<double>(baseline.size());
}

// Masks for one object over time plus the forward flows between them:
// flows[t - 1] maps frame t - 1 to frame t.
inline std::vector<FrameMetrics> evaluate_object(std::uint32_t object_id, const std::vector<Mask>& masks,
                                                 const std::vector<FlowField>& flows, double tolerance) {
  if (masks.size() < 2) throw InvalidInput("evaluation needs at least 2 frames");
  if (flows.size() != masks.size() - 1) throw InvalidInput("evaluation needs one flow per consecutive frame pair");
  std::vector<FrameMetrics> out;
  for (std::size_t t = 1; t < masks.size(); ++t) {
    FrameMetrics r;
    r.frame_index = t;
    r.object_id = object_id;
    r.tiou = temporal_iou(masks[t], masks[t - 1]);
    r.wiou = warped_iou(masks[t], masks[t - 1], flows[t - 1]);
    r.boundary_f = boundary_f(masks[t], masks[t - 1], tolerance);
    r.dropout = dropout_indicator(masks[t]);
    r.flow_mag = mean_flow_magnitude(flows[t - 1]);
    out.push_back(r);
  }
  return out;
}

// Fills `uss` per object from that object's own series, or from supplied
// scales (pooled normalisation).
inline void fill_uss(std::vector<FrameMetrics>& records, const UssWeights& weights,
                     const std::optional<UssScales>& scales = std::nullopt) {
  std::map<std::uint32_t, std::vector<FrameMetrics*>> by_object;
  for (FrameMetrics& r : records) by_object[r.object_id].push_back(&r);
  for (auto& [id, rows] : by_object) {
    std::vector<double> w, b, d;
    for (const FrameMetrics* r : rows) {
      w.push_back(r->wiou);
      b.push_back(r->boundary_f);
      d.push_back(r->dropout);
    }
    const std::vector<double> uss = scales ? uss_series(w, b, d, weights, *scales) : uss_series(w, b, d, weights);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i]->uss = uss[i];
  }
}

}  // namespace tpsmooth::metrics
