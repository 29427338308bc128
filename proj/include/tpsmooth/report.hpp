#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpsmooth/config.hpp"
#include "tpsmooth/io.hpp"
#include "tpsmooth/metrics.hpp"
#include "tpsmooth/stats.hpp"

namespace tpsmooth::report {

inline constexpr const char* kCsvHeader = "frame,object,tiou,wiou,boundary_f,dropout,flow_mag,uss";

// Six significant digits.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double round6(double v) { return std::stod(format_number(v)); }

inline std::string metrics_csv(const std::vector<metrics::FrameMetrics>& records) {
  if (records.empty()) throw InvalidInput("refusing to write an empty metrics CSV");
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.frame_index << ',' << r.object_id << ',' << format_number(r.tiou) << ',' << format_number(r.wiou) << ','
        << format_number(r.boundary_f) << ',' << r.dropout << ',' << format_number(r.flow_mag) << ','
        << format_number(r.uss) << '\n';
  }
  return out.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_cell(const std::string& text, std::size_t line_no, const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ParseError(ParseErrorKind::kSchema, line_no, "column '" + column + "': cannot parse '" + text + "'");
  }
  return v;
}

}  // namespace detail

// Parses a per-frame metrics CSV. Columns are located by header name, so
// extra columns are ignored; a missing required column is a schema error.
// Error offsets are 1-based line numbers.
inline std::vector<metrics::FrameMetrics> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(ParseErrorKind::kSchema, 1, "empty metrics CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"frame", "object", "tiou", "wiou", "boundary_f", "dropout", "flow_mag", "uss"}) {
    if (!col.count(required)) throw ParseError(ParseErrorKind::kSchema, 1, std::string("missing column '") + required + "'");
  }
  std::vector<metrics::FrameMetrics> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(ParseErrorKind::kSchema, line_no, "expected " + std::to_string(header.size()) + " cells");
    }
    auto get = [&](const char* name) { return detail::parse_cell(cells[col.at(name)], line_no, name); };
    metrics::FrameMetrics r;
    r.frame_index = static_cast<std::size_t>(get("frame"));
    r.object_id = static_cast<std::uint32_t>(get("object"));
    r.tiou = get("tiou");
    r.wiou = get("wiou");
    r.boundary_f = get("boundary_f");
    r.dropout = static_cast<int>(get("dropout"));
    r.flow_mag = get("flow_mag");
    r.uss = get("uss");
    records.push_back(r);
  }
  if (records.empty()) throw ParseError(ParseErrorKind::kSchema, line_no, "metrics CSV has no records");
  return records;
}

inline std::vector<metrics::FrameMetrics> read_metrics_csv(const std::filesystem::path& p) {
  try {
    return parse_metrics_csv(io::read_text(p));
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.offset(), p.string() + ": " + e.detail());
  }
}

inline nlohmann::json summary_json(const metrics::Summary& s) {
  return {{"mean", round6(s.mean)}, {"std", round6(s.std)}, {"median", round6(s.median)}};
}

// Single-run summary: per metric mean, population std and median over frames
// (objects averaged first).
inline nlohmann::json run_summary(const std::vector<metrics::FrameMetrics>& records) {
  const metrics::FrameSeries series = metrics::per_frame(records);
  nlohmann::json out;
  out["frames"] = series.frames.size();
  nlohmann::json per_metric;
  for (metrics::Metric m : metrics::kAllMetrics) per_metric[metrics::metric_name(m)] = summary_json(metrics::summarize(series[m]));
  out["metrics"] = per_metric;
  out["dropout_fraction"] = round6(metrics::summarize(series[metrics::Metric::kDropout]).mean);
  return out;
}

// Recomputes USS on both runs: per-run normalises each object's series
// against itself; pooled fits the scales on both runs' frames together.
inline void recompute_uss(std::vector<metrics::FrameMetrics>& baseline, std::vector<metrics::FrameMetrics>& enhanced,
                          const metrics::UssWeights& weights, UssScope scope) {
  if (scope == UssScope::kPerRun) {
    metrics::fill_uss(baseline, weights);
    metrics::fill_uss(enhanced, weights);
    return;
  }
  std::map<std::uint32_t, std::vector<metrics::FrameMetrics*>> pooled;
  for (auto& r : baseline) pooled[r.object_id].push_back(&r);
  for (auto& r : enhanced) pooled[r.object_id].push_back(&r);
  for (auto& [id, rows] : pooled) {
    std::vector<double> w, b, d;
    for (const auto* r : rows) {
      w.push_back(r->wiou);
      b.push_back(r->boundary_f);
      d.push_back(r->dropout);
    }
    const metrics::UssScales scales = metrics::fit_uss_scales(w, b, d);
    for (auto* r : rows) {
      r->uss = metrics::uss_series({r->wiou}, {r->boundary_f}, {static_cast<double>(r->dropout)}, weights, scales)[0];
    }
  }
}

inline nlohmann::json wilcoxon_json(const std::vector<double>& baseline, const std::vector<double>& enhanced) {
  try {
    const stats::WilcoxonResult w = stats::wilcoxon_signed_rank({baseline, enhanced});
    return {{"W", round6(w.w)}, {"p", round6(w.p_two_sided)}, {"n", w.n_effective}, {"exact", w.exact}};
  } catch (const UndefinedTest&) {
    return {{"W", nullptr}, {"p", nullptr}, {"n", 0}, {"error", "undefined-test: all paired differences are zero"}};
  }
}

// Joint report for two runs over the same frames and objects.
inline nlohmann::json compare_runs(std::vector<metrics::FrameMetrics> baseline, std::vector<metrics::FrameMetrics> enhanced,
                                   const metrics::UssWeights& weights, UssScope scope,
                                   std::vector<metrics::FrameMetrics>* baseline_out = nullptr,
                                   std::vector<metrics::FrameMetrics>* enhanced_out = nullptr) {
  if (baseline.empty() || enhanced.empty()) throw InvalidInput("compare: empty run");
  recompute_uss(baseline, enhanced, weights, scope);
  const metrics::FrameSeries b = metrics::per_frame(baseline);
  const metrics::FrameSeries e = metrics::per_frame(enhanced);
  if (b.frames != e.frames) {
    throw InvalidInput("compare: runs cover different frames (" + std::to_string(b.frames.size()) + " vs " +
                       std::to_string(e.frames.size()) + ")");
  }
  std::map<std::uint32_t, std::size_t> ob, oe;
  for (const auto& r : baseline) ++ob[r.object_id];
  for (const auto& r : enhanced) ++oe[r.object_id];
  if (ob != oe) throw InvalidInput("compare: runs track different objects");

  nlohmann::json out;
  out["frames"] = b.frames.size();
  out["uss_scope"] = to_string(scope);
  nlohmann::json per_metric;
  for (metrics::Metric m : metrics::kAllMetrics) {
    const metrics::Summary sb = metrics::summarize(b[m]);
    const metrics::Summary se = metrics::summarize(e[m]);
    nlohmann::json j;
    j["direction"] = metrics::metric_direction(m) > 0 ? "higher" : metrics::metric_direction(m) < 0 ? "lower" : "none";
    j["baseline_mean"] = round6(sb.mean);
    j["enhanced_mean"] = round6(se.mean);
    j["baseline_std"] = round6(sb.std);
    j["enhanced_std"] = round6(se.std);
    j["delta"] = round6(se.mean - sb.mean);
    j["pct_delta"] = sb.mean != 0.0 ? nlohmann::json(round6(100.0 * (se.mean - sb.mean) / sb.mean)) : nlohmann::json(nullptr);
    j["baseline_median"] = round6(sb.median);
    j["enhanced_median"] = round6(se.median);
    j["delta_median"] = round6(se.median - sb.median);
    j["improved_pct"] = round6(metrics::improved_pct(b[m], e[m], metrics::metric_direction(m)));
    j["wilcoxon"] = wilcoxon_json(b[m], e[m]);
    per_metric[metrics::metric_name(m)] = j;
  }
  out["metrics"] = per_metric;
  if (baseline_out) *baseline_out = std::move(baseline);
  if (enhanced_out) *enhanced_out = std::move(enhanced);
  return out;
}

}  // namespace tpsmooth::report
