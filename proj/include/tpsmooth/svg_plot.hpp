#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "tpsmooth/error.hpp"

namespace tpsmooth::plot {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> values;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Static line chart of per-frame values. Output depends only on the inputs.
inline std::string line_chart(const std::string& title, const std::vector<std::size_t>& frames,
                              const std::vector<Series>& series) {
  if (frames.empty()) throw InvalidInput("plot: no frames");
  for (const Series& s : series) {
    if (s.values.size() != frames.size()) throw InvalidInput("plot: series length differs from frame count");
  }
  constexpr double kW = 720, kH = 360, kLeft = 60, kRight = 20, kTop = 40, kBottom = 45;
  double lo = series.empty() ? 0.0 : series.front().values.front();
  double hi = lo;
  for (const Series& s : series)
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi - lo < 1e-9) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double f0 = static_cast<double>(frames.front());
  const double f1 = std::max(static_cast<double>(frames.back()), f0 + 1.0);
  auto px = [&](double f) { return kLeft + (f - f0) / (f1 - f0) * (kW - kLeft - kRight); };
  auto py = [&](double v) { return kTop + (hi - v) / (hi - lo) * (kH - kTop - kBottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 "
      << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape(title)
      << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\"" << kH - kBottom
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    svg << "<text x=\"" << kLeft - 6 << "\" y=\"" << detail::fmt(py(v) + 4) << "\" text-anchor=\"end\">"
        << detail::fmt(v) << "</text>\n";
    const double f = f0 + (f1 - f0) * i / 4.0;
    svg << "<text x=\"" << detail::fmt(px(f)) << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"middle\">"
        << static_cast<long long>(f + 0.5) << "</text>\n";
  }
  svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 8 << "\" text-anchor=\"middle\">frame</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    svg << "<polyline fill=\"none\" stroke=\"" << series[s].color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < frames.size(); ++i) {
      if (i) svg << ' ';
      svg << detail::fmt(px(static_cast<double>(frames[i]))) << ',' << detail::fmt(py(series[s].values[i]));
    }
    svg << "\"/>\n";
    const double ly = kTop + 4 + 16.0 * static_cast<double>(s);
    svg << "<line x1=\"" << kW - 170 << "\" y1=\"" << ly << "\" x2=\"" << kW - 150 << "\" y2=\"" << ly << "\" stroke=\""
        << series[s].color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kW - 145 << "\" y=\"" << ly + 4 << "\">" << detail::escape(series[s].label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace tpsmooth::plot
