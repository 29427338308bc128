#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tpsmooth/grid.hpp"

namespace tpsmooth {

struct MotionUncertaintyParams {
  double sigma_floor = 0.5;
  bool use_adaptive_sigma = true;

  void validate() const {
    if (!(sigma_floor > 0.0) || !std::isfinite(sigma_floor)) {
      throw ConfigError("sigma_floor must be > 0");
    }
  }
};

namespace detail {

// Bilinear sample with coordinates clamped to the grid.
inline double sample_clamped(const ScalarField& f, double x, double y) {
  const int w = f.width();
  const int h = f.height();
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * f(x0, y0) + fx * f(x1, y0);
  const double bottom = (1.0 - fx) * f(x0, y1) + fx * f(x1, y1);
  return (1.0 - fy) * top + fy * bottom;
}

// Bilinear sample that yields `valid = false` unless every pixel carrying
// nonzero weight lies inside the grid.
inline double sample_strict(const ScalarField& f, double x, double y, bool& valid) {
  valid = false;
  if (!std::isfinite(x) || !std::isfinite(y)) return 0.0;
  const double fx0 = std::floor(x);
  const double fy0 = std::floor(y);
  if (fx0 < 0.0 || fy0 < 0.0 || fx0 > f.width() - 1 || fy0 > f.height() - 1) return 0.0;
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const double fx = x - fx0;
  const double fy = y - fy0;
  if ((fx > 0.0 && x0 + 1 >= f.width()) || (fy > 0.0 && y0 + 1 >= f.height())) return 0.0;
  valid = true;
  const double a = f(x0, y0);
  if (fx == 0.0 && fy == 0.0) return a;
  const double b = fx > 0.0 ? f(x0 + 1, y0) : 0.0;
  const double c = fy > 0.0 ? f(x0, y0 + 1) : 0.0;
  const double d = (fx > 0.0 && fy > 0.0) ? f(x0 + 1, y0 + 1) : 0.0;
  return (1.0 - fy) * ((1.0 - fx) * a + fx * b) + fy * ((1.0 - fx) * c + fx * d);
}

}  // namespace detail

// out(x) = field(x - flow(x)), bilinear. Any sample whose support touches a
// pixel outside the grid is 0.
inline ScalarField warp_backward(const ScalarField& field, const FlowField& flow) {
  require_same_shape(field, flow, "warp_backward");
  ScalarField out(field.width(), field.height());
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      bool valid = false;
      const double value =
          detail::sample_strict(field, x - static_cast<double>(flow.u(x, y)), y - static_cast<double>(flow.v(x, y)), valid);
      out.at(x, y) = valid ? static_cast<float>(value) : 0.f;
    }
  }
  return out;
}

// Forward-backward cycle residual |fwd(x) + bwd(x + fwd(x))|. The backward
// lookup clamps to the grid edge.
inline ScalarField flow_residual(const FlowField& fwd, const FlowField& bwd) {
  require_same_shape(fwd, bwd, "flow_residual");
  ScalarField out(fwd.width(), fwd.height());
  for (int y = 0; y < fwd.height(); ++y) {
    for (int x = 0; x < fwd.width(); ++x) {
      const double du = fwd.u(x, y);
      const double dv = fwd.v(x, y);
      const double bu = detail::sample_clamped(bwd.u, x + du, y + dv);
      const double bv = detail::sample_clamped(bwd.v, x + du, y + dv);
      out.at(x, y) = static_cast<float>(std::hypot(du + bu, dv + bv));
    }
  }
  return out;
}

// Median with linear interpolation between the two middle order statistics.
inline double median_of(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of empty set");
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

inline double motion_sigma(const ScalarField& residual, const MotionUncertaintyParams& params) {
  if (!params.use_adaptive_sigma) return params.sigma_floor;
  std::vector<double> values(residual.values().begin(), residual.values().end());
  return std::max(median_of(std::move(values)), params.sigma_floor);
}

// Q = 1 - exp(-E^2 / (2 sigma^2)).
inline double motion_uncertainty_value(double residual, double sigma) {
  return -std::expm1(-residual * residual / (2.0 * sigma * sigma));
}

inline ScalarField motion_uncertainty(const ScalarField& residual, const MotionUncertaintyParams& params) {
  params.validate();
  for (float e : residual.values()) {
    if (!(e >= 0.f) || !std::isfinite(e)) throw InvalidInput("motion_uncertainty: residual must be finite and >= 0");
  }
  const double sigma = motion_sigma(residual, params);
  // Keeps Q strictly below 1 after float rounding.
  constexpr float kBelowOne = 0x1.fffffep-1f;
  ScalarField out(residual.width(), residual.height());
  for (std::size_t i = 0; i < residual.size(); ++i) {
    out[i] = std::min(static_cast<float>(motion_uncertainty_value(residual[i], sigma)), kBelowOne);
  }
  return out;
}

inline double mean_flow_magnitude(const FlowField& flow) {
  double sum = 0.0;
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    sum += std::hypot(static_cast<double>(flow.u[i]), static_cast<double>(flow.v[i]));
  }
  return sum / static_cast<double>(flow.u.size());
}

}  // namespace tpsmooth
