#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tpsmooth/error.hpp"

namespace tpsmooth {

struct ScalarTag {};
struct FrameTag {};
struct MaskTag {};

// Dense row-major H x W grid. The tag keeps probability planes, luminance
// frames and masks from being mixed up at call sites.
template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw InvalidInput("grid dimensions must be >= 1, got " + std::to_string(width) + "x" +
                         std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  Grid(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1) {
      throw InvalidInput("grid dimensions must be >= 1");
    }
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw InvalidInput("grid data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(width) + "x" + std::to_string(height));
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T operator()(int x, int y) const { return data_[index(x, y)]; }
  T& at(int x, int y) { return data_[index(x, y)]; }

  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  template <typename U, typename OtherTag>
  bool same_shape(const Grid<U, OtherTag>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// Probability, entropy, residual, weight and logit planes.
using ScalarField = Grid<float, ScalarTag>;
// Luminance in [0, 255].
using GrayFrame = Grid<float, FrameTag>;
// Binary {0, 1}.
using Mask = Grid<std::uint8_t, MaskTag>;

// Displacement in pixels per frame; u is horizontal, v vertical.
struct FlowField {
  ScalarField u;
  ScalarField v;

  FlowField() = default;
  FlowField(int width, int height, float u0 = 0.f, float v0 = 0.f)
      : u(width, height, u0), v(width, height, v0) {}
  FlowField(ScalarField u_plane, ScalarField v_plane) : u(std::move(u_plane)), v(std::move(v_plane)) {
    if (!u.same_shape(v)) throw InvalidInput("flow planes differ in shape");
  }

  int width() const noexcept { return u.width(); }
  int height() const noexcept { return u.height(); }

  template <typename U, typename Tag>
  bool same_shape(const Grid<U, Tag>& other) const noexcept {
    return u.same_shape(other);
  }
  bool same_shape(const FlowField& other) const noexcept { return u.same_shape(other.u); }

  friend bool operator==(const FlowField&, const FlowField&) = default;
};

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidInput(std::string(what) + ": shape mismatch (" + std::to_string(a.width()) + "x" +
                       std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                       std::to_string(b.height()) + ")");
  }
}

template <typename T, typename Tag>
void require_finite(const Grid<T, Tag>& g, const char* what) {
  for (T value : g.values()) {
    if (!std::isfinite(static_cast<double>(value))) {
      throw InvalidInput(std::string(what) + ": non-finite value");
    }
  }
}

inline void require_probability(const ScalarField& p, const char* what) {
  for (float value : p.values()) {
    if (!(value >= 0.f && value <= 1.f)) {
      throw InvalidInput(std::string(what) + ": value outside [0, 1]");
    }
  }
}

// Per-pixel logistic function.
inline ScalarField sigmoid_map(const ScalarField& logits) {
  require_finite(logits, "sigmoid_map");
  ScalarField out(logits.width(), logits.height());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = logits[i];
    out[i] = static_cast<float>(1.0 / (1.0 + std::exp(-x)));
  }
  return out;
}

// pixel = 1 iff prob > tau.
inline Mask threshold_mask(const ScalarField& prob, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw ConfigError("threshold must lie in (0, 1), got " + std::to_string(tau));
  }
  Mask out(prob.width(), prob.height());
  for (std::size_t i = 0; i < prob.size(); ++i) {
    out[i] = prob[i] > tau ? 1 : 0;
  }
  return out;
}

// Rec.601 luma from interleaved RGB bytes.
inline GrayFrame rgb_to_gray(int width, int height, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
    throw InvalidInput("rgb_to_gray: buffer length does not match dimensions");
  }
  GrayFrame out(width, height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2]);
  }
  return out;
}

inline ScalarField mask_to_field(const Mask& m) {
  ScalarField out(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 1.f : 0.f;
  return out;
}

inline std::size_t count_foreground(const Mask& m) {
  std::size_t n = 0;
  for (auto v : m.values()) n += v ? 1 : 0;
  return n;
}

}  // namespace tpsmooth
