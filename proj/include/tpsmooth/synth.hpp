#pragma once

// Seeded synthetic benchmark: textured moving shapes with analytic masks and
// flow, plus a degradation model that turns ground-truth masks into unstable
// probability planes (noise, jitter, flicker, dropout).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "tpsmooth/grid.hpp"
#include "tpsmooth/rng.hpp"

namespace tpsmooth::synth {

// Smooth band-limited texture defined on the continuous plane, so shifted
// copies are exact.
struct Texture {
  std::uint64_t seed = 1;
  double mean = 110.0;
  double contrast = 50.0;

  double operator()(double x, double y) const {
    return mean + contrast * (0.6 * lattice_noise(x / 6.0, y / 6.0, 0) + 0.4 * lattice_noise(x / 3.0, y / 3.0, 1));
  }

 private:
  double lattice_value(std::int64_t ix, std::int64_t iy, std::uint64_t octave) const {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B1ull ^
                                                         splitmix64(static_cast<std::uint64_t>(iy) + (octave << 40))));
    return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
  }

  static double fade(double t) { return t * t * (3.0 - 2.0 * t); }

  double lattice_noise(double x, double y, std::uint64_t octave) const {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const double tx = fade(x - fx);
    const double ty = fade(y - fy);
    const double a = lattice_value(ix, iy, octave);
    const double b = lattice_value(ix + 1, iy, octave);
    const double c = lattice_value(ix, iy + 1, octave);
    const double d = lattice_value(ix + 1, iy + 1, octave);
    return (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
  }
};

enum class ShapeKind { kDisk, kRectangle };
enum class MotionModel { kLinear, kSinusoidal };

struct ShapeSpec {
  std::uint32_t object_id = 1;
  ShapeKind kind = ShapeKind::kDisk;
  double radius = 8.0;        // disk
  double half_width = 8.0;    // rectangle
  double half_height = 6.0;   // rectangle
  double start_x = 32.0;
  double start_y = 32.0;
  MotionModel motion = MotionModel::kLinear;
  double velocity_x = 0.0;    // linear, px/frame
  double velocity_y = 0.0;
  double amplitude_x = 0.0;   // sinusoidal, px
  double amplitude_y = 0.0;
  double period = 40.0;       // sinusoidal, frames
  double phase = 0.0;         // sinusoidal, radians

  std::pair<double, double> center(int frame) const {
    if (motion == MotionModel::kLinear) {
      return {start_x + velocity_x * frame, start_y + velocity_y * frame};
    }
    const double w = 2.0 * std::numbers::pi / period;
    return {start_x + amplitude_x * std::sin(w * frame + phase), start_y + amplitude_y * std::sin(w * frame + phase)};
  }

  // Half extents of the axis-aligned bounding box.
  std::pair<double, double> half_extent() const {
    return kind == ShapeKind::kDisk ? std::pair{radius, radius} : std::pair{half_width, half_height};
  }

  // Area fraction of the pixel centred at (px, py) covered by the shape,
  // approximated by a one-pixel linear ramp across the edge.
  double coverage(double px, double py, int frame) const {
    const auto [cx, cy] = center(frame);
    if (kind == ShapeKind::kDisk) {
      return std::clamp(radius - std::hypot(px - cx, py - cy) + 0.5, 0.0, 1.0);
    }
    const double cx_cov = std::clamp(half_width - std::abs(px - cx) + 0.5, 0.0, 1.0);
    const double cy_cov = std::clamp(half_height - std::abs(py - cy) + 0.5, 0.0, 1.0);
    return cx_cov * cy_cov;
  }
};

struct SceneSpec {
  int width = 64;
  int height = 64;
  int frame_count = 60;
  std::vector<ShapeSpec> shapes;
  std::uint64_t texture_seed = 7;
  double texture_contrast = 50.0;
  std::uint64_t seed = 42;
  // Minimum clearance between any shape's bounding box and the frame edge.
  double margin = 2.0;

  void validate() const {
    if (width < 8 || height < 8) throw ConfigError("scene must be at least 8x8");
    if (frame_count < 2) throw ConfigError("scene needs at least 2 frames");
    if (shapes.empty()) throw ConfigError("scene needs at least one shape");
    if (!(texture_contrast >= 0.0)) throw ConfigError("texture contrast must be >= 0");
    if (!(margin >= 0.0)) throw ConfigError("margin must be >= 0");
    std::vector<std::uint32_t> ids;
    for (const ShapeSpec& s : shapes) {
      if (s.kind == ShapeKind::kDisk && !(s.radius > 0.0)) throw ConfigError("disk radius must be > 0");
      if (s.kind == ShapeKind::kRectangle && !(s.half_width > 0.0 && s.half_height > 0.0)) {
        throw ConfigError("rectangle half extents must be > 0");
      }
      if (s.motion == MotionModel::kSinusoidal && !(s.period > 0.0)) throw ConfigError("period must be > 0");
      if (std::find(ids.begin(), ids.end(), s.object_id) != ids.end()) throw ConfigError("duplicate object id");
      ids.push_back(s.object_id);
      const auto [hx, hy] = s.half_extent();
      for (int t = 0; t < frame_count; ++t) {
        const auto [cx, cy] = s.center(t);
        if (cx - hx < margin || cy - hy < margin || cx + hx > width - 1 - margin || cy + hy > height - 1 - margin) {
          throw ConfigError("shape " + std::to_string(s.object_id) + " leaves the frame (margin " +
                            std::to_string(margin) + " px) at frame " + std::to_string(t));
        }
      }
    }
  }

  std::vector<std::uint32_t> object_ids() const {
    std::vector<std::uint32_t> ids;
    for (const ShapeSpec& s : shapes) ids.push_back(s.object_id);
    return ids;
  }
};

struct DegradationSpec {
  double logit_noise_std = 0.0;
  double jitter_std = 0.0;
  double flicker_prob = 0.0;
  double flicker_scale = 0.25;
  double dropout_prob = 0.0;
  std::uint64_t seed = 42;

  // Foreground/background logit before degradation.
  static constexpr double kLogitAmplitude = 4.0;
  // Jitter offsets are clamped to this many standard deviations.
  static constexpr double kJitterClamp = 3.0;

  double max_jitter() const { return kJitterClamp * jitter_std; }

  void validate() const {
    if (!(logit_noise_std >= 0.0) || !std::isfinite(logit_noise_std)) throw ConfigError("logit_noise_std must be >= 0");
    if (!(jitter_std >= 0.0) || !std::isfinite(jitter_std)) throw ConfigError("jitter_std must be >= 0");
    if (!(flicker_prob >= 0.0 && flicker_prob <= 1.0)) throw ConfigError("flicker_prob must lie in [0, 1]");
    if (!(flicker_scale > 0.0 && flicker_scale < 1.0)) throw ConfigError("flicker_scale must lie in (0, 1)");
    if (!(dropout_prob >= 0.0 && dropout_prob <= 1.0)) throw ConfigError("dropout_prob must lie in [0, 1]");
  }
};

struct Sequence {
  std::vector<GrayFrame> frames;
  // masks[t][k] for object index k (order of SceneSpec::shapes).
  std::vector<std::vector<Mask>> masks;
  // flow[t - 1] maps frame t - 1 onto frame t.
  std::vector<FlowField> flow;
  std::vector<std::uint32_t> object_ids;
};

inline Texture shape_texture(const SceneSpec& scene, std::size_t index) {
  return Texture{splitmix64(scene.texture_seed ^ splitmix64(scene.seed + 1000 + index)), 170.0, scene.texture_contrast};
}

inline Texture background_texture(const SceneSpec& scene) {
  return Texture{splitmix64(scene.texture_seed ^ splitmix64(scene.seed)), 100.0, scene.texture_contrast};
}

inline GrayFrame render_frame(const SceneSpec& scene, int t) {
  const Texture bg = background_texture(scene);
  GrayFrame frame(scene.width, scene.height);
  for (int y = 0; y < scene.height; ++y) {
    for (int x = 0; x < scene.width; ++x) {
      double value = bg(x, y);
      for (std::size_t k = 0; k < scene.shapes.size(); ++k) {
        const ShapeSpec& s = scene.shapes[k];
        const double cov = s.coverage(x, y, t);
        if (cov <= 0.0) continue;
        const auto [cx, cy] = s.center(t);
        value = (1.0 - cov) * value + cov * shape_texture(scene, k)(x - cx, y - cy);
      }
      frame.at(x, y) = static_cast<float>(std::clamp(value, 0.0, 255.0));
    }
  }
  return frame;
}

inline Mask render_mask(const ShapeSpec& shape, int width, int height, int t) {
  Mask m(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) m.at(x, y) = shape.coverage(x, y, t) >= 0.5 ? 1 : 0;
  return m;
}

inline Sequence generate(const SceneSpec& scene) {
  scene.validate();
  Sequence seq;
  seq.object_ids = scene.object_ids();
  for (int t = 0; t < scene.frame_count; ++t) {
    seq.frames.push_back(render_frame(scene, t));
    std::vector<Mask> masks;
    for (const ShapeSpec& s : scene.shapes) masks.push_back(render_mask(s, scene.width, scene.height, t));
    seq.masks.push_back(std::move(masks));
  }
  for (int t = 1; t < scene.frame_count; ++t) {
    FlowField flow(scene.width, scene.height);
    for (int y = 0; y < scene.height; ++y) {
      for (int x = 0; x < scene.width; ++x) {
        // Topmost shape covering the pixel in the earlier frame owns it.
        for (std::size_t k = scene.shapes.size(); k-- > 0;) {
          const ShapeSpec& s = scene.shapes[k];
          if (s.coverage(x, y, t - 1) >= 0.5) {
            const auto [x0, y0] = s.center(t - 1);
            const auto [x1, y1] = s.center(t);
            flow.u.at(x, y) = static_cast<float>(x1 - x0);
            flow.v.at(x, y) = static_cast<float>(y1 - y0);
            break;
          }
        }
      }
    }
    seq.flow.push_back(std::move(flow));
  }
  return seq;
}

// A textured frame and a copy translated by (dx, dy): next(x) = prev(x - d).
inline std::pair<GrayFrame, GrayFrame> translation_pair(int width, int height, double dx, double dy,
                                                        std::uint64_t seed) {
  const Texture tex{splitmix64(seed), 128.0, 60.0};
  GrayFrame prev(width, height);
  GrayFrame next(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      prev.at(x, y) = static_cast<float>(tex(x, y));
      next.at(x, y) = static_cast<float>(tex(x - dx, y - dy));
    }
  }
  return {std::move(prev), std::move(next)};
}

inline std::uint64_t stream_index(std::size_t frame, std::size_t object) {
  return (static_cast<std::uint64_t>(frame) << 20) | static_cast<std::uint64_t>(object);
}

// Degrades one object's mask at one frame.
inline ScalarField degrade_plane(const Mask& gt, const DegradationSpec& spec, std::size_t frame, std::size_t object) {
  constexpr double kL = DegradationSpec::kLogitAmplitude;
  const int w = gt.width();
  const int h = gt.height();
  const std::uint64_t idx = stream_index(frame, object);

  std::vector<double> logits(gt.size());
  Rng noise = Rng::stream(spec.seed, "noise", idx);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    logits[i] = (gt[i] ? kL : -kL) + (spec.logit_noise_std > 0.0 ? spec.logit_noise_std * noise.normal() : 0.0);
  }

  int jx = 0;
  int jy = 0;
  if (spec.jitter_std > 0.0) {
    Rng jitter = Rng::stream(spec.seed, "jitter", idx);
    const double lim = spec.max_jitter();
    jx = static_cast<int>(std::lround(std::clamp(spec.jitter_std * jitter.normal(), -lim, lim)));
    jy = static_cast<int>(std::lround(std::clamp(spec.jitter_std * jitter.normal(), -lim, lim)));
  }

  Rng flicker = Rng::stream(spec.seed, "flicker", idx);
  const double scale = flicker.bernoulli(spec.flicker_prob) ? spec.flicker_scale : 1.0;
  Rng dropout = Rng::stream(spec.seed, "dropout", idx);
  const bool dropped = dropout.bernoulli(spec.dropout_prob);

  ScalarField out(w, h);
  if (dropped) return out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = x - jx;
      const int sy = y - jy;
      const double l = (sx >= 0 && sy >= 0 && sx < w && sy < h)
                           ? logits[static_cast<std::size_t>(sy) * w + static_cast<std::size_t>(sx)]
                           : -kL;
      out.at(x, y) = static_cast<float>(1.0 / (1.0 + std::exp(-l * scale)));
    }
  }
  return out;
}

// probs[t][k] for every frame and object.
inline std::vector<std::vector<ScalarField>> degrade(const std::vector<std::vector<Mask>>& gt_masks,
                                                     const DegradationSpec& spec) {
  spec.validate();
  std::vector<std::vector<ScalarField>> out;
  out.reserve(gt_masks.size());
  for (std::size_t t = 0; t < gt_masks.size(); ++t) {
    std::vector<ScalarField> planes;
    for (std::size_t k = 0; k < gt_masks[t].size(); ++k) planes.push_back(degrade_plane(gt_masks[t][k], spec, t, k));
    out.push_back(std::move(planes));
  }
  return out;
}

// The stabilisation benchmark: one textured disk on a sinusoidal path.
inline SceneSpec preset_disk_scene(std::uint64_t seed) {
  SceneSpec scene;
  scene.width = 64;
  scene.height = 64;
  scene.frame_count = 60;
  scene.seed = seed;
  scene.texture_seed = seed;
  ShapeSpec disk;
  disk.object_id = 1;
  disk.kind = ShapeKind::kDisk;
  disk.radius = 9.0;
  disk.start_x = 32.0;
  disk.start_y = 32.0;
  disk.motion = MotionModel::kSinusoidal;
  disk.amplitude_x = 10.0;
  disk.amplitude_y = 5.0;
  disk.period = 40.0;
  scene.shapes.push_back(disk);
  return scene;
}

inline DegradationSpec preset_flicker_degradation(std::uint64_t seed) {
  DegradationSpec spec;
  spec.logit_noise_std = 1.0;
  spec.jitter_std = 2.0;
  spec.flicker_prob = 0.2;
  spec.flicker_scale = 0.25;
  spec.seed = seed;
  return spec;
}

inline SceneSpec preset_two_object_scene(std::uint64_t seed) {
  SceneSpec scene;
  scene.width = 96;
  scene.height = 64;
  scene.frame_count = 40;
  scene.seed = seed;
  scene.texture_seed = seed;
  ShapeSpec disk;
  disk.object_id = 1;
  disk.radius = 8.0;
  disk.start_x = 12.0;
  disk.start_y = 32.0;
  disk.motion = MotionModel::kLinear;
  disk.velocity_x = 0.75;
  ShapeSpec rect;
  rect.object_id = 2;
  rect.kind = ShapeKind::kRectangle;
  rect.half_width = 7.0;
  rect.half_height = 5.0;
  rect.start_x = 72.0;
  rect.start_y = 32.0;
  rect.motion = MotionModel::kSinusoidal;
  rect.amplitude_y = 8.0;
  rect.period = 30.0;
  scene.shapes = {disk, rect};
  return scene;
}

}  // namespace tpsmooth::synth
