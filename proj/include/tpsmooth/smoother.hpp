#pragma once

// Temporal probability smoothing. For every frame after the first:
//
//   prior   = previous refined plane warped along forward flow
//   R       = binary entropy of the current probabilities (per object)
//   Q       = motion uncertainty from the forward-backward residual (shared)
//   K       = clip(Q / (Q + R + eps), kappa_min, kappa_max)
//   refined = K * current + (1 - K) * prior
//
// The first frame has no prior and passes through unchanged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tpsmooth/farneback.hpp"
#include "tpsmooth/flow.hpp"
#include "tpsmooth/grid.hpp"

namespace tpsmooth {

enum class FusionMode { kAdaptive, kFixed, kPassthrough };

struct FusionParams {
  double epsilon = 1e-6;
  double kappa_min = 0.05;
  double kappa_max = 0.95;
  bool normalize_entropy = false;
  FusionMode mode = FusionMode::kAdaptive;
  double fixed_weight = 0.5;  // used when mode == kFixed
  bool disable_motion_uncertainty = false;
  bool disable_entropy = false;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be > 0");
    if (!(kappa_min >= 0.0 && kappa_min < kappa_max && kappa_max <= 1.0)) {
      throw ConfigError("need 0 <= kappa_min < kappa_max <= 1");
    }
    if (!(fixed_weight >= 0.0 && fixed_weight <= 1.0)) throw ConfigError("fixed fusion weight must lie in [0, 1]");
  }
};

inline std::string to_string(FusionMode mode, double fixed_weight) {
  switch (mode) {
    case FusionMode::kAdaptive: return "adaptive";
    case FusionMode::kPassthrough: return "passthrough";
    case FusionMode::kFixed: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "fixed:%g", fixed_weight);
      return buf;
    }
  }
  return "adaptive";
}

// Parses "adaptive", "passthrough" or "fixed:<w>".
inline void parse_fusion_mode(const std::string& text, FusionParams& params) {
  if (text == "adaptive") {
    params.mode = FusionMode::kAdaptive;
  } else if (text == "passthrough") {
    params.mode = FusionMode::kPassthrough;
  } else if (text.rfind("fixed:", 0) == 0) {
    std::size_t used = 0;
    double w = 0.0;
    try {
      w = std::stod(text.substr(6), &used);
    } catch (const std::exception&) {
      throw ConfigError("bad fusion mode '" + text + "'");
    }
    if (used != text.size() - 6) throw ConfigError("bad fusion mode '" + text + "'");
    params.mode = FusionMode::kFixed;
    params.fixed_weight = w;
  } else {
    throw ConfigError("unknown fusion mode '" + text + "' (expected adaptive, fixed:<w> or passthrough)");
  }
  params.validate();
}

// Binary entropy in nats; 0 log 0 = 0.
inline double binary_entropy(double p) {
  double r = 0.0;
  if (p > 0.0) r -= p * std::log(p);
  if (p < 1.0) r -= (1.0 - p) * std::log1p(-p);
  return r;
}

// Normalised to [0, 1] on request.
inline ScalarField entropy_map(const ScalarField& prob, bool normalize = false) {
  require_probability(prob, "entropy_map");
  ScalarField out(prob.width(), prob.height());
  const double scale = normalize ? 1.0 / std::numbers::ln2 : 1.0;
  for (std::size_t i = 0; i < prob.size(); ++i) out[i] = static_cast<float>(binary_entropy(prob[i]) * scale);
  return out;
}

inline ScalarField blend_coefficient(const ScalarField& q, const ScalarField& r, const FusionParams& params) {
  params.validate();
  require_same_shape(q, r, "blend_coefficient");
  ScalarField out(q.width(), q.height());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double qi = params.disable_motion_uncertainty ? 0.5 : static_cast<double>(q[i]);
    const double ri = params.disable_entropy ? 0.5 : static_cast<double>(r[i]);
    if (!(qi >= 0.0) || !(ri >= 0.0)) throw InvalidInput("blend_coefficient: Q and R must be >= 0");
    const double k = qi / (qi + ri + params.epsilon);
    out[i] = static_cast<float>(std::clamp(k, params.kappa_min, params.kappa_max));
  }
  return out;
}

// K * current + (1 - K) * prior, per pixel.
inline ScalarField fuse(const ScalarField& current, const ScalarField& prior, const ScalarField& k) {
  require_same_shape(current, prior, "fuse");
  require_same_shape(current, k, "fuse");
  ScalarField out(current.width(), current.height());
  for (std::size_t i = 0; i < current.size(); ++i) {
    const double w = k[i];
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidInput("fuse: blend weight outside [0, 1]");
    out[i] = static_cast<float>(w * current[i] + (1.0 - w) * prior[i]);
  }
  return out;
}

struct SmootherState {
  std::optional<std::vector<ScalarField>> previous_refined;
  std::size_t frame_index = 0;  // number of frames processed so far
};

struct FrameDiagnostics {
  std::size_t frame_index = 0;
  double flow_magnitude = 0.0;
  double residual_mean = 0.0;
  double sigma = 0.0;
  double q_mean = 0.0;
  double k_mean = 0.0;  // averaged over objects and pixels
  double k_min = 0.0;
  double k_max = 0.0;
  // Full planes, kept only when requested.
  std::optional<ScalarField> residual;
  std::optional<ScalarField> motion_uncertainty;
  std::vector<ScalarField> blend;
  std::vector<ScalarField> warped_prior;
};

struct SmoothParams {
  FlowParams flow;
  MotionUncertaintyParams motion;
  FusionParams fusion;
  double threshold = 0.5;
  bool keep_planes = false;

  void validate() const {
    flow.validate();
    motion.validate();
    fusion.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  }
};

struct StepResult {
  std::vector<ScalarField> refined;
  FrameDiagnostics diagnostics;
};

namespace detail {

inline double mean_of(const ScalarField& f) {
  double s = 0.0;
  for (float v : f.values()) s += v;
  return s / static_cast<double>(f.size());
}

}  // namespace detail

// One frame of the recursion. `prev_frame` may be empty only for the first
// frame. Advances `state`.
inline StepResult smooth_step(SmootherState& state, const GrayFrame* prev_frame, const GrayFrame& cur_frame,
                              const std::vector<ScalarField>& current, const SmoothParams& params) {
  params.validate();
  if (current.empty()) throw InvalidInput("smooth_step: no object planes");
  for (const ScalarField& p : current) {
    require_same_shape(p, cur_frame, "smooth_step");
    require_probability(p, "smooth_step");
  }

  StepResult result;
  result.diagnostics.frame_index = state.frame_index;

  const bool first = !state.previous_refined.has_value();
  if (first && state.frame_index != 0) throw SequencingError("smoother state lost its prior");
  if (!first && state.previous_refined->size() != current.size()) {
    throw SequencingError("object count changed between frames");
  }

  if (first || params.fusion.mode == FusionMode::kPassthrough) {
    result.refined = current;
    if (!first && prev_frame == nullptr) throw SequencingError("missing previous frame at t > 1");
    if (!first && prev_frame != nullptr) {
      result.diagnostics.flow_magnitude = mean_flow_magnitude(estimate_flow(*prev_frame, cur_frame, params.flow));
    }
    result.diagnostics.k_mean = result.diagnostics.k_min = result.diagnostics.k_max = 1.0;
  } else {
    if (prev_frame == nullptr) throw SequencingError("missing previous frame at t > 1");
    require_same_shape(*prev_frame, cur_frame, "smooth_step");

    const FlowField fwd = estimate_flow(*prev_frame, cur_frame, params.flow);
    const FlowField bwd = estimate_flow(cur_frame, *prev_frame, params.flow);
    const ScalarField residual = flow_residual(fwd, bwd);
    const ScalarField q = motion_uncertainty(residual, params.motion);

    FrameDiagnostics& d = result.diagnostics;
    d.flow_magnitude = mean_flow_magnitude(fwd);
    d.residual_mean = detail::mean_of(residual);
    d.sigma = motion_sigma(residual, params.motion);
    d.q_mean = detail::mean_of(q);
    d.k_min = 1.0;
    d.k_max = 0.0;

    for (std::size_t k = 0; k < current.size(); ++k) {
      const ScalarField prior = warp_backward((*state.previous_refined)[k], fwd);
      ScalarField blend;
      if (params.fusion.mode == FusionMode::kFixed) {
        // The constant weight is clipped like any other blend coefficient.
        const double w = std::clamp(params.fusion.fixed_weight, params.fusion.kappa_min, params.fusion.kappa_max);
        blend = ScalarField(q.width(), q.height(), static_cast<float>(w));
      } else {
        blend = blend_coefficient(q, entropy_map(current[k], params.fusion.normalize_entropy), params.fusion);
      }
      result.refined.push_back(fuse(current[k], prior, blend));

      d.k_mean += detail::mean_of(blend) / static_cast<double>(current.size());
      const auto [lo, hi] = std::minmax_element(blend.values().begin(), blend.values().end());
      d.k_min = std::min(d.k_min, static_cast<double>(*lo));
      d.k_max = std::max(d.k_max, static_cast<double>(*hi));
      if (params.keep_planes) {
        d.blend.push_back(std::move(blend));
        d.warped_prior.push_back(prior);
      }
    }
    if (params.keep_planes) {
      d.residual = residual;
      d.motion_uncertainty = q;
    }
  }

  state.previous_refined = result.refined;
  ++state.frame_index;
  return result;
}

struct SequenceResult {
  std::vector<std::vector<ScalarField>> refined;  // [t][k]
  std::vector<std::vector<Mask>> masks;           // [t][k]
  std::vector<FrameDiagnostics> diagnostics;
};

// Sequential pass over a whole in-memory sequence.
inline SequenceResult run_sequence(const std::vector<GrayFrame>& frames,
                                   const std::vector<std::vector<ScalarField>>& probs, const SmoothParams& params) {
  params.validate();
  if (frames.empty()) throw InvalidInput("run_sequence: no frames");
  if (frames.size() != probs.size()) {
    throw InvalidInput("run_sequence: " + std::to_string(frames.size()) + " frames but " +
                       std::to_string(probs.size()) + " probability frames");
  }
  SmootherState state;
  SequenceResult out;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    StepResult step = smooth_step(state, t > 0 ? &frames[t - 1] : nullptr, frames[t], probs[t], params);
    std::vector<Mask> masks;
    for (const ScalarField& p : step.refined) masks.push_back(threshold_mask(p, params.threshold));
    out.refined.push_back(std::move(step.refined));
    out.masks.push_back(std::move(masks));
    out.diagnostics.push_back(std::move(step.diagnostics));
  }
  return out;
}

}  // namespace tpsmooth
