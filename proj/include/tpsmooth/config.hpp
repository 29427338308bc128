#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "tpsmooth/farneback.hpp"
#include "tpsmooth/flow.hpp"
#include "tpsmooth/metrics.hpp"
#include "tpsmooth/smoother.hpp"

namespace tpsmooth {

enum class UssScope { kPerRun, kPooled };

inline UssScope parse_uss_scope(const std::string& s) {
  if (s == "per-run") return UssScope::kPerRun;
  if (s == "pooled") return UssScope::kPooled;
  throw ConfigError("unknown USS scope '" + s + "' (expected per-run or pooled)");
}

inline const char* to_string(UssScope s) { return s == UssScope::kPooled ? "pooled" : "per-run"; }

// Everything that influences a run. Written verbatim to run_config.json in
// every output directory.
struct RunConfig {
  std::string command;
  FlowParams flow;
  MotionUncertaintyParams motion;
  FusionParams fusion;
  double threshold = 0.5;
  double boundary_tolerance = 2.0;
  metrics::UssWeights uss_weights;
  UssScope uss_scope = UssScope::kPerRun;
  std::string output_dir;
  std::uint64_t seed = 42;
  nlohmann::json inputs = nlohmann::json::object();

  void validate() const {
    flow.validate();
    motion.validate();
    fusion.validate();
    uss_weights.validate();
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
    if (!(boundary_tolerance >= 0.0)) throw ConfigError("boundary tolerance must be >= 0");
  }

  SmoothParams smooth_params() const {
    SmoothParams p;
    p.flow = flow;
    p.motion = motion;
    p.fusion = fusion;
    p.threshold = threshold;
    return p;
  }
};

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  return json{
      {"command", c.command},
      {"flow",
       {{"pyramid_levels", c.flow.pyramid_levels},
        {"pyramid_scale", c.flow.pyramid_scale},
        {"window_radius", c.flow.window_radius},
        {"iterations_per_level", c.flow.iterations_per_level},
        {"poly_neighborhood", c.flow.poly_neighborhood},
        {"poly_sigma", c.flow.poly_sigma}}},
      {"motion", {{"sigma_floor", c.motion.sigma_floor}, {"use_adaptive_sigma", c.motion.use_adaptive_sigma}}},
      {"fusion",
       {{"epsilon", c.fusion.epsilon},
        {"kappa_min", c.fusion.kappa_min},
        {"kappa_max", c.fusion.kappa_max},
        {"entropy_log_base", "e"},
        {"normalize_entropy", c.fusion.normalize_entropy},
        {"fusion_mode", to_string(c.fusion.mode, c.fusion.fixed_weight)},
        {"disable_motion_uncertainty", c.fusion.disable_motion_uncertainty},
        {"disable_entropy", c.fusion.disable_entropy}}},
      {"threshold", c.threshold},
      {"boundary_tolerance", c.boundary_tolerance},
      {"uss_weights", {{"alpha", c.uss_weights.alpha}, {"beta", c.uss_weights.beta}, {"gamma", c.uss_weights.gamma}}},
      {"uss_scope", to_string(c.uss_scope)},
      {"output_dir", c.output_dir},
      {"seed", c.seed},
      {"inputs", c.inputs},
  };
}

}  // namespace tpsmooth
