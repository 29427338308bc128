// Command-line front end. Exit codes:
//   0 ok, 1 unexpected, 2 configuration, 3 I/O or parse, 4 sequencing,
//   5 invalid input, 6 undefined statistical test.

#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tpsmooth/tpsmooth.hpp"

namespace {

using namespace tpsmooth;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kIo = 3, kSequencing = 4, kInvalid = 5, kUndefined = 6 };

void add_flow_flags(CLI::App* cmd, FlowParams& p) {
  cmd->add_option("--flow-levels", p.pyramid_levels, "Pyramid levels")->capture_default_str();
  cmd->add_option("--flow-scale", p.pyramid_scale, "Pyramid scale factor")->capture_default_str();
  cmd->add_option("--flow-window", p.window_radius, "Averaging window radius (px)")->capture_default_str();
  cmd->add_option("--flow-iterations", p.iterations_per_level, "Iterations per level")->capture_default_str();
  cmd->add_option("--poly-n", p.poly_neighborhood, "Polynomial expansion neighbourhood width")->capture_default_str();
  cmd->add_option("--poly-sigma", p.poly_sigma, "Polynomial expansion Gaussian sigma")->capture_default_str();
}

void add_uss_flags(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--uss-alpha", c.uss_weights.alpha, "USS weight on warped IoU")->capture_default_str();
  cmd->add_option("--uss-beta", c.uss_weights.beta, "USS weight on boundary F")->capture_default_str();
  cmd->add_option("--uss-gamma", c.uss_weights.gamma, "USS weight on persistence")->capture_default_str();
}

int report_error(const char* kind, const std::exception& e, int code) {
  std::cerr << "tpsmooth: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal smoothing of per-frame segmentation probabilities"};
  app.require_subcommand(1);
  std::function<void()> action;

  commands::SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a seeded synthetic sequence");
  c_synth->add_option("--preset", synth.preset, "flicker-disk | clean-disk | two-objects")->capture_default_str();
  c_synth->add_option("--scene", synth.scene_file, "Scene spec JSON (replaces the preset scene)");
  c_synth->add_option("--degradation", synth.degradation_file, "Degradation spec JSON");
  c_synth->add_option("--seed", synth.seed)->capture_default_str();
  c_synth->add_option("--frames", synth.frames, "Override frame count");
  c_synth->add_option("--logit-noise-std", synth.logit_noise_std);
  c_synth->add_option("--jitter-std", synth.jitter_std);
  c_synth->add_option("--flicker-prob", synth.flicker_prob);
  c_synth->add_option("--flicker-scale", synth.flicker_scale);
  c_synth->add_option("--dropout-prob", synth.dropout_prob);
  c_synth->add_option("--fps", synth.fps)->capture_default_str();
  c_synth->add_option("--out", synth.out)->required();
  c_synth->callback([&] { action = [&] { commands::run_synth(synth); }; });

  commands::FlowOptions flow;
  auto* c_flow = app.add_subcommand("flow", "Estimate dense flow between consecutive frames");
  c_flow->add_option("--sequence,--frames", flow.sequence, "Sequence directory (manifest.json + frames/)")->required();
  c_flow->add_option("--out", flow.out)->required();
  c_flow->add_flag("--bidirectional", flow.bidirectional, "Also write backward flow");
  add_flow_flags(c_flow, flow.params);
  c_flow->callback([&] { action = [&] { std::cout << commands::run_flow(flow) << " flow files written\n"; }; });

  commands::SmoothOptions smooth;
  std::string fusion_mode = "adaptive";
  auto* c_smooth = app.add_subcommand("smooth", "Refine a probability sequence");
  c_smooth->add_option("--sequence", smooth.sequence, "Sequence directory (manifest, frames/, probs/)")->required();
  c_smooth->add_option("--out", smooth.out)->required();
  auto& fp = smooth.config.fusion;
  c_smooth->add_option("--kappa-min", fp.kappa_min)->capture_default_str();
  c_smooth->add_option("--kappa-max", fp.kappa_max)->capture_default_str();
  c_smooth->add_option("--epsilon", fp.epsilon)->capture_default_str();
  c_smooth->add_option("--threshold", smooth.config.threshold)->capture_default_str();
  c_smooth->add_option("--sigma-floor", smooth.config.motion.sigma_floor)->capture_default_str();
  c_smooth->add_flag("--normalize-entropy", fp.normalize_entropy, "Divide entropy by ln 2");
  c_smooth->add_option("--fusion-mode", fusion_mode, "adaptive | fixed:<w> | passthrough")->capture_default_str();
  c_smooth->add_flag("--disable-motion-uncertainty", fp.disable_motion_uncertainty);
  c_smooth->add_flag("--disable-entropy", fp.disable_entropy);
  c_smooth->add_flag("--verify", smooth.verify, "Assert convexity and blend bounds on every pixel");
  add_flow_flags(c_smooth, smooth.config.flow);
  c_smooth->callback([&] {
    action = [&] {
      parse_fusion_mode(fusion_mode, smooth.config.fusion);
      commands::run_smooth(smooth);
    };
  });

  commands::EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "Per-frame stability metrics for one run");
  c_eval->add_option("--run", eval.run, "Run directory (manifest + mask subdirectory)")->required();
  c_eval->add_option("--mask-subdir", eval.mask_subdir)->capture_default_str();
  c_eval->add_option("--frames", eval.frames, "Sequence directory whose frames drive the flow");
  c_eval->add_option("--flow", eval.flow, "Directory of precomputed fwd_NNNNNN.flo files");
  c_eval->add_option("--boundary-tolerance", eval.config.boundary_tolerance)->capture_default_str();
  c_eval->add_option("--out", eval.out)->required();
  add_flow_flags(c_eval, eval.config.flow);
  add_uss_flags(c_eval, eval.config);
  c_eval->callback([&] { action = [&] { commands::run_eval(eval); }; });

  commands::CompareOptions compare;
  std::string uss_scope = "per-run";
  auto* c_compare = app.add_subcommand("compare", "Paired comparison of two evaluated runs");
  c_compare->add_option("--baseline", compare.baseline, "Eval directory or metrics CSV")->required();
  c_compare->add_option("--enhanced", compare.enhanced, "Eval directory or metrics CSV")->required();
  c_compare->add_option("--uss-scope", uss_scope, "per-run | pooled")->capture_default_str();
  c_compare->add_option("--out", compare.out)->required();
  add_uss_flags(c_compare, compare.config);
  c_compare->callback([&] {
    action = [&] {
      compare.config.uss_scope = parse_uss_scope(uss_scope);
      const auto report = commands::run_compare(compare);
      std::cout << report.dump(2) << '\n';
    };
  });

  commands::PlotOptions plot;
  auto* c_plot = app.add_subcommand("plot", "SVG line charts of baseline vs enhanced metrics");
  c_plot->add_option("--baseline", plot.baseline, "Metrics CSV or eval directory")->required();
  c_plot->add_option("--enhanced", plot.enhanced, "Metrics CSV or eval directory")->required();
  c_plot->add_option("--out", plot.out)->required();
  c_plot->callback([&] {
    action = [&] {
      for (const auto& p : commands::run_plot(plot)) std::cout << p.string() << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    action();
    return kOk;
  } catch (const ConfigError& e) {
    return report_error("configuration error", e, kConfig);
  } catch (const ParseError& e) {
    return report_error("parse error", e, kIo);
  } catch (const IoError& e) {
    return report_error("i/o error", e, kIo);
  } catch (const SequencingError& e) {
    return report_error("sequencing error", e, kSequencing);
  } catch (const InvalidInput& e) {
    return report_error("invalid input", e, kInvalid);
  } catch (const UndefinedTest& e) {
    return report_error("undefined test", e, kUndefined);
  } catch (const std::exception& e) {
    return report_error("error", e, kOther);
  }
}
