#pragma once

// Implementations behind the command-line subcommands. Each entry point
// validates its configuration before touching the filesystem and writes
// run_config.json into its output directory.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpsmooth/config.hpp"
#include "tpsmooth/farneback.hpp"
#include "tpsmooth/io.hpp"
#include "tpsmooth/layout.hpp"
#include "tpsmooth/metrics.hpp"
#include "tpsmooth/report.hpp"
#include "tpsmooth/smoother.hpp"
#include "tpsmooth/svg_plot.hpp"
#include "tpsmooth/synth.hpp"

namespace tpsmooth::commands {

namespace fs = std::filesystem;
using nlohmann::json;

inline void write_run_config(const fs::path& out, const RunConfig& config) {
  io::write_text(out / "run_config.json", to_json(config).dump(2) + "\n");
}

// ---------------------------------------------------------------- synth

inline json to_json(const synth::ShapeSpec& s) {
  json j{{"object_id", s.object_id},
         {"kind", s.kind == synth::ShapeKind::kDisk ? "disk" : "rectangle"},
         {"start", {s.start_x, s.start_y}},
         {"motion", s.motion == synth::MotionModel::kLinear ? "linear" : "sinusoidal"}};
  if (s.kind == synth::ShapeKind::kDisk) {
    j["radius"] = s.radius;
  } else {
    j["half_width"] = s.half_width;
    j["half_height"] = s.half_height;
  }
  if (s.motion == synth::MotionModel::kLinear) {
    j["velocity"] = {s.velocity_x, s.velocity_y};
  } else {
    j["amplitude"] = {s.amplitude_x, s.amplitude_y};
    j["period"] = s.period;
    j["phase"] = s.phase;
  }
  return j;
}

inline json to_json(const synth::SceneSpec& s) {
  json shapes = json::array();
  for (const auto& shape : s.shapes) shapes.push_back(to_json(shape));
  return {{"width", s.width},
          {"height", s.height},
          {"frame_count", s.frame_count},
          {"texture_seed", s.texture_seed},
          {"texture_contrast", s.texture_contrast},
          {"margin", s.margin},
          {"seed", s.seed},
          {"shapes", shapes}};
}

inline json to_json(const synth::DegradationSpec& d) {
  return {{"logit_noise_std", d.logit_noise_std}, {"jitter_std", d.jitter_std},     {"flicker_prob", d.flicker_prob},
          {"flicker_scale", d.flicker_scale},     {"dropout_prob", d.dropout_prob}, {"seed", d.seed},
          {"logit_amplitude", synth::DegradationSpec::kLogitAmplitude}};
}

inline synth::SceneSpec scene_from_json(const json& j, std::uint64_t seed) {
  try {
    synth::SceneSpec s;
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.frame_count = j.at("frame_count").get<int>();
    s.seed = j.value("seed", seed);
    s.texture_seed = j.value("texture_seed", s.seed);
    s.texture_contrast = j.value("texture_contrast", 50.0);
    s.margin = j.value("margin", 2.0);
    for (const json& js : j.at("shapes")) {
      synth::ShapeSpec shape;
      shape.object_id = js.at("object_id").get<std::uint32_t>();
      const std::string kind = js.value("kind", std::string("disk"));
      if (kind == "disk") {
        shape.kind = synth::ShapeKind::kDisk;
        shape.radius = js.at("radius").get<double>();
      } else if (kind == "rectangle") {
        shape.kind = synth::ShapeKind::kRectangle;
        shape.half_width = js.at("half_width").get<double>();
        shape.half_height = js.at("half_height").get<double>();
      } else {
        throw ConfigError("unknown shape kind '" + kind + "'");
      }
      const auto start = js.at("start").get<std::vector<double>>();
      if (start.size() != 2) throw ConfigError("shape start must be [x, y]");
      shape.start_x = start[0];
      shape.start_y = start[1];
      const std::string motion = js.value("motion", std::string("linear"));
      if (motion == "linear") {
        shape.motion = synth::MotionModel::kLinear;
        const auto v = js.value("velocity", std::vector<double>{0.0, 0.0});
        if (v.size() != 2) throw ConfigError("velocity must be [vx, vy]");
        shape.velocity_x = v[0];
        shape.velocity_y = v[1];
      } else if (motion == "sinusoidal") {
        shape.motion = synth::MotionModel::kSinusoidal;
        const auto a = js.at("amplitude").get<std::vector<double>>();
        if (a.size() != 2) throw ConfigError("amplitude must be [ax, ay]");
        shape.amplitude_x = a[0];
        shape.amplitude_y = a[1];
        shape.period = js.value("period", 40.0);
        shape.phase = js.value("phase", 0.0);
      } else {
        throw ConfigError("unknown motion model '" + motion + "'");
      }
      s.shapes.push_back(shape);
    }
    return s;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scene spec: ") + e.what());
  }
}

inline void apply_degradation_json(const json& j, synth::DegradationSpec& d) {
  try {
    d.logit_noise_std = j.value("logit_noise_std", d.logit_noise_std);
    d.jitter_std = j.value("jitter_std", d.jitter_std);
    d.flicker_prob = j.value("flicker_prob", d.flicker_prob);
    d.flicker_scale = j.value("flicker_scale", d.flicker_scale);
    d.dropout_prob = j.value("dropout_prob", d.dropout_prob);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("degradation spec: ") + e.what());
  }
}

struct SynthOptions {
  std::string preset = "flicker-disk";
  std::optional<fs::path> scene_file;
  std::optional<fs::path> degradation_file;
  std::uint64_t seed = 42;
  std::optional<int> frames;
  std::optional<double> logit_noise_std, jitter_std, flicker_prob, flicker_scale, dropout_prob;
  double fps = 30.0;
  fs::path out;
};

inline json parse_json_file(const fs::path& p) {
  try {
    return json::parse(io::read_text(p));
  } catch (const json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

// Resolves preset + files + flag overrides into validated specs.
inline std::pair<synth::SceneSpec, synth::DegradationSpec> resolve_synth_specs(const SynthOptions& o) {
  synth::SceneSpec scene;
  synth::DegradationSpec deg;
  deg.seed = o.seed;
  if (o.scene_file) {
    scene = scene_from_json(parse_json_file(*o.scene_file), o.seed);
  } else if (o.preset == "flicker-disk") {
    scene = synth::preset_disk_scene(o.seed);
    deg = synth::preset_flicker_degradation(o.seed);
  } else if (o.preset == "clean-disk") {
    scene = synth::preset_disk_scene(o.seed);
  } else if (o.preset == "two-objects") {
    scene = synth::preset_two_object_scene(o.seed);
    deg = synth::preset_flicker_degradation(o.seed);
    deg.jitter_std = 1.0;
  } else {
    throw ConfigError("unknown preset '" + o.preset + "' (expected flicker-disk, clean-disk or two-objects)");
  }
  if (o.degradation_file) apply_degradation_json(parse_json_file(*o.degradation_file), deg);
  if (o.frames) scene.frame_count = *o.frames;
  if (o.logit_noise_std) deg.logit_noise_std = *o.logit_noise_std;
  if (o.jitter_std) deg.jitter_std = *o.jitter_std;
  if (o.flicker_prob) deg.flicker_prob = *o.flicker_prob;
  if (o.flicker_scale) deg.flicker_scale = *o.flicker_scale;
  if (o.dropout_prob) deg.dropout_prob = *o.dropout_prob;
  deg.validate();
  scene.margin = std::max(scene.margin, 2.0 * deg.max_jitter());
  scene.validate();
  if (!(o.fps > 0.0)) throw ConfigError("fps must be > 0");
  return {scene, deg};
}

inline void run_synth(const SynthOptions& o) {
  const auto [scene, deg] = resolve_synth_specs(o);
  const synth::Sequence seq = synth::generate(scene);
  const auto probs = synth::degrade(seq.masks, deg);

  io::SequenceManifest m;
  m.width = scene.width;
  m.height = scene.height;
  m.frame_count = static_cast<std::size_t>(scene.frame_count);
  m.object_ids = seq.object_ids;
  m.fps = o.fps;
  m.source = "synth:" + (o.scene_file ? o.scene_file->string() : o.preset) + " seed=" + std::to_string(o.seed);
  io::write_manifest(o.out, m);
  io::write_text(o.out / "scene.json", json{{"scene", to_json(scene)}, {"degradation", to_json(deg)}}.dump(2) + "\n");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    io::write_pgm(io::frame_path(o.out, t), seq.frames[t]);
    io::write_tpsm(io::probs_path(o.out, t), probs[t]);
  }
  io::write_masks(o.out, "gt_masks", m, seq.masks);
  for (std::size_t t = 1; t < seq.frames.size(); ++t) io::write_flo(io::flow_path(o.out / "gt_flow", true, t), seq.flow[t - 1]);

  RunConfig config;
  config.command = "synth";
  config.seed = o.seed;
  config.output_dir = o.out.string();
  config.inputs = {{"preset", o.preset}, {"scene", to_json(scene)}, {"degradation", to_json(deg)}};
  write_run_config(o.out, config);
}

// ---------------------------------------------------------------- flow

struct FlowOptions {
  fs::path sequence;
  fs::path out;
  bool bidirectional = false;
  FlowParams params;
};

inline std::size_t run_flow(const FlowOptions& o) {
  o.params.validate();
  const io::SequenceManifest m = io::read_manifest(o.sequence);
  std::size_t written = 0;
  std::optional<GrayFrame> prev;
  for (std::size_t t = 0; t < m.frame_count; ++t) {
    const fs::path p = io::frame_path(o.sequence, t);
    if (!fs::exists(p)) throw SequencingError("missing frame " + p.string());
    GrayFrame cur = io::read_pgm(p);
    if (prev) {
      io::write_flo(io::flow_path(o.out, true, t), estimate_flow(*prev, cur, o.params));
      ++written;
      if (o.bidirectional) {
        io::write_flo(io::flow_path(o.out, false, t), estimate_flow(cur, *prev, o.params));
        ++written;
      }
    }
    prev = std::move(cur);
  }
  RunConfig config;
  config.command = "flow";
  config.flow = o.params;
  config.output_dir = o.out.string();
  config.inputs = {{"sequence", o.sequence.string()}, {"bidirectional", o.bidirectional}};
  write_run_config(o.out, config);
  return written;
}

// ---------------------------------------------------------------- smooth

struct SmoothOptions {
  fs::path sequence;
  fs::path out;
  RunConfig config;
  bool verify = false;
};

namespace detail {

// Checks the fusion invariants on one frame's planes.
inline void verify_step(const StepResult& step, const std::vector<ScalarField>& current, const FusionParams& fusion,
                        std::size_t t) {
  const FrameDiagnostics& d = step.diagnostics;
  for (std::size_t k = 0; k < d.blend.size(); ++k) {
    const ScalarField& kf = d.blend[k];
    const ScalarField& prior = d.warped_prior[k];
    const ScalarField& out = step.refined[k];
    for (std::size_t i = 0; i < out.size(); ++i) {
      const float lo = std::min(current[k][i], prior[i]);
      const float hi = std::max(current[k][i], prior[i]);
      if (!(out[i] >= lo && out[i] <= hi)) {
        throw InvalidInput("verify: convexity violated at frame " + std::to_string(t) + " pixel " + std::to_string(i));
      }
      if (!(kf[i] >= static_cast<float>(fusion.kappa_min) && kf[i] <= static_cast<float>(fusion.kappa_max))) {
        throw InvalidInput("verify: blend weight outside clip bounds at frame " + std::to_string(t));
      }
    }
  }
}

}  // namespace detail

inline void run_smooth(const SmoothOptions& o) {
  RunConfig config = o.config;
  config.command = "smooth";
  config.output_dir = o.out.string();
  config.inputs = {{"sequence", fs::absolute(o.sequence).string()}, {"verify", o.verify}};
  config.validate();

  io::SequenceManifest m = io::read_manifest(o.sequence);
  SmoothParams params = config.smooth_params();
  params.keep_planes = o.verify;

  std::ostringstream diag;
  diag << "frame,flow_mag,residual_mean,sigma,q_mean,k_mean,k_min,k_max\n";
  SmootherState state;
  std::optional<GrayFrame> prev;
  for (std::size_t t = 0; t < m.frame_count; ++t) {
    const fs::path fp = io::frame_path(o.sequence, t);
    const fs::path pp = io::probs_path(o.sequence, t);
    if (!fs::exists(fp)) throw SequencingError("missing frame " + fp.string());
    if (!fs::exists(pp)) throw SequencingError("missing probability frame " + pp.string());
    GrayFrame frame = io::read_pgm(fp);
    io::ProbabilityFrame probs = io::read_tpsm(pp);
    if (frame.width() != m.width || frame.height() != m.height || probs.width != m.width || probs.height != m.height) {
      throw InvalidInput("frame " + std::to_string(t) + " size differs from manifest");
    }
    if (probs.planes.size() != m.object_ids.size()) {
      throw InvalidInput("frame " + std::to_string(t) + " object count differs from manifest");
    }

    const StepResult step = smooth_step(state, prev ? &*prev : nullptr, frame, probs.planes, params);
    if (o.verify) detail::verify_step(step, probs.planes, params.fusion, t);

    io::write_tpsm(io::probs_path(o.out, t), step.refined);
    for (std::size_t k = 0; k < step.refined.size(); ++k) {
      io::write_mask(io::mask_path(o.out, "masks", t, m.object_ids[k]), threshold_mask(step.refined[k], params.threshold));
    }
    const FrameDiagnostics& d = step.diagnostics;
    diag << t << ',' << report::format_number(d.flow_magnitude) << ',' << report::format_number(d.residual_mean) << ','
         << report::format_number(d.sigma) << ',' << report::format_number(d.q_mean) << ','
         << report::format_number(d.k_mean) << ',' << report::format_number(d.k_min) << ','
         << report::format_number(d.k_max) << '\n';
    prev = std::move(frame);
  }
  m.source = "smooth(" + m.source + ")";
  io::write_manifest(o.out, m);
  io::write_text(o.out / "diagnostics.csv", diag.str());
  write_run_config(o.out, config);
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  fs::path run;
  std::string mask_subdir = "masks";
  std::optional<fs::path> frames;  // sequence directory holding frames/
  std::optional<fs::path> flow;    // directory of fwd_NNNNNN.flo
  fs::path out;
  RunConfig config;
};

// Looks for the sequence a smoothed run was produced from.
inline std::optional<fs::path> recorded_sequence(const fs::path& run) {
  const fs::path p = run / "run_config.json";
  if (!fs::exists(p)) return std::nullopt;
  try {
    const json j = json::parse(io::read_text(p));
    if (j.contains("inputs") && j["inputs"].contains("sequence")) return fs::path(j["inputs"]["sequence"].get<std::string>());
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

inline std::vector<metrics::FrameMetrics> run_eval(const EvalOptions& o) {
  RunConfig config = o.config;
  config.command = "eval";
  config.output_dir = o.out.string();
  config.validate();

  const io::SequenceManifest m = io::read_manifest(o.run);
  if (m.frame_count < 2) throw InvalidInput("eval needs at least 2 frames");
  const auto masks = io::read_masks(o.run, o.mask_subdir, m);

  std::vector<FlowField> flows;
  json inputs{{"run", o.run.string()}, {"mask_subdir", o.mask_subdir}};
  if (o.flow) {
    inputs["flow"] = o.flow->string();
    for (std::size_t t = 1; t < m.frame_count; ++t) {
      const fs::path p = io::flow_path(*o.flow, true, t);
      if (!fs::exists(p)) throw SequencingError("missing flow " + p.string());
      FlowField f = io::read_flo(p);
      if (f.width() != m.width || f.height() != m.height) throw InvalidInput(p.string() + ": size differs from manifest");
      flows.push_back(std::move(f));
    }
  } else {
    std::optional<fs::path> seq = o.frames;
    if (!seq && fs::exists(o.run / "frames")) seq = o.run;
    if (!seq) seq = recorded_sequence(o.run);
    if (!seq) throw ConfigError("eval needs --frames or --flow (no frames found next to the run)");
    inputs["frames"] = seq->string();
    const auto frames = io::read_frames(*seq, m);
    for (std::size_t t = 1; t < frames.size(); ++t) flows.push_back(estimate_flow(frames[t - 1], frames[t], config.flow));
  }
  config.inputs = inputs;

  std::vector<metrics::FrameMetrics> records;
  for (std::size_t k = 0; k < m.object_ids.size(); ++k) {
    std::vector<Mask> series;
    for (const auto& row : masks) series.push_back(row[k]);
    auto rec = metrics::evaluate_object(m.object_ids[k], series, flows, config.boundary_tolerance);
    records.insert(records.end(), rec.begin(), rec.end());
  }
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return a.frame_index != b.frame_index ? a.frame_index < b.frame_index : a.object_id < b.object_id;
  });
  metrics::fill_uss(records, config.uss_weights);

  io::write_text(o.out / "metrics.csv", report::metrics_csv(records));
  io::write_text(o.out / "summary.json", report::run_summary(records).dump(2) + "\n");
  write_run_config(o.out, config);
  return records;
}

// ---------------------------------------------------------------- compare

struct CompareOptions {
  fs::path baseline;  // eval output directory or metrics CSV
  fs::path enhanced;
  fs::path out;
  RunConfig config;
};

inline fs::path metrics_csv_path(const fs::path& p) { return fs::is_directory(p) ? p / "metrics.csv" : p; }

inline json run_compare(const CompareOptions& o) {
  RunConfig config = o.config;
  config.command = "compare";
  config.output_dir = o.out.string();
  config.inputs = {{"baseline", o.baseline.string()}, {"enhanced", o.enhanced.string()}};
  config.validate();
  std::vector<metrics::FrameMetrics> b, e;
  json report = report::compare_runs(report::read_metrics_csv(metrics_csv_path(o.baseline)),
                                     report::read_metrics_csv(metrics_csv_path(o.enhanced)), config.uss_weights,
                                     config.uss_scope, &b, &e);
  io::write_text(o.out / "summary.json", report.dump(2) + "\n");
  io::write_text(o.out / "baseline_metrics.csv", report::metrics_csv(b));
  io::write_text(o.out / "enhanced_metrics.csv", report::metrics_csv(e));
  write_run_config(o.out, config);
  return report;
}

// ---------------------------------------------------------------- plot

struct PlotOptions {
  fs::path baseline;
  fs::path enhanced;
  fs::path out;
};

inline std::vector<fs::path> run_plot(const PlotOptions& o) {
  const auto b = metrics::per_frame(report::read_metrics_csv(metrics_csv_path(o.baseline)));
  const auto e = metrics::per_frame(report::read_metrics_csv(metrics_csv_path(o.enhanced)));
  if (b.frames != e.frames) throw InvalidInput("plot: runs cover different frames");
  const std::pair<metrics::Metric, const char*> charts[] = {{metrics::Metric::kWiou, "Warped IoU"},
                                                            {metrics::Metric::kBoundaryF, "Boundary F-score"},
                                                            {metrics::Metric::kTiou, "Temporal IoU"},
                                                            {metrics::Metric::kUss, "Unified Stability Score"}};
  std::vector<fs::path> written;
  for (const auto& [metric, title] : charts) {
    const std::string svg = plot::line_chart(
        title, b.frames, {{"baseline", "#d62728", b[metric]}, {"smoothed", "#1f77b4", e[metric]}});
    const fs::path p = o.out / (std::string(metrics::metric_name(metric)) + ".svg");
    io::write_text(p, svg);
    written.push_back(p);
  }
  return written;
}

}  // namespace tpsmooth::commands
