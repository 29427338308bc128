#pragma once

// Sequence directory layout:
//
//   manifest.json
//   frames/frame_NNNNNN.pgm
//   probs/probs_NNNNNN.tpsm
//   masks/mask_NNNNNN_obj<ID>.pgm        (also gt_masks/ for synthetic runs)
//   flow/fwd_NNNNNN.flo, flow/bwd_NNNNNN.flo   (index = later frame)
//
// Frame numbers start at 0.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpsmooth/error.hpp"
#include "tpsmooth/io.hpp"

namespace tpsmooth::io {

namespace fs = std::filesystem;

struct SequenceManifest {
  int format_version = 1;
  int width = 0;
  int height = 0;
  std::size_t frame_count = 0;
  std::vector<std::uint32_t> object_ids;
  double fps = 30.0;
  std::string source;

  void validate() const {
    if (format_version != 1) throw ConfigError("unsupported manifest format_version " + std::to_string(format_version));
    if (width < 1 || height < 1) throw ConfigError("manifest dimensions must be >= 1");
    if (frame_count < 1) throw ConfigError("manifest frame_count must be >= 1");
    if (object_ids.empty()) throw ConfigError("manifest object_ids must be nonempty");
    if (std::set<std::uint32_t>(object_ids.begin(), object_ids.end()).size() != object_ids.size()) {
      throw ConfigError("manifest object_ids must be unique");
    }
    if (!(fps > 0.0)) throw ConfigError("manifest fps must be > 0");
  }
};

inline nlohmann::json to_json(const SequenceManifest& m) {
  return nlohmann::json{{"format_version", m.format_version}, {"width", m.width},           {"height", m.height},
                        {"frame_count", m.frame_count},       {"object_ids", m.object_ids}, {"fps", m.fps},
                        {"source", m.source}};
}

inline SequenceManifest manifest_from_json(const nlohmann::json& j) {
  SequenceManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.frame_count = j.at("frame_count").get<std::size_t>();
    m.object_ids = j.at("object_ids").get<std::vector<std::uint32_t>>();
    m.fps = j.value("fps", 30.0);
    m.source = j.value("source", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseErrorKind::kSchema, 0, std::string("manifest: ") + e.what());
  }
  if (m.format_version != 1) {
    throw ParseError(ParseErrorKind::kBadVersion, 0, "manifest format_version " + std::to_string(m.format_version));
  }
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw ParseError(ParseErrorKind::kSchema, 0, e.what());
  }
  return m;
}

inline std::string numbered(const char* prefix, std::size_t t, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06zu%s", prefix, t, ext);
  return buf;
}

inline fs::path manifest_path(const fs::path& dir) { return dir / "manifest.json"; }
inline fs::path frame_path(const fs::path& dir, std::size_t t) { return dir / "frames" / numbered("frame", t, ".pgm"); }
inline fs::path probs_path(const fs::path& dir, std::size_t t) { return dir / "probs" / numbered("probs", t, ".tpsm"); }
inline fs::path flow_path(const fs::path& dir, bool forward, std::size_t t) {
  return dir / numbered(forward ? "fwd" : "bwd", t, ".flo");
}
inline fs::path mask_path(const fs::path& dir, const std::string& subdir, std::size_t t, std::uint32_t object_id) {
  return dir / subdir / (numbered("mask", t, "") + "_obj" + std::to_string(object_id) + ".pgm");
}

inline SequenceManifest read_manifest(const fs::path& dir) {
  const fs::path p = manifest_path(dir);
  if (!fs::exists(p)) throw IoError("no manifest.json in " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ParseErrorKind::kSchema, e.byte, p.string() + ": " + e.what());
  }
  try {
    return manifest_from_json(j);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.offset(), p.string() + ": " + e.detail());
  }
}

inline void write_manifest(const fs::path& dir, const SequenceManifest& m) {
  m.validate();
  write_text(manifest_path(dir), to_json(m).dump(2) + "\n");
}

inline std::vector<GrayFrame> read_frames(const fs::path& frames_dir_parent, const SequenceManifest& m) {
  std::vector<GrayFrame> frames;
  for (std::size_t t = 0; t < m.frame_count; ++t) {
    const fs::path p = frame_path(frames_dir_parent, t);
    if (!fs::exists(p)) throw SequencingError("missing frame " + p.string());
    GrayFrame f = read_pgm(p);
    if (f.width() != m.width || f.height() != m.height) throw InvalidInput(p.string() + ": size differs from manifest");
    frames.push_back(std::move(f));
  }
  return frames;
}

inline std::vector<std::vector<ScalarField>> read_probs(const fs::path& dir, const SequenceManifest& m) {
  std::vector<std::vector<ScalarField>> probs;
  for (std::size_t t = 0; t < m.frame_count; ++t) {
    const fs::path p = probs_path(dir, t);
    if (!fs::exists(p)) throw SequencingError("missing probability frame " + p.string());
    ProbabilityFrame f = read_tpsm(p);
    if (f.width != m.width || f.height != m.height) throw InvalidInput(p.string() + ": size differs from manifest");
    if (f.planes.size() != m.object_ids.size()) throw InvalidInput(p.string() + ": object count differs from manifest");
    probs.push_back(std::move(f.planes));
  }
  return probs;
}

// masks[t][k] in manifest object order.
inline std::vector<std::vector<Mask>> read_masks(const fs::path& dir, const std::string& subdir,
                                                 const SequenceManifest& m) {
  std::vector<std::vector<Mask>> masks;
  for (std::size_t t = 0; t < m.frame_count; ++t) {
    std::vector<Mask> row;
    for (std::uint32_t id : m.object_ids) {
      const fs::path p = mask_path(dir, subdir, t, id);
      if (!fs::exists(p)) throw SequencingError("missing mask " + p.string());
      Mask mk = read_mask(p);
      if (mk.width() != m.width || mk.height() != m.height) throw InvalidInput(p.string() + ": size differs from manifest");
      row.push_back(std::move(mk));
    }
    masks.push_back(std::move(row));
  }
  return masks;
}

inline void write_masks(const fs::path& dir, const std::string& subdir, const SequenceManifest& m,
                        const std::vector<std::vector<Mask>>& masks) {
  for (std::size_t t = 0; t < masks.size(); ++t)
    for (std::size_t k = 0; k < masks[t].size(); ++k) write_mask(mask_path(dir, subdir, t, m.object_ids[k]), masks[t][k]);
}

}  // namespace tpsmooth::io
