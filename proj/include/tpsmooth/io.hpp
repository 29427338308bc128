#pragma once

// On-disk formats. All binary integers and floats are little-endian.
//
//   probs_NNNNNN.tpsm  "TPSM" | u32 version (=1) | u32 width | u32 height |
//                      u32 object count | per object: width*height f32 in [0,1]
//   *.pgm              binary PGM ("P5"), maxval 255; masks store {0, 255}
//   *.flo              Middlebury: f32 202021.25 | i32 width | i32 height |
//                      interleaved (u, v) f32, row-major
//
// Decoders take a byte span and throw ParseError carrying the byte offset of
// the first field that failed.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "tpsmooth/error.hpp"
#include "tpsmooth/grid.hpp"

namespace tpsmooth::io {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::uint32_t kTpsmVersion = 1;
inline constexpr float kFloTag = 202021.25f;
// Upper bound on either dimension accepted by readers.
inline constexpr std::uint32_t kMaxSide = 1u << 16;

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32(Bytes& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  float f32(const char* field) { return std::bit_cast<float>(u32(field)); }

  void need(std::size_t n, const char* field) const {
    if (remaining() < n) {
      throw ParseError(ParseErrorKind::kTruncated, pos_,
                       std::string("need ") + std::to_string(n) + " bytes for " + field + ", have " +
                           std::to_string(remaining()));
    }
  }

  void expect_end() const {
    if (remaining() != 0) {
      throw ParseError(ParseErrorKind::kTrailingData, pos_, std::to_string(remaining()) + " unexpected trailing bytes");
    }
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline void check_dims(std::uint64_t w, std::uint64_t h, std::size_t offset) {
  if (w < 1 || h < 1 || w > kMaxSide || h > kMaxSide) {
    throw ParseError(ParseErrorKind::kBadHeader, offset,
                     "dimensions " + std::to_string(w) + "x" + std::to_string(h) + " out of range");
  }
}

}  // namespace detail

// ---------------------------------------------------------------- TPSM

struct ProbabilityFrame {
  int width = 0;
  int height = 0;
  std::vector<ScalarField> planes;
};

inline Bytes encode_tpsm(const std::vector<ScalarField>& planes) {
  if (planes.empty()) throw InvalidInput("TPSM frame needs at least one object plane");
  const int w = planes.front().width();
  const int h = planes.front().height();
  Bytes out;
  out.reserve(20 + planes.size() * planes.front().size() * 4);
  for (char c : {'T', 'P', 'S', 'M'}) out.push_back(static_cast<std::uint8_t>(c));
  detail::put_u32(out, kTpsmVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(w));
  detail::put_u32(out, static_cast<std::uint32_t>(h));
  detail::put_u32(out, static_cast<std::uint32_t>(planes.size()));
  for (const ScalarField& p : planes) {
    require_same_shape(p, planes.front(), "encode_tpsm");
    require_probability(p, "encode_tpsm");
    for (float v : p.values()) detail::put_f32(out, v);
  }
  return out;
}

inline ProbabilityFrame decode_tpsm(std::span<const std::uint8_t> data) {
  detail::Reader in(data);
  in.need(4, "magic");
  if (!(data[0] == 'T' && data[1] == 'P' && data[2] == 'S' && data[3] == 'M')) {
    throw ParseError(ParseErrorKind::kBadMagic, 0, "expected \"TPSM\"");
  }
  in.u32("magic");
  const std::size_t version_at = in.offset();
  const std::uint32_t version = in.u32("version");
  if (version != kTpsmVersion) {
    throw ParseError(ParseErrorKind::kBadVersion, version_at, "unsupported version " + std::to_string(version));
  }
  const std::size_t dims_at = in.offset();
  const std::uint32_t w = in.u32("width");
  const std::uint32_t h = in.u32("height");
  detail::check_dims(w, h, dims_at);
  const std::size_t count_at = in.offset();
  const std::uint32_t objects = in.u32("object count");
  if (objects < 1 || objects > 4096) {
    throw ParseError(ParseErrorKind::kBadHeader, count_at, "object count " + std::to_string(objects) + " out of range");
  }
  const std::uint64_t plane_bytes = std::uint64_t{w} * h * 4;
  in.need(static_cast<std::size_t>(plane_bytes * objects), "probability planes");

  ProbabilityFrame frame{static_cast<int>(w), static_cast<int>(h), {}};
  for (std::uint32_t k = 0; k < objects; ++k) {
    ScalarField plane(frame.width, frame.height);
    for (std::size_t i = 0; i < plane.size(); ++i) {
      const std::size_t at = in.offset();
      const float v = in.f32("probability");
      if (!(v >= 0.f && v <= 1.f)) {
        throw ParseError(ParseErrorKind::kOutOfRange, at, "probability outside [0, 1]");
      }
      plane[i] = v;
    }
    frame.planes.push_back(std::move(plane));
  }
  in.expect_end();
  return frame;
}

// ---------------------------------------------------------------- PGM

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const { return pos_; }

  // Skips whitespace and '#' comments, then reads an unsigned decimal token.
  std::uint64_t number(const char* field) {
    skip_separators();
    const std::size_t start = pos_;
    std::uint64_t v = 0;
    while (pos_ < data_.size() && data_[pos_] >= '0' && data_[pos_] <= '9') {
      v = v * 10 + (data_[pos_] - '0');
      if (v > 0xFFFFFFFFull) throw ParseError(ParseErrorKind::kBadHeader, start, std::string(field) + " too large");
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= data_.size()) throw ParseError(ParseErrorKind::kTruncated, pos_, std::string("missing ") + field);
      throw ParseError(ParseErrorKind::kBadHeader, pos_, std::string("expected ") + field);
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from the raster.
  void raster_separator() {
    if (pos_ >= data_.size()) throw ParseError(ParseErrorKind::kTruncated, pos_, "missing raster separator");
    if (!is_space(data_[pos_])) throw ParseError(ParseErrorKind::kBadHeader, pos_, "expected whitespace after maxval");
    ++pos_;
  }

 private:
  static bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

  void skip_separators() {
    while (pos_ < data_.size()) {
      if (is_space(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 2;
};

struct PgmRaster {
  int width = 0;
  int height = 0;
  std::size_t raster_offset = 0;
  std::span<const std::uint8_t> pixels;
};

inline PgmRaster decode_pgm_raster(std::span<const std::uint8_t> data) {
  if (data.size() < 2) throw ParseError(ParseErrorKind::kTruncated, data.size(), "missing PGM magic");
  if (data[0] != 'P' || data[1] != '5') throw ParseError(ParseErrorKind::kBadMagic, 0, "expected \"P5\"");
  if (data.size() == 2) throw ParseError(ParseErrorKind::kTruncated, 2, "missing header");
  if (!std::isspace(data[2]) && data[2] != '#') throw ParseError(ParseErrorKind::kBadMagic, 2, "expected whitespace after \"P5\"");
  PgmHeaderReader in(data);
  const std::size_t dims_at = in.offset();
  const std::uint64_t w = in.number("width");
  const std::uint64_t h = in.number("height");
  check_dims(w, h, dims_at);
  const std::size_t maxval_at = in.offset();
  const std::uint64_t maxval = in.number("maxval");
  if (maxval != 255) {
    throw ParseError(ParseErrorKind::kUnsupportedFormat, maxval_at, "maxval " + std::to_string(maxval) + " (only 255 supported)");
  }
  in.raster_separator();
  const std::size_t start = in.offset();
  const std::size_t need = static_cast<std::size_t>(w * h);
  if (data.size() - start < need) {
    throw ParseError(ParseErrorKind::kTruncated, data.size(),
                     "raster needs " + std::to_string(need) + " bytes, have " + std::to_string(data.size() - start));
  }
  if (data.size() - start > need) throw ParseError(ParseErrorKind::kTrailingData, start + need, "bytes after raster");
  return {static_cast<int>(w), static_cast<int>(h), start, data.subspan(start, need)};
}

inline Bytes encode_pgm_raw(int width, int height, std::span<const std::uint8_t> pixels) {
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

}  // namespace detail

// Intensities are rounded to the nearest integer in [0, 255].
inline Bytes encode_pgm(const GrayFrame& frame) {
  require_finite(frame, "encode_pgm");
  std::vector<std::uint8_t> px(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(static_cast<double>(frame[i]), 0.0, 255.0)));
  }
  return detail::encode_pgm_raw(frame.width(), frame.height(), px);
}

inline GrayFrame decode_pgm(std::span<const std::uint8_t> data) {
  const detail::PgmRaster r = detail::decode_pgm_raster(data);
  GrayFrame frame(r.width, r.height);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) frame[i] = r.pixels[i];
  return frame;
}

inline Bytes encode_mask_pgm(const Mask& mask) {
  std::vector<std::uint8_t> px(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) px[i] = mask[i] ? 255 : 0;
  return detail::encode_pgm_raw(mask.width(), mask.height(), px);
}

inline Mask decode_mask_pgm(std::span<const std::uint8_t> data) {
  const detail::PgmRaster r = detail::decode_pgm_raster(data);
  Mask mask(r.width, r.height);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) {
    const std::uint8_t v = r.pixels[i];
    if (v != 0 && v != 255) throw ParseError(ParseErrorKind::kOutOfRange, r.raster_offset + i, "mask value not in {0, 255}");
    mask[i] = v ? 1 : 0;
  }
  return mask;
}

// ---------------------------------------------------------------- .flo

inline Bytes encode_flo(const FlowField& flow) {
  require_finite(flow.u, "encode_flo");
  require_finite(flow.v, "encode_flo");
  Bytes out;
  out.reserve(12 + flow.u.size() * 8);
  detail::put_f32(out, kFloTag);
  detail::put_u32(out, static_cast<std::uint32_t>(flow.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(flow.height()));
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    detail::put_f32(out, flow.u[i]);
    detail::put_f32(out, flow.v[i]);
  }
  return out;
}

inline FlowField decode_flo(std::span<const std::uint8_t> data) {
  detail::Reader in(data);
  const float tag = in.f32("sanity tag");
  if (tag != kFloTag) throw ParseError(ParseErrorKind::kBadSanityTag, 0, "expected 202021.25");
  const std::size_t dims_at = in.offset();
  const auto w = static_cast<std::int32_t>(in.u32("width"));
  const auto h = static_cast<std::int32_t>(in.u32("height"));
  if (w < 1 || h < 1) throw ParseError(ParseErrorKind::kBadHeader, dims_at, "non-positive dimensions");
  detail::check_dims(static_cast<std::uint64_t>(w), static_cast<std::uint64_t>(h), dims_at);
  in.need(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 8, "flow vectors");
  FlowField flow(w, h);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    const std::size_t at = in.offset();
    const float u = in.f32("u");
    const float v = in.f32("v");
    if (!std::isfinite(u) || !std::isfinite(v)) throw ParseError(ParseErrorKind::kOutOfRange, at, "non-finite flow vector");
    flow.u[i] = u;
    flow.v[i] = v;
  }
  in.expect_end();
  return flow;
}

// ---------------------------------------------------------------- files

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

// Re-throws a ParseError with the file name prefixed.
template <typename Fn>
auto decode_file(const std::filesystem::path& path, Fn&& decode) {
  const Bytes data = read_file(path);
  try {
    return decode(std::span<const std::uint8_t>(data));
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.offset(), path.string() + ": " + e.detail());
  }
}

inline ProbabilityFrame read_tpsm(const std::filesystem::path& p) { return decode_file(p, decode_tpsm); }
inline GrayFrame read_pgm(const std::filesystem::path& p) { return decode_file(p, decode_pgm); }
inline Mask read_mask(const std::filesystem::path& p) { return decode_file(p, decode_mask_pgm); }
inline FlowField read_flo(const std::filesystem::path& p) { return decode_file(p, decode_flo); }

inline void write_tpsm(const std::filesystem::path& p, const std::vector<ScalarField>& planes) {
  write_file(p, encode_tpsm(planes));
}
inline void write_pgm(const std::filesystem::path& p, const GrayFrame& f) { write_file(p, encode_pgm(f)); }
inline void write_mask(const std::filesystem::path& p, const Mask& m) { write_file(p, encode_mask_pgm(m)); }
inline void write_flo(const std::filesystem::path& p, const FlowField& f) { write_file(p, encode_flo(f)); }

}  // namespace tpsmooth::io
