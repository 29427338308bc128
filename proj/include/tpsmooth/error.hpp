#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tpsmooth {

// Base of every error thrown by the library. The CLI maps each subclass to a
// distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad data handed to an operation: shape mismatch, NaN, out-of-range value.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Bad parameters (thresholds, weights, flow settings, scene specs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Frames delivered out of order or missing.
class SequencingError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (missing files, unwritable directories).
class IoError : public Error {
 public:
  using Error::Error;
};

// Wilcoxon test with every paired difference equal to zero.
class UndefinedTest : public Error {
 public:
  using Error::Error;
};

enum class ParseErrorKind {
  kBadMagic,
  kBadVersion,
  kTruncated,
  kOutOfRange,
  kBadHeader,
  kUnsupportedFormat,
  kBadSanityTag,
  kTrailingData,
  kSchema,
};

inline const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::kBadMagic: return "bad-magic";
    case ParseErrorKind::kBadVersion: return "bad-version";
    case ParseErrorKind::kTruncated: return "truncated";
    case ParseErrorKind::kOutOfRange: return "out-of-range";
    case ParseErrorKind::kBadHeader: return "bad-header";
    case ParseErrorKind::kUnsupportedFormat: return "unsupported-format";
    case ParseErrorKind::kBadSanityTag: return "bad-sanity-tag";
    case ParseErrorKind::kTrailingData: return "trailing-data";
    case ParseErrorKind::kSchema: return "schema";
  }
  return "unknown";
}

// Malformed file content. Carries the byte offset (or, for text formats,
// the line number) where decoding stopped.
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, std::uint64_t offset, const std::string& what)
      : Error(std::string(to_string(kind)) + " at offset " + std::to_string(offset) + ": " + what),
        kind_(kind),
        offset_(offset),
        detail_(what) {}

  ParseErrorKind kind() const noexcept { return kind_; }
  std::uint64_t offset() const noexcept { return offset_; }
  // The message without the kind/offset prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ParseErrorKind kind_;
  std::uint64_t offset_;
  std::string detail_;
};

}  // namespace tpsmooth
