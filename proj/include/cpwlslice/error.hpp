#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace cpwlslice {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or dimension inconsistency. Carries the offending layer when known.
class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::optional<std::size_t> layer = std::nullopt)
      : Error(layer ? "layer " + std::to_string(*layer) + ": " + what : what), layer_(layer) {}

  std::optional<std::size_t> layer() const { return layer_; }

 private:
  std::optional<std::size_t> layer_;
};

/// Layer kinds the engine refuses (max-pool and anything unknown).
class UnsupportedLayerError : public Error {
 public:
  using Error::Error;
};

/// Malformed model container. `offset` is the byte offset the parser was at.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Payload length or CRC-32 does not match the header.
class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Bad ROI specification (collinear anchors, non-orthonormal frame, ...).
class RoiError : public Error {
 public:
  using Error::Error;
};

/// A planar construction failed; usually an upstream tolerance problem.
class GeometryError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpwlslice
