#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpwlslice/network.hpp"

namespace cpwlslice {

/// SPLC v1 container:
///
///   offset 0   magic "SPLC" (0x53 0x50 0x4C 0x43)
///   offset 4   version, uint32 little-endian (= 1)
///   offset 8   header length H, uint64 little-endian
///   offset 16  header, H bytes of UTF-8 JSON
///   offset 16+H payload: binary64 little-endian tensors, row-major
///
/// The header lists `input_dim`, `payload_length`, `payload_crc32` and the
/// layers. Each tensor entry gives its byte `offset` (relative to the payload
/// start), byte `length` and `shape`. Conv kernels are (out_ch, in_ch, kh, kw).
inline constexpr std::uint32_t kSplcVersion = 1;
inline constexpr char kMaxPoolHint[] =
    "max-pool layers are not supported; replace them with average pooling (avgpool2d) "
    "before export";

struct ModelFile {
  CpwlNetwork network;
  nlohmann::json header;
};

struct LoadOptions {
  bool self_check = true;  // lowered vs structured forward on 3 random inputs
  double self_check_tolerance = 1e-10;
  std::size_t dense_threshold = kDefaultDenseThreshold;
};

ModelFile parse_model(std::span<const std::uint8_t> bytes, const LoadOptions& options = {});
ModelFile read_model(const std::filesystem::path& path, const LoadOptions& options = {});
CpwlNetwork load_model(const std::filesystem::path& path, const LoadOptions& options = {});

/// Serializes deterministically. `extra` keys are merged into the header
/// (they must not collide with the reserved ones).
std::vector<std::uint8_t> serialize_model(const CpwlNetwork& net,
                                          const nlohmann::json& extra = nlohmann::json::object());
void write_model(const CpwlNetwork& net, const std::filesystem::path& path,
                 const nlohmann::json& extra = nlohmann::json::object());

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace cpwlslice
