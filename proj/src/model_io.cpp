#include "cpwlslice/model_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "cpwlslice/error.hpp"

namespace cpwlslice {
namespace {

using nlohmann::json;

constexpr std::uint8_t kMagic[4] = {0x53, 0x50, 0x4C, 0x43};
constexpr std::uint64_t kPreambleSize = 16;

std::uint64_t read_le(std::span<const std::uint8_t> bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = width - 1; i >= 0; --i) v = (v << 8) | bytes[offset + static_cast<std::size_t>(i)];
  return v;
}

void write_le(std::vector<std::uint8_t>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

/// Tensor lookup against the payload with byte-offset reporting.
class PayloadReader {
 public:
  PayloadReader(std::span<const std::uint8_t> payload, std::uint64_t base)
      : payload_(payload), base_(base) {}

  std::vector<double> tensor(const json& layer, const std::string& name,
                             const std::vector<std::int64_t>& expected_shape) {
    if (!layer.contains("tensors") || !layer["tensors"].contains(name)) {
      throw FormatError("layer is missing tensor '" + name + "'", base_);
    }
    const json& t = layer["tensors"][name];
    const auto offset = t.at("offset").get<std::uint64_t>();
    const auto length = t.at("length").get<std::uint64_t>();
    const auto shape = t.at("shape").get<std::vector<std::int64_t>>();
    if (shape != expected_shape) {
      throw FormatError("tensor '" + name + "' has shape " + json(shape).dump() + ", expected " +
                            json(expected_shape).dump(),
                        base_ + offset);
    }
    std::uint64_t count = 1;
    for (auto d : shape) count *= static_cast<std::uint64_t>(d);
    if (length != count * 8) {
      throw FormatError("tensor '" + name + "' declares " + std::to_string(length) +
                            " bytes but its shape needs " + std::to_string(count * 8),
                        base_ + offset);
    }
    if (offset > payload_.size() || length > payload_.size() - offset) {
      throw FormatError("tensor '" + name + "' extends past the end of the payload",
                        base_ + offset);
    }
    ranges_.push_back({offset, length});
    std::vector<double> values(count);
    for (std::uint64_t k = 0; k < count; ++k) {
      const auto bits = read_le(payload_, offset + 8 * k, 8);
      values[k] = std::bit_cast<double>(bits);
      if (!std::isfinite(values[k])) {
        throw FormatError("tensor '" + name + "' holds a non-finite value", base_ + offset + 8 * k);
      }
    }
    return values;
  }

  void check_overlap() {
    std::sort(ranges_.begin(), ranges_.end());
    for (std::size_t i = 1; i < ranges_.size(); ++i) {
      if (ranges_[i].first < ranges_[i - 1].first + ranges_[i - 1].second) {
        throw FormatError("tensor byte ranges overlap", base_ + ranges_[i].first);
      }
    }
  }

 private:
  std::span<const std::uint8_t> payload_;
  std::uint64_t base_;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges_;
};

Activation parse_activation(const json& layer) {
  if (!layer.contains("activation")) return Activation::identity();
  const json& a = layer["activation"];
  const auto kind = activation_kind_from_string(a.at("kind").get<std::string>());
  switch (kind) {
    case ActivationKind::kIdentity: return Activation::identity();
    case ActivationKind::kRelu: return Activation::relu();
    case ActivationKind::kAbs: return Activation::abs();
    case ActivationKind::kLeakyRelu: return Activation::leaky_relu(a.at("alpha").get<double>());
    case ActivationKind::kPwl:
      return Activation::pwl(a.at("breakpoints").get<std::vector<double>>(),
                             a.at("slopes").get<std::vector<double>>(),
                             a.value("value_at_zero", 0.0));
  }
  return Activation::identity();
}

json activation_json(const Activation& act) {
  json a{{"kind", to_string(act.kind())}};
  if (act.kind() == ActivationKind::kLeakyRelu) a["alpha"] = act.alpha();
  if (act.kind() == ActivationKind::kPwl) {
    a["breakpoints"] = act.breakpoints();
    a["slopes"] = act.slopes();
    a["value_at_zero"] = act.value_at_zero();
  }
  return a;
}

Shape3 parse_shape(const json& layer) {
  const auto s = layer.at("in_shape").get<std::vector<int>>();
  if (s.size() != 3) throw Error("in_shape must be [channels, height, width]");
  return {s[0], s[1], s[2]};
}

LayerSpec parse_layer(const json& layer, PayloadReader& payload) {
  const std::string kind = layer.at("kind").get<std::string>();
  LayerSpec spec;
  spec.activation = parse_activation(layer);
  if (kind == "dense") {
    const auto in = layer.at("in_dim").get<std::int64_t>();
    const auto out = layer.at("out_dim").get<std::int64_t>();
    if (in <= 0 || out <= 0) throw Error("dense dims must be positive");
    const auto w = payload.tensor(layer, "weight", {out, in});
    const auto b = payload.tensor(layer, "bias", {out});
    DenseLayer d;
    d.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), out, in);
    d.bias = Eigen::Map<const Vec>(b.data(), out);
    spec.linear = std::move(d);
  } else if (kind == "conv2d") {
    Conv2dLayer c;
    c.input = parse_shape(layer);
    c.out_channels = layer.at("out_channels").get<int>();
    const auto k = layer.at("kernel").get<std::vector<int>>();
    if (k.size() != 2) throw Error("conv2d kernel must be [kh, kw]");
    c.kernel_h = k[0];
    c.kernel_w = k[1];
    c.stride = layer.value("stride", 1);
    c.padding = layer.value("padding", 0);
    c.kernel = payload.tensor(layer, "weight", {c.out_channels, c.input.channels, c.kernel_h, c.kernel_w});
    const auto b = payload.tensor(layer, "bias", {c.out_channels});
    c.bias = Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()));
    spec.linear = std::move(c);
  } else if (kind == "avgpool2d") {
    AvgPool2dLayer p;
    p.input = parse_shape(layer);
    p.kernel = layer.at("kernel").get<int>();
    p.stride = layer.value("stride", p.kernel);
    spec.linear = p;
  } else if (kind == "flatten") {
    spec.linear = FlattenLayer{parse_shape(layer)};
  } else if (kind == "maxpool2d" || kind == "max_pool2d" || kind == "maxpool") {
    throw UnsupportedLayerError(kMaxPoolHint);
  } else {
    throw UnsupportedLayerError("unsupported layer kind '" + kind + "'");
  }
  return spec;
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for large payloads.
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

ModelFile parse_model(std::span<const std::uint8_t> bytes, const LoadOptions& options) {
  if (bytes.size() < kPreambleSize) {
    throw FormatError("file is " + std::to_string(bytes.size()) +
                          " bytes, shorter than the 16-byte preamble",
                      bytes.size());
  }
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("bad magic, expected \"SPLC\"", 0);
  }
  const auto version = read_le(bytes, 4, 4);
  if (version != kSplcVersion) {
    throw FormatError("unsupported container version " + std::to_string(version), 4);
  }
  const auto header_len = read_le(bytes, 8, 8);
  if (header_len > bytes.size() - kPreambleSize) {
    throw FormatError("header length " + std::to_string(header_len) + " exceeds file size", 8);
  }
  json header;
  try {
    header = json::parse(bytes.begin() + kPreambleSize,
                         bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleSize + header_len));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("header is not valid JSON: ") + e.what(), kPreambleSize + e.byte);
  }

  const std::uint64_t payload_start = kPreambleSize + header_len;
  const auto payload = bytes.subspan(payload_start);
  try {
    const auto expected_len = header.at("payload_length").get<std::uint64_t>();
    if (payload.size() != expected_len) {
      throw ChecksumError("checksum error: payload length mismatch, expected " +
                              std::to_string(expected_len) + " bytes, found " +
                              std::to_string(payload.size()),
                          payload_start);
    }
    const auto expected_crc = header.at("payload_crc32").get<std::uint32_t>();
    const auto actual_crc = crc32_of(payload);
    if (actual_crc != expected_crc) {
      throw ChecksumError("checksum error: payload CRC-32 is " + std::to_string(actual_crc) +
                              ", header says " + std::to_string(expected_crc),
                          payload_start);
    }

    PayloadReader reader(payload, payload_start);
    std::vector<LayerSpec> layers;
    const json& list = header.at("layers");
    if (!list.is_array() || list.empty()) throw FormatError("header has no layers", kPreambleSize);
    for (std::size_t i = 0; i < list.size(); ++i) {
      try {
        layers.push_back(parse_layer(list[i], reader));
      } catch (const UnsupportedLayerError& e) {
        throw UnsupportedLayerError("layer " + std::to_string(i) + ": " + e.what());
      } catch (const FormatError&) {
        throw;
      } catch (const json::exception& e) {
        throw FormatError("layer " + std::to_string(i) + ": " + e.what(), kPreambleSize);
      } catch (const Error& e) {
        throw FormatError("layer " + std::to_string(i) + ": " + e.what(), kPreambleSize);
      }
    }
    reader.check_overlap();

    CpwlNetwork net(std::move(layers), options.dense_threshold);
    const auto input_dim = header.at("input_dim").get<std::uint64_t>();
    if (input_dim != net.input_dim()) {
      throw DimensionError("header input_dim " + std::to_string(input_dim) +
                               " disagrees with first layer input " + std::to_string(net.input_dim()),
                           0);
    }
    if (options.self_check) {
      const auto report = verify_equivalence(net, 3, options.self_check_tolerance);
      if (!report.passed) {
        throw Error("forward/matmul equivalence check failed (max discrepancy " +
                    std::to_string(report.max_discrepancy) + ")");
      }
    }
    return ModelFile{std::move(net), std::move(header)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what(), kPreambleSize);
  }
}

ModelFile read_model(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_model(bytes, options);
}

CpwlNetwork load_model(const std::filesystem::path& path, const LoadOptions& options) {
  return read_model(path, options).network;
}

std::vector<std::uint8_t> serialize_model(const CpwlNetwork& net, const json& extra) {
  std::vector<std::uint8_t> payload;
  auto push_tensor = [&](const double* data, std::size_t count, std::vector<std::int64_t> shape) {
    json t{{"offset", payload.size()}, {"length", count * 8}, {"shape", std::move(shape)}};
    for (std::size_t k = 0; k < count; ++k) write_le(payload, std::bit_cast<std::uint64_t>(data[k]), 8);
    return t;
  };

  json layers = json::array();
  for (const auto& layer : net.layers()) {
    json j{{"kind", layer.kind_name()}};
    if (const auto* d = std::get_if<DenseLayer>(&layer.linear)) {
      const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = d->weight;
      j["in_dim"] = w.cols();
      j["out_dim"] = w.rows();
      j["tensors"]["weight"] = push_tensor(w.data(), static_cast<std::size_t>(w.size()), {w.rows(), w.cols()});
      j["tensors"]["bias"] = push_tensor(d->bias.data(), static_cast<std::size_t>(d->bias.size()), {d->bias.size()});
    } else if (const auto* c = std::get_if<Conv2dLayer>(&layer.linear)) {
      j["in_shape"] = {c->input.channels, c->input.height, c->input.width};
      j["out_channels"] = c->out_channels;
      j["kernel"] = {c->kernel_h, c->kernel_w};
      j["stride"] = c->stride;
      j["padding"] = c->padding;
      j["tensors"]["weight"] = push_tensor(c->kernel.data(), c->kernel.size(),
                                           {c->out_channels, c->input.channels, c->kernel_h, c->kernel_w});
      j["tensors"]["bias"] = push_tensor(c->bias.data(), static_cast<std::size_t>(c->bias.size()), {c->bias.size()});
    } else if (const auto* p = std::get_if<AvgPool2dLayer>(&layer.linear)) {
      j["in_shape"] = {p->input.channels, p->input.height, p->input.width};
      j["kernel"] = p->kernel;
      j["stride"] = p->stride;
    } else if (const auto* f = std::get_if<FlattenLayer>(&layer.linear)) {
      j["in_shape"] = {f->input.channels, f->input.height, f->input.width};
    }
    j["activation"] = activation_json(layer.activation);
    layers.push_back(std::move(j));
  }

  json header = extra.is_object() ? extra : json::object();
  header["format"] = "SPLC";
  header["version"] = kSplcVersion;
  header["tensor_layout"] =
      "binary64 little-endian row-major; dense weight (out_dim, in_dim); conv2d weight "
      "(out_ch, in_ch, kh, kw)";
  header["input_dim"] = net.input_dim();
  header["layers"] = std::move(layers);
  header["payload_length"] = payload.size();
  header["payload_crc32"] = crc32_of(payload);

  const std::string text = header.dump();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  write_le(out, kSplcVersion, 4);
  write_le(out, text.size(), 8);
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

void write_model(const CpwlNetwork& net, const std::filesystem::path& path, const json& extra) {
  const auto bytes = serialize_model(net, extra);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model file " + path.string());
}

}  // namespace cpwlslice
