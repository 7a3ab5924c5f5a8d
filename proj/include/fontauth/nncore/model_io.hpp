#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "fontauth/common/binary_io.hpp"
#include "fontauth/nncore/network.hpp"

namespace fontauth::nn {

inline constexpr std::uint16_t kModelFormatVersion = 1;

/// FFNN container:
///   "FFNN" | u16 version | u32 ext length | ext bytes |
///   u16 input H, W, C | u16 layer count | layer table | parameter blobs | CRC32
/// The extension block lets higher layers (the classifier codec) make the
/// file self-describing; a bare network writes an empty one. Parameter
/// blobs are u32 count followed by little-endian float32 values, weights
/// then bias, for every conv/dense layer in order.
Bytes serialize_model(const Network<float>& net, std::span<const std::uint8_t> extension = {});

struct ModelFile {
    Network<float> network;
    Bytes extension;
};

ModelFile deserialize_model(std::span<const std::uint8_t> bytes);

/// SHA-256 of the layer table and parameter blobs (the extension block is
/// excluded, so provenance never perturbs the hash).
std::string content_hash(const Network<float>& net);

void save_network(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_network(const std::filesystem::path& path);

} // namespace fontauth::nn
