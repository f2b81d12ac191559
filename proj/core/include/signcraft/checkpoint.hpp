#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "signcraft/model.hpp"

namespace signcraft {

/// On-disk layout (little-endian):
///
///   0..7    "SIGNCKPT"
///   8..11   u32 version (1)
///   12..15  u32 header length L
///   16..    L bytes of JSON: model_spec, class_names, normalization_id,
///           step_counter, frozen, tensors [{name, shape}]
///   ...     float32 payload in manifest order; per layer: params, then
///           adam_m, then adam_v
///   last 4  CRC32 of every preceding byte
struct Checkpoint {
    Model model;
    std::vector<std::string> class_names;
    std::string normalization_id;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'I', 'G', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);

/// Throws FormatError (magic, version, unreadable header), CorruptError
/// (truncation, trailing bytes, shape mismatch) and ChecksumError (CRC).
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling and renames over `path`.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace signcraft
