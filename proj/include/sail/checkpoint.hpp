#pragma once

#include "sail/autodiff.hpp"
#include "sail/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sail {

inline constexpr char checkpoint_magic[8] = {'S', 'A', 'I', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t checkpoint_version = 1;

struct Checkpoint {
    std::uint32_t version = checkpoint_version;
    SailConfig config;
    ParamStore params;
};

/// Little-endian: magic, u32 version, u64 config length + JSON config, then
/// per tensor [u32 name length, name, u32 rank, u64 dims..., f64 payload],
/// closed by a u32 record count.
std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params, const SailConfig& cfg);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const SailConfig& cfg);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Loads a checkpoint and checks its tensors against a fresh model layout.
SailModel load_model(const std::filesystem::path& path);

}  // namespace sail
