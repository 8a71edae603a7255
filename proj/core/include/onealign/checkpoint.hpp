#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "onealign/trainer.hpp"

namespace onealign {

/// OPC1: magic "OPC1", u32 version, u64 JSON length + JSON {config, state},
/// u64 record count, then records (u32 name length, name, u32 ndim,
/// u64 dims[ndim], f32 payload). Head tensors come first, optimizer moments
/// follow as "opt/<param>/m" and "opt/<param>/v".
std::string encode_checkpoint(const AlignConfig& config, const TrainState& state);

struct Checkpoint {
  AlignConfig config;
  TrainState state;
};

/// Throws BadMagic, UnsupportedVersion, TruncatedFile, BadCheckpoint.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const AlignConfig& config, const TrainState& state);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace onealign
