#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sadm/synthworld/world.hpp"

namespace sadm::synthworld {

/// Clip i of a split uses seed derive_seed(spec.seed, stream + i).
std::vector<OracleClip> make_clips(const WorldSpec& spec, int count, std::uint64_t stream = 0);

/// Conventional stream offsets so train / val / test never share seeds.
inline constexpr std::uint64_t kTrainStream = 0;
inline constexpr std::uint64_t kValStream = 1u << 20;
inline constexpr std::uint64_t kTestStream = 2u << 20;

/// Writes clips under `root/<split>/clip_NNNN/` as frame_TT.png, flow_TT.flo, seg_TT.png and
/// disocc_TT.png, and appends one JSON line per clip to `root/manifest.jsonl`.
void write_split(const std::filesystem::path& root, const std::string& split, const WorldSpec& spec,
                 const std::vector<OracleClip>& clips);

/// Reads a clip directory written by write_split.
core::Clip read_clip(const std::filesystem::path& dir, int length, int num_classes, int observed_len);

/// Every clip of `split` listed in `root/manifest.jsonl`, in manifest order.
std::vector<core::Clip> read_split(const std::filesystem::path& root, const std::string& split);

}  // namespace sadm::synthworld
