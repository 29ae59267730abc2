#pragma once

#include <filesystem>

#include <json.hpp>

#include "sadm/nn/params.hpp"

namespace sadm::nn {

/// Binary checkpoint: every array keyed by module path plus a JSON metadata record.
///
/// Layout (little-endian):
///   8 bytes   "SADMCKPT"
///   u32       format version (1)
///   u64       metadata byte length, then UTF-8 JSON
///   u64       array count
///   per array: u32 key length, key bytes, u32 rank, rank x i32 extents, float64 values
struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  TensorMap arrays;

  /// Arrays whose key starts with `prefix`, with the prefix stripped.
  TensorMap with_prefix(const std::string& prefix) const;
  void insert(const std::string& prefix, const TensorMap& arrays);
};

inline constexpr std::uint32_t kArchiveVersion = 1;

void save_archive(const std::filesystem::path& path, const Archive& archive);
Archive load_archive(const std::filesystem::path& path);

}  // namespace sadm::nn
