#pragma once

#include <filesystem>

#include "sadm/core/types.hpp"

namespace sadm::core::io {

namespace fs = std::filesystem;

/// Middlebury .flo tag, read as a little-endian float.
inline constexpr float kFloMagic = 202021.25f;

/// 8-bit RGB PNG <-> [0,1] frame (v / 255).
void write_frame_png(const fs::path& path, const Frame& frame);
Frame read_frame_png(const fs::path& path, int timestamp = 0);

/// Any [3,H,W] tensor in [0,1], clamped and rounded to 8 bits.
void write_rgb_png(const fs::path& path, const Tensor& rgb);

/// Single-channel 8-bit PNG whose pixel value is the 1-based class id.
void write_map_png(const fs::path& path, const SemanticMap& map);
SemanticMap read_map_png(const fs::path& path, int num_classes);

/// Single-channel PNG, 0 where false and 255 where true.
void write_mask_png(const fs::path& path, const std::vector<bool>& mask, int height, int width);
std::vector<bool> read_mask_png(const fs::path& path, int& height, int& width);

/// Middlebury flow: magic, int32 width, int32 height, row-major interleaved float32 (u, v).
void write_flo(const fs::path& path, const FlowField& flow);
FlowField read_flo(const fs::path& path);

}  // namespace sadm::core::io
