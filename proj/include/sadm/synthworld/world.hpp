#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sadm/core/types.hpp"
#include "sadm/warp/disocclusion.hpp"

namespace sadm::synthworld {

using Vec2 = std::array<double, 2>;  // (x, y) in pixels

enum class ShapeKind { kBackground, kRect, kDisc };

/// Rigid layer displacement d(t) relative to the layer's initial placement.
struct MotionLaw {
  enum class Kind { kStatic, kDrift, kOscillate };
  Kind kind = Kind::kStatic;
  Vec2 velocity{0.0, 0.0};  // drift, px / frame
  double amplitude = 0.0;   // oscillation, px
  double period = 1.0;      // oscillation, frames
  int axis = 1;             // oscillation axis: 0 = x, 1 = y
  bool random_phase = true;

  /// Unquantized displacement at frame t for a given oscillation phase.
  Vec2 displacement(double t, double phase) const;
};

struct ClassSpec {
  int id = 1;  // 1-based class id
  std::string name;
  ShapeKind shape = ShapeKind::kBackground;
  double size_min = 4.0;  // rect half-extent or disc radius
  double size_max = 8.0;
  MotionLaw law;
};

/// Scene description. Classes are layered back to front in list order; exactly one background
/// class is required and it must come first.
struct WorldSpec {
  int height = 64;
  int width = 64;
  std::vector<ClassSpec> classes;
  /// Per-clip background velocity drawn uniformly from these options.
  std::vector<Vec2> camera_pan{{0.0, 0.0}};
  int observed_len = 5;
  int horizon = 5;
  std::uint64_t seed = 0;
  /// Round layer displacements to whole pixels.
  bool integer_motion = true;
  /// Peak amplitude of the sinusoidal texture component.
  double texture_noise = 0.04;

  int length() const { return observed_len + horizon; }
  int num_classes() const { return static_cast<int>(classes.size()); }
  /// Throws ConfigError on duplicate / non-contiguous ids, missing background, bad extents.
  void validate() const;
};

/// 64x64, background with camera pan in {-1, 0, +1} px, a rectangle drifting (+2, 0) px/frame and a
/// disc oscillating vertically (amplitude 4 px, period 16 frames, random phase). T = K = 5.
WorldSpec default_world_spec();
/// Background only, nothing moves.
WorldSpec static_world_spec(int height, int width, int length);

/// Generated clip with analytic ground truth.
struct OracleClip {
  core::Clip clip;
  /// Dis-occlusion of frame i relative to frame i-1 (frame 0 is empty).
  std::vector<warp::DisocclusionMask> disocclusion;
  /// Number of target pixels of frame i whose source rounds to each pixel of frame i-1.
  std::vector<Tensor> occupancy;
  /// Layer displacement of each class at each frame, [class][frame], after quantization.
  std::vector<std::vector<Vec2>> displacement;
  std::uint64_t seed = 0;

  /// Analytic backward flow of `class_index` (0-based) at frame i: d(i-1) - d(i).
  Vec2 law_flow(int class_index, int frame) const;
};

/// Deterministic in spec (including seed).
OracleClip generate(const WorldSpec& spec);

/// Exact dis-occlusion of frame t (t >= 1) against t - 1.
warp::DisocclusionMask oracle_disocclusion(const OracleClip& clip, int t);

nlohmann::json to_json(const WorldSpec& spec);
WorldSpec world_spec_from_json(const nlohmann::json& j);
/// FNV-1a of the canonical JSON encoding, hex.
std::string spec_hash(const WorldSpec& spec);

/// splitmix64 mix of a base seed with a stream index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace sadm::synthworld
