#pragma once

#include <array>
#include <vector>

#include "sadm/dynamics/model.hpp"
#include "sadm/synthworld/world.hpp"

namespace sadm::harness {

/// Single-class config with the smallest hidden width whose parameter count reaches the
/// semantic-aware model's.
dynamics::DynamicsConfig matched_baseline(const dynamics::DynamicsConfig& semantic_aware);

/// Routing that exchanges the inputs of classes a and b.
std::vector<int> swap_route(int num_classes, int a, int b);

struct SegmentSwap {
  int group = 0;   // class whose branch produced the segment
  int source = 0;  // class whose inputs fed it
  /// Mean over the horizon of the segment's mean predicted flow and of the two analytic laws.
  std::array<double, 2> predicted{};
  std::array<double, 2> group_law{};
  std::array<double, 2> source_law{};
  bool evaluable = false;
  bool follows_group = false;
};

struct ClipSwap {
  std::vector<SegmentSwap> segments;
  /// Every evaluable segment moves closer to its branch's law than to its own, and at least one is evaluable.
  bool success = false;
};

struct SwapReport {
  int a = 0;
  int b = 0;
  std::vector<ClipSwap> clips;
  double success_rate() const;
};

/// Runs the dynamics with classes a and b exchanged. A segment is the set of pixels whose
/// predicted label is the branch's class; its flow is that branch's own flow output.
SwapReport class_swap(const dynamics::DynamicsModel& model, const std::vector<synthworld::OracleClip>& clips, int a, int b);

/// merge[c] = new class of old class c. Every new class must be used and classes stay in order of
/// first appearance so the background keeps index 0.
void validate_merge_map(const std::vector<int>& merge, int num_classes);
int merged_class_count(const std::vector<int>& merge);
core::Clip merge_classes(const core::Clip& clip, const std::vector<int>& merge);

}  // namespace sadm::harness
