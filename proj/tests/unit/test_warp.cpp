#include <doctest.h>

#include <cmath>

#include "../support/random.hpp"
#include "../support/scenes.hpp"
#include "sadm/core/error.hpp"
#include "sadm/synthworld/dataset.hpp"
#include "sadm/warp/warp.hpp"

using namespace sadm;
using namespace sadm::warp;

namespace {

core::Frame ramp_frame(int h, int w) {
  core::Frame f(h, w);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) f.pixels.at(c, y, x) = 0.1 * x + 0.01 * y + 0.001 * c;
  return f;
}

core::FlowField constant_flow(int h, int w, double u, double v) {
  core::FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.vectors.at(0, y, x) = u;
      f.vectors.at(1, y, x) = v;
    }
  return f;
}

}  // namespace

TEST_CASE("warp_frame: zero flow is the identity") {
  std::mt19937_64 rng(3);
  core::Frame src(testing::random_tensor(rng, {3, 7, 9}, 0.0, 1.0));
  const auto out = warp_frame(src, core::FlowField(7, 9));
  CHECK(out.pixels.storage() == src.pixels.storage());
}

TEST_CASE("warp_frame: constant (-1, 0) shifts left with border clamp") {
  const auto src = ramp_frame(5, 6);
  const auto out = warp_frame(src, constant_flow(5, 6, -1.0, 0.0));
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 5; ++y) {
      CHECK(out.pixels.at(c, y, 0) == doctest::Approx(src.pixels.at(c, y, 0)));
      for (int x = 1; x < 6; ++x) CHECK(out.pixels.at(c, y, x) == doctest::Approx(src.pixels.at(c, y, x - 1)));
    }
}

TEST_CASE("warp_frame: half-pixel flow averages neighbours") {
  const auto src = ramp_frame(4, 6);
  const auto out = warp_frame(src, constant_flow(4, 6, 0.5, 0.0));
  for (int x = 0; x + 1 < 6; ++x)
    CHECK(out.pixels.at(1, 2, x) == doctest::Approx(0.5 * (src.pixels.at(1, 2, x) + src.pixels.at(1, 2, x + 1))));
}

TEST_CASE("warp_frame: non-finite flow throws") {
  auto flow = core::FlowField(4, 4);
  flow.vectors.at(1, 2, 2) = std::nan("");
  CHECK_THROWS_AS(warp_frame(ramp_frame(4, 4), flow), NumericError);
}

TEST_CASE("occupancy: zero flow gives unit occupancy and no flags") {
  const auto r = detect_occupancy(core::FlowField(6, 7));
  for (double v : r.occupancy.storage()) CHECK(v == 1.0);
  CHECK(r.mask.count() == 0);
}

TEST_CASE("occupancy: bijective integer displacement is identically one") {
  // cyclic shift inside the image: a permutation of pixel positions
  const int h = 4, w = 5;
  core::FlowField flow(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      flow.vectors.at(0, y, x) = ((x + 2) % w) - x;
      flow.vectors.at(1, y, x) = ((y + 1) % h) - y;
    }
  const auto r = detect_occupancy(flow);
  for (double v : r.occupancy.storage()) CHECK(v == doctest::Approx(1.0));
  CHECK(r.mask.count() == 0);
}

TEST_CASE("occupancy: two targets on one integer source") {
  // targets (0,1) and (0,2) both land on (0,1); (0,1) is earlier in raster order and wins
  core::FlowField flow(1, 4);
  flow.vectors.at(0, 0, 2) = -1.0;
  const auto r = detect_occupancy(flow);
  CHECK(r.occupancy.at(0, 1) == 2.0);
  CHECK(r.occupancy.at(0, 2) == 0.0);
  CHECK_FALSE(r.mask(0, 1));
  CHECK(r.mask(0, 2));
  CHECK(r.mask.provenance(0, 2) == kOccupancy);
  CHECK(r.mask.count() == 1);
}

TEST_CASE("occupancy: semantic agreement breaks ties") {
  // same collision, but only (0,2) shares the source label, so (0,1) is flagged instead
  core::FlowField flow(1, 4);
  flow.vectors.at(0, 0, 2) = -1.0;
  core::SemanticMap target(1, 4, 2, std::vector<int>{0, 0, 1, 0});
  core::SemanticMap source(1, 4, 2, std::vector<int>{0, 1, 0, 0});
  const auto r = detect_occupancy(flow, &target, &source);
  CHECK(r.mask(0, 1));
  CHECK_FALSE(r.mask(0, 2));
}

TEST_CASE("occupancy: larger bilinear weight dominates") {
  // target 0 lands at x = 1.2 (weight 0.8 on pixel 1), target 2 at x = 1.0 (weight 1);
  // target 1 moves out of the way to x = 3
  core::FlowField flow(1, 4);
  flow.vectors.at(0, 0, 0) = 1.2;
  flow.vectors.at(0, 0, 1) = 2.0;
  flow.vectors.at(0, 0, 2) = -1.0;
  const auto r = detect_occupancy(flow);
  CHECK(r.occupancy.at(0, 1) == doctest::Approx(1.8));
  CHECK(r.mask(0, 0));
  CHECK_FALSE(r.mask(0, 2));
}

TEST_CASE("occupancy: sources outside the image are flagged") {
  const auto r = detect_occupancy(constant_flow(3, 5, -1.0, 0.0));
  for (int y = 0; y < 3; ++y) {
    CHECK(r.mask(y, 0));
    for (int x = 1; x < 5; ++x) CHECK_FALSE(r.mask(y, x));
  }
}

TEST_CASE("semantic: static scene is empty") {
  std::mt19937_64 rng(5);
  const auto map = testing::random_map(rng, 6, 6, 3);
  CHECK(detect_semantic(map, map, core::FlowField(6, 6)).count() == 0);
  CHECK(detect_disocclusion(map, map, core::FlowField(6, 6)).count() == 0);
}

TEST_CASE("semantic: class-count mismatch throws") {
  CHECK_THROWS_AS(detect_semantic(core::SemanticMap(4, 4, 2), core::SemanticMap(4, 4, 3), core::FlowField(4, 4)), ShapeError);
}

TEST_CASE("semantic: warped-source and colocated readings differ on a moving object") {
  // object moves right by one with exact flow: warped-source sees no change on the object
  core::SemanticMap prev(1, 6, 2, std::vector<int>{0, 1, 1, 0, 0, 0});
  core::SemanticMap next(1, 6, 2, std::vector<int>{0, 0, 1, 1, 0, 0});
  core::FlowField flow(1, 6);
  flow.vectors.at(0, 0, 2) = -1.0;
  flow.vectors.at(0, 0, 3) = -1.0;
  const auto warped = detect_semantic(next, prev, flow);
  CHECK(warped.count() == 1);
  CHECK(warped(0, 1));  // revealed background whose source is the object
  const auto colocated = detect_semantic(next, prev, flow, SemanticCriterion::kColocated);
  CHECK(colocated(0, 1));
  CHECK(colocated(0, 3));  // leading edge, not a dis-occlusion
}

TEST_CASE("missed-pixel scene: occupancy misses A, semantic flags it") {
  const auto s = testing::missed_pixel_scene();
  const auto occ = detect_occupancy(s.flow, &s.next_map, &s.prev_map);
  CHECK_FALSE(occ.mask(s.ay, s.ax));
  const auto sem = detect_semantic(s.next_map, s.prev_map, s.flow);
  CHECK(sem(s.ay, s.ax));
  const auto both = detect_disocclusion(s.next_map, s.prev_map, s.flow);
  CHECK(both(s.ay, s.ax));
  CHECK(both.provenance(s.ay, s.ax) == kSemantic);
}

TEST_CASE("detect_disocclusion: exact union of the criteria") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = testing::random_map(rng, 8, 9, 3);
    const auto b = testing::random_map(rng, 8, 9, 3);
    const auto flow = testing::random_flow(rng, 8, 9, 2.0);
    const auto occ = detect_occupancy(flow, &a, &b).mask;
    const auto sem = detect_semantic(a, b, flow);
    const auto both = detect_disocclusion(a, b, flow);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 9; ++x) {
        CHECK(both(y, x) == (occ(y, x) || sem(y, x)));
        CHECK(both.provenance(y, x) == (occ.provenance(y, x) | sem.provenance(y, x)));
      }
  }
}

TEST_CASE("synthworld: oracle warp is accurate in the co-visible region") {
  const auto clips = synthworld::make_clips(synthworld::default_world_spec(), 6);
  for (const auto& oc : clips) {
    for (int t = 1; t < oc.clip.length(); ++t) {
      const auto& truth = oc.clip.frames[static_cast<std::size_t>(t)];
      const auto warped = warp_frame(oc.clip.frames[static_cast<std::size_t>(t - 1)], oc.clip.flows[static_cast<std::size_t>(t)]);
      const auto& dis = oc.disocclusion[static_cast<std::size_t>(t)];
      double err = 0.0;
      int n = 0;
      for (int y = 0; y < truth.height(); ++y)
        for (int x = 0; x < truth.width(); ++x) {
          if (dis(y, x)) continue;
          for (int c = 0; c < 3; ++c) err += std::abs(warped.pixels.at(c, y, x) - truth.pixels.at(c, y, x));
          n += 3;
        }
      CHECK(err / n < 1e-3);
    }
  }
}

TEST_CASE("synthworld: criteria against the analytic oracle") {
  const auto clips = synthworld::make_clips(synthworld::default_world_spec(), 20);
  DetectionScore occupancy_score, combined_score;
  std::size_t missed = 0, recovered = 0;
  for (const auto& oc : clips) {
    for (int t = 1; t < oc.clip.length(); ++t) {
      const auto i = static_cast<std::size_t>(t);
      const auto& prev = oc.clip.maps[i - 1];
      const auto& next = oc.clip.maps[i];
      const auto& flow = oc.clip.flows[i];
      const auto& truth = oc.disocclusion[i];
      occupancy_score += score_detection(detect_occupancy(flow, &next, &prev).mask, truth);
      combined_score += score_detection(detect_disocclusion(next, prev, flow), truth);

      // smeared flow: how much of what occupancy misses does the semantic criterion recover
      const auto blurred = testing::box_blur(flow, 1);
      const auto occ = detect_occupancy(blurred, &next, &prev).mask;
      const auto sem = detect_semantic(next, prev, blurred);
      for (int y = 0; y < truth.height(); ++y)
        for (int x = 0; x < truth.width(); ++x)
          if (truth(y, x) && !occ(y, x)) {
            ++missed;
            if (sem(y, x)) ++recovered;
          }
    }
  }
  MESSAGE("occupancy recall " << occupancy_score.recall() << ", combined F1 " << combined_score.f1() << ", recovered "
                              << recovered << "/" << missed);
  CHECK(occupancy_score.recall() >= 0.8);
  CHECK(combined_score.f1() >= 0.9);
  REQUIRE(missed > 0);
  CHECK(static_cast<double>(recovered) / static_cast<double>(missed) >= 0.9);
}
