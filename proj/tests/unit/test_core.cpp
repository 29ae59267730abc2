#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "../support/random.hpp"
#include "sadm/core/error.hpp"
#include "sadm/core/io.hpp"
#include "sadm/core/ops.hpp"

using namespace sadm;
using namespace sadm::core;

TEST_CASE("decompose: uniform map puts everything in one class") {
  SemanticMap map(4, 5, 3, 0);
  std::mt19937_64 rng(1);
  FlowField flow = testing::random_flow(rng, 4, 5);
  const auto d = decompose(map, flow);
  REQUIRE(d.num_classes() == 3);
  CHECK(d.masks[0].sum() == 20.0);
  CHECK(d.masks[1].sum() == 0.0);
  CHECK(d.masks[2].sum() == 0.0);
  CHECK(d.masked_flows[0].storage() == flow.vectors.storage());
  CHECK(d.masked_flows[1].abs_max() == 0.0);
}

TEST_CASE("decompose: 2x2 two-class map") {
  // class ids 1,2 in files are 0,1 in memory
  SemanticMap map(2, 2, 2, std::vector<int>{0, 1, 0, 1});
  FlowField flow(2, 2);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) flow.vectors.at(0, y, x) = 1.0;
  const auto d = decompose(map, flow);
  CHECK(d.masks[0].storage() == std::vector<double>{1, 0, 1, 0});
  CHECK(d.masks[1].storage() == std::vector<double>{0, 1, 0, 1});
  for (int y = 0; y < 2; ++y) {
    CHECK(d.masked_flows[1].at(0, y, 0) == 0.0);
    CHECK(d.masked_flows[1].at(1, y, 0) == 0.0);
    CHECK(d.masked_flows[1].at(0, y, 1) == 1.0);
  }
}

TEST_CASE("decompose: partition and recomposition on random inputs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto map = testing::random_map(rng, 9, 11, 4);
    const auto flow = testing::random_flow(rng, 9, 11);
    const auto d = decompose(map, flow);
    Tensor masks_total({9, 11});
    Tensor flow_total({2, 9, 11});
    for (int c = 0; c < 4; ++c) {
      masks_total += d.masks[static_cast<std::size_t>(c)];
      flow_total += d.masked_flows[static_cast<std::size_t>(c)];
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 11; ++x) {
          if (d.masks[static_cast<std::size_t>(c)].at(y, x) == 0.0) {
            CHECK(d.masked_flows[static_cast<std::size_t>(c)].at(0, y, x) == 0.0);
            CHECK(d.masked_flows[static_cast<std::size_t>(c)].at(1, y, x) == 0.0);
          }
        }
    }
    for (double v : masks_total.values()) CHECK(v == 1.0);
    CHECK((flow_total - flow.vectors).abs_max() <= 1e-6);
  }
}

TEST_CASE("decompose: shape mismatch") {
  SemanticMap map(4, 4, 2);
  FlowField flow(4, 5);
  CHECK_THROWS_AS(decompose(map, flow), ShapeError);
}

TEST_CASE("bilinear_sample: identity grid is exact") {
  std::mt19937_64 rng(3);
  const Tensor img = testing::random_tensor(rng, {3, 6, 7});
  const Tensor out = bilinear_sample(img, flow_to_coords(FlowField(6, 7)));
  CHECK(out.storage() == img.storage());
}

TEST_CASE("bilinear_sample: half-pixel shift on a ramp averages neighbours") {
  Tensor ramp({1, 3, 5});
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) ramp.at(0, y, x) = x * x;  // non-linear so the average is distinguishable
  FlowField shift(3, 5);
  shift.vectors.fill(0.0);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) shift.vectors.at(0, y, x) = 0.5;
  const Tensor out = bilinear_sample(ramp, flow_to_coords(shift));
  for (int x = 0; x < 4; ++x) CHECK(out.at(0, 1, x) == doctest::Approx(0.5 * (x * x + (x + 1) * (x + 1))));
  // x = 4.5 clamps to the last column
  CHECK(out.at(0, 1, 4) == 16.0);
}

TEST_CASE("bilinear_sample: beyond the right border clamps") {
  Tensor img({1, 2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor coords({2, 2, 3});
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      coords.at(0, y, x) = 10.0 + x;
      coords.at(1, y, x) = y;
    }
  const Tensor out = bilinear_sample(img, coords);
  for (int x = 0; x < 3; ++x) {
    CHECK(out.at(0, 0, x) == 3.0);
    CHECK(out.at(0, 1, x) == 6.0);
  }
}

TEST_CASE("bilinear_sample: linear in the image") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor a = testing::random_tensor(rng, {2, 8, 8});
    const Tensor b = testing::random_tensor(rng, {2, 8, 8});
    const Tensor coords = testing::random_tensor(rng, {2, 8, 8}, -2.0, 10.0);
    const double ka = 0.7, kb = -1.3;
    const Tensor lhs = bilinear_sample(a * ka + b * kb, coords);
    const Tensor rhs = bilinear_sample(a, coords) * ka + bilinear_sample(b, coords) * kb;
    CHECK((lhs - rhs).abs_max() <= 1e-6);
  }
}

TEST_CASE("bilinear_sample: non-finite coordinates") {
  Tensor img({1, 2, 2});
  Tensor coords({2, 2, 2});
  coords[3] = std::nan("");
  CHECK_THROWS_AS(bilinear_sample(img, coords), NumericError);
}

TEST_CASE("boundary_weights: uniform map and alpha = 0") {
  SemanticMap uniform(10, 10, 3, 2);
  const auto w = boundary_weights(uniform, 5.0, 9.0);
  for (double v : w.weights.values()) CHECK(v == 1.0);

  std::mt19937_64 rng(5);
  const auto map = testing::random_map(rng, 10, 10, 3);
  const auto w0 = boundary_weights(map, 0.0, 9.0);
  for (double v : w0.weights.values()) CHECK(v == 1.0);
}

namespace {

// Independent oracle: direct 2-D convolution with a square truncated, renormalized Gaussian.
Tensor brute_force_weights(const SemanticMap& map, double alpha, double variance) {
  const int h = map.height(), w = map.width();
  const int r = static_cast<int>(std::ceil(3.0 * std::sqrt(variance)));
  std::vector<double> k2;
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      k2.push_back(std::exp(-(dx * dx + dy * dy) / (2.0 * variance)));
      total += k2.back();
    }
  Tensor out({h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      std::size_t i = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx, ++i) {
          const int yy = y + dy, xx = x + dx;
          if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
          const int l = map(yy, xx);
          const bool edge = (xx + 1 < w && map(yy, xx + 1) != l) || (yy + 1 < h && map(yy + 1, xx) != l);
          acc += edge ? k2[i] / total : 0.0;
        }
      out.at(y, x) = 1.0 + alpha * acc;
    }
  return out;
}

}  // namespace

TEST_CASE("boundary_weights: vertical half-plane matches direct 2-D convolution") {
  const int h = 40, w = 40;
  SemanticMap map(h, w, 2);
  for (int y = 0; y < h; ++y)
    for (int x = 20; x < w; ++x) map.set(y, x, 1);
  const auto got = boundary_weights(map, 5.0, 9.0);
  const Tensor want = brute_force_weights(map, 5.0, 9.0);
  CHECK((got.weights - want).abs_max() <= 1e-12);

  // forward differences mark column 19; far from the image top/bottom the peak is 1 + 5 * g(0)
  double norm = 0.0;
  for (int k = -9; k <= 9; ++k) norm += std::exp(-k * k / 18.0);
  CHECK(got.weights.at(20, 19) == doctest::Approx(1.0 + 5.0 / norm).epsilon(1e-12));
  for (int x = 0; x < w; ++x) CHECK(got.weights.at(20, x) <= got.weights.at(20, 19));
  CHECK(got.weights.at(20, 0) == 1.0);
}

TEST_CASE("boundary_weights: invariant to class relabeling and bounded by 1 + alpha") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto map = testing::random_map(rng, 16, 12, 3);
    std::vector<int> relabeled = map.labels();
    for (int& l : relabeled) l = (l * 2 + 1) % 3;  // bijection on {0,1,2}
    const SemanticMap other(16, 12, 3, relabeled);
    const auto a = boundary_weights(map, 5.0, 9.0);
    const auto b = boundary_weights(other, 5.0, 9.0);
    CHECK(a.weights.storage() == b.weights.storage());
    for (double v : a.weights.values()) {
      CHECK(v >= 1.0);
      CHECK(v <= 6.0 + 1e-12);
    }
  }
}

TEST_CASE("io: .flo layout and round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "sadm_test_io";
  std::filesystem::create_directories(dir);
  FlowField flow(3, 4);
  for (std::size_t i = 0; i < flow.vectors.size(); ++i) flow.vectors[i] = 0.25 * static_cast<double>(i) - 2.0;
  io::write_flo(dir / "a.flo", flow);
  CHECK(std::filesystem::file_size(dir / "a.flo") == 12 + 3 * 4 * 2 * 4);
  {
    std::ifstream in(dir / "a.flo", std::ios::binary);
    float magic;
    std::int32_t w, h;
    in.read(reinterpret_cast<char*>(&magic), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    in.read(reinterpret_cast<char*>(&h), 4);
    CHECK(magic == 202021.25f);
    CHECK(w == 4);
    CHECK(h == 3);
    float u0, v0;
    in.read(reinterpret_cast<char*>(&u0), 4);
    in.read(reinterpret_cast<char*>(&v0), 4);
    CHECK(u0 == static_cast<float>(flow.u(0, 0)));
    CHECK(v0 == static_cast<float>(flow.v(0, 0)));
  }
  const FlowField back = io::read_flo(dir / "a.flo");
  CHECK(back.vectors.storage() == flow.vectors.storage());

  std::ofstream(dir / "bad.flo", std::ios::binary) << "nope";
  CHECK_THROWS_AS(io::read_flo(dir / "bad.flo"), ConfigError);
}

TEST_CASE("io: label and frame PNG") {
  const auto dir = std::filesystem::temp_directory_path() / "sadm_test_io";
  std::mt19937_64 rng(2);
  const auto map = testing::random_map(rng, 5, 6, 3);
  io::write_map_png(dir / "m.png", map);
  CHECK(io::read_map_png(dir / "m.png", 3) == map);
  CHECK_THROWS_AS(io::read_map_png(dir / "m.png", 1), ConfigError);

  Frame frame(4, 4);
  for (std::size_t i = 0; i < frame.pixels.size(); ++i) frame.pixels[i] = static_cast<double>(i % 256) / 255.0;
  io::write_frame_png(dir / "f.png", frame);
  const Frame back = io::read_frame_png(dir / "f.png");
  CHECK((back.pixels - frame.pixels).abs_max() <= 1e-12);

  std::vector<bool> mask{true, false, false, true, true, false};
  io::write_mask_png(dir / "d.png", mask, 2, 3);
  int h = 0, w = 0;
  CHECK(io::read_mask_png(dir / "d.png", h, w) == mask);
}

TEST_CASE("types: validation") {
  CHECK_THROWS_AS(SemanticMap(2, 2, 2, std::vector<int>{0, 1, 2, 0}), ShapeError);
  Frame f(2, 2);
  f.pixels[0] = 1.5;
  CHECK_THROWS_AS(f.validate(), NumericError);
  SoftSemanticMap s(Tensor({2, 1, 1}, {0.3, 0.3}));
  CHECK_THROWS_AS(s.validate(), NumericError);
}
