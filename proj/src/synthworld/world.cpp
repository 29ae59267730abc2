#include "sadm/synthworld/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "sadm/core/error.hpp"

namespace sadm::synthworld {
namespace {

struct Wave {
  double kx, ky, phase;
  std::array<double, 3> amp;
};

struct Texture {
  std::array<double, 3> base{};
  std::array<Vec2, 3> gradient{};
  std::vector<Wave> waves;

  double value(int channel, double u, double v) const {
    const auto c = static_cast<std::size_t>(channel);
    double s = base[c] + gradient[c][0] * u + gradient[c][1] * v;
    for (const auto& w : waves) s += w.amp[c] * std::sin(w.kx * u + w.ky * v + w.phase);
    return std::clamp(s, 0.0, 1.0);
  }
};

struct Layer {
  int class_index = 0;
  ShapeKind shape = ShapeKind::kBackground;
  Vec2 origin{0.0, 0.0};
  Vec2 half{0.0, 0.0};  // rect half-extents; disc radius in half[0]
  std::vector<Vec2> disp;  // frames -1 .. L-1, stored at index frame + 1
  Texture texture;

  const Vec2& at(int frame) const { return disp[static_cast<std::size_t>(frame + 1)]; }

  bool contains(double px, double py, int frame) const {
    const Vec2& d = at(frame);
    const double lx = px - origin[0] - d[0], ly = py - origin[1] - d[1];
    switch (shape) {
      case ShapeKind::kBackground: return true;
      case ShapeKind::kRect: return std::abs(lx) <= half[0] && std::abs(ly) <= half[1];
      case ShapeKind::kDisc: return lx * lx + ly * ly <= half[0] * half[0];
    }
    return false;
  }
};

const char* shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::kBackground: return "background";
    case ShapeKind::kRect: return "rect";
    case ShapeKind::kDisc: return "disc";
  }
  return "?";
}

ShapeKind shape_from(const std::string& s) {
  if (s == "background") return ShapeKind::kBackground;
  if (s == "rect") return ShapeKind::kRect;
  if (s == "disc") return ShapeKind::kDisc;
  throw ConfigError("unknown shape kind '" + s + "'");
}

const char* law_name(MotionLaw::Kind k) {
  switch (k) {
    case MotionLaw::Kind::kStatic: return "static";
    case MotionLaw::Kind::kDrift: return "drift";
    case MotionLaw::Kind::kOscillate: return "oscillate";
  }
  return "?";
}

MotionLaw::Kind law_from(const std::string& s) {
  if (s == "static") return MotionLaw::Kind::kStatic;
  if (s == "drift") return MotionLaw::Kind::kDrift;
  if (s == "oscillate") return MotionLaw::Kind::kOscillate;
  throw ConfigError("unknown motion law '" + s + "'");
}

Texture random_texture(std::mt19937_64& rng, double noise) {
  std::uniform_real_distribution<double> base(0.2, 0.8), grad(-0.004, 0.004), unit(0.0, 1.0);
  Texture t;
  for (std::size_t c = 0; c < 3; ++c) {
    t.base[c] = base(rng);
    t.gradient[c] = {grad(rng), grad(rng)};
  }
  for (int k = 0; k < 2; ++k) {
    const double wavelength = 20.0 + 20.0 * unit(rng);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    Wave w{2.0 * std::numbers::pi / wavelength * std::cos(theta), 2.0 * std::numbers::pi / wavelength * std::sin(theta),
           2.0 * std::numbers::pi * unit(rng), {}};
    for (double& a : w.amp) a = 0.5 * noise * (0.5 + 0.5 * unit(rng));
    t.waves.push_back(w);
  }
  return t;
}

int top_layer(const std::vector<Layer>& layers, double px, double py, int frame) {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (it->contains(px, py, frame)) return static_cast<int>(it - layers.rbegin());
  return -1;
}

// Index into `layers` (front-to-back search result converted to a forward index).
int top_layer_index(const std::vector<Layer>& layers, double px, double py, int frame) {
  const int from_back = top_layer(layers, px, py, frame);
  return static_cast<int>(layers.size()) - 1 - from_back;
}

}  // namespace

Vec2 MotionLaw::displacement(double t, double phase) const {
  switch (kind) {
    case Kind::kStatic: return {0.0, 0.0};
    case Kind::kDrift: return {velocity[0] * t, velocity[1] * t};
    case Kind::kOscillate: {
      const double s = amplitude * (std::sin(2.0 * std::numbers::pi * t / period + phase) - std::sin(phase));
      return axis == 0 ? Vec2{s, 0.0} : Vec2{0.0, s};
    }
  }
  return {0.0, 0.0};
}

void WorldSpec::validate() const {
  if (height < 2 || width < 2) throw ConfigError("world canvas must be at least 2x2");
  if (observed_len < 1 || horizon < 1) throw ConfigError("world needs observed_len >= 1 and horizon >= 1");
  if (classes.empty()) throw ConfigError("world needs at least one class");
  if (classes.size() > 255) throw ConfigError("at most 255 classes");
  if (camera_pan.empty()) throw ConfigError("camera_pan needs at least one option");
  std::set<int> ids;
  for (const auto& c : classes) {
    if (!ids.insert(c.id).second) throw ConfigError("duplicate class id " + std::to_string(c.id));
    if (c.shape != ShapeKind::kBackground && (c.size_min <= 0.0 || c.size_max < c.size_min)) {
      throw ConfigError("class " + std::to_string(c.id) + ": bad size range");
    }
    if (c.law.kind == MotionLaw::Kind::kOscillate && c.law.period <= 0.0) throw ConfigError("oscillation period must be positive");
  }
  if (*ids.begin() != 1 || *ids.rbegin() != static_cast<int>(classes.size())) throw ConfigError("class ids must be exactly 1..C");
  if (classes.front().shape != ShapeKind::kBackground) throw ConfigError("the first (back-most) class must be the background");
  for (std::size_t i = 1; i < classes.size(); ++i)
    if (classes[i].shape == ShapeKind::kBackground) throw ConfigError("only one background class is allowed");
}

WorldSpec default_world_spec() {
  WorldSpec spec;
  spec.camera_pan = {{-1.0, 0.0}, {0.0, 0.0}, {1.0, 0.0}};
  ClassSpec background{1, "background", ShapeKind::kBackground, 0.0, 0.0, {}};
  ClassSpec mover_a{2, "mover-a", ShapeKind::kRect, 5.0, 8.0, {}};
  mover_a.law.kind = MotionLaw::Kind::kDrift;
  mover_a.law.velocity = {2.0, 0.0};
  ClassSpec mover_b{3, "mover-b", ShapeKind::kDisc, 6.0, 9.0, {}};
  mover_b.law.kind = MotionLaw::Kind::kOscillate;
  mover_b.law.amplitude = 4.0;
  mover_b.law.period = 16.0;
  mover_b.law.axis = 1;
  // the disc is layered behind the rectangle
  spec.classes = {background, mover_b, mover_a};
  spec.classes[1].id = 2;
  spec.classes[2].id = 3;
  return spec;
}

WorldSpec static_world_spec(int height, int width, int length) {
  WorldSpec spec;
  spec.height = height;
  spec.width = width;
  spec.observed_len = std::max(1, length / 2);
  spec.horizon = std::max(1, length - spec.observed_len);
  spec.classes = {ClassSpec{1, "background", ShapeKind::kBackground, 0.0, 0.0, {}}};
  return spec;
}

Vec2 OracleClip::law_flow(int class_index, int frame) const {
  const auto& d = displacement.at(static_cast<std::size_t>(class_index));
  const Vec2 prev = d.at(static_cast<std::size_t>(frame));  // index frame == frame - 1 shifted by one
  const Vec2 cur = d.at(static_cast<std::size_t>(frame + 1));
  return {prev[0] - cur[0], prev[1] - cur[1]};
}

OracleClip generate(const WorldSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int h = spec.height, w = spec.width, n = spec.length();
  const int num_classes = spec.num_classes();

  const Vec2 pan = spec.camera_pan[std::uniform_int_distribution<std::size_t>(0, spec.camera_pan.size() - 1)(rng)];

  std::vector<Layer> layers;
  for (const auto& cs : spec.classes) {
    Layer layer;
    layer.class_index = cs.id - 1;
    layer.shape = cs.shape;
    MotionLaw law = cs.law;
    if (cs.shape == ShapeKind::kBackground && law.kind == MotionLaw::Kind::kStatic) {
      law.kind = MotionLaw::Kind::kDrift;
      law.velocity = pan;
    }
    const double phase = law.random_phase ? 2.0 * std::numbers::pi * unit(rng) : 0.0;
    for (int f = -1; f < n; ++f) {
      Vec2 d = law.displacement(f, phase);
      if (spec.integer_motion) d = {std::round(d[0]), std::round(d[1])};
      layer.disp.push_back(d);
    }
    if (cs.shape != ShapeKind::kBackground) {
      const double size = cs.size_min + (cs.size_max - cs.size_min) * unit(rng);
      layer.half = cs.shape == ShapeKind::kRect ? Vec2{size, cs.size_min + (cs.size_max - cs.size_min) * unit(rng)} : Vec2{size, size};
      for (std::size_t axis = 0; axis < 2; ++axis) {
        double lo = 1e300, hi = -1e300;
        for (const auto& d : layer.disp) {
          lo = std::min(lo, d[axis]);
          hi = std::max(hi, d[axis]);
        }
        const double extent = axis == 0 ? w : h;
        const double margin = 0.5 * layer.half[axis];
        double min_o = margin - lo, max_o = extent - 1 - margin - hi;
        if (min_o > max_o) min_o = max_o = 0.5 * (min_o + max_o);
        layer.origin[axis] = min_o + (max_o - min_o) * unit(rng);
        if (spec.integer_motion) layer.origin[axis] = std::round(layer.origin[axis]);
      }
    }
    layer.texture = random_texture(rng, spec.texture_noise);
    layers.push_back(std::move(layer));
  }

  OracleClip out;
  out.seed = spec.seed;
  out.clip.observed_len = spec.observed_len;
  out.clip.horizon = spec.horizon;
  out.displacement.assign(static_cast<std::size_t>(num_classes), {});
  for (const auto& layer : layers) out.displacement[static_cast<std::size_t>(layer.class_index)] = layer.disp;

  for (int f = 0; f < n; ++f) {
    core::Frame frame(h, w, f);
    core::FlowField flow(h, w);
    core::SemanticMap map(h, w, num_classes);
    warp::DisocclusionMask dis(h, w);
    Tensor occ({h, w});
    std::vector<int> owner(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int li = top_layer_index(layers, x, y, f);
        const Layer& layer = layers[static_cast<std::size_t>(li)];
        owner[static_cast<std::size_t>(y) * w + x] = li;
        const Vec2& d = layer.at(f);
        const double u = x - layer.origin[0] - d[0], v = y - layer.origin[1] - d[1];
        for (int c = 0; c < 3; ++c) frame.pixels.at(c, y, x) = layer.texture.value(c, u, v);
        map.set(y, x, layer.class_index);
        const Vec2& dp = layer.at(f - 1);
        flow.vectors.at(0, y, x) = dp[0] - d[0];
        flow.vectors.at(1, y, x) = dp[1] - d[1];
      }
    }
    if (f > 0) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double sx = x + flow.u(y, x), sy = y + flow.v(y, x);
          const bool inside = sx >= -1e-9 && sx <= w - 1 + 1e-9 && sy >= -1e-9 && sy <= h - 1 + 1e-9;
          if (inside) {
            const int qx = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
            const int qy = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
            occ.at(qy, qx) += 1.0;
          }
          if (!inside || top_layer_index(layers, sx, sy, f - 1) != owner[static_cast<std::size_t>(y) * w + x]) {
            dis.mark(y, x, warp::kAnalytic);
          }
        }
      }
    }
    out.clip.frames.push_back(std::move(frame));
    out.clip.flows.push_back(std::move(flow));
    out.clip.maps.push_back(std::move(map));
    out.disocclusion.push_back(std::move(dis));
    out.occupancy.push_back(std::move(occ));
  }
  return out;
}

warp::DisocclusionMask oracle_disocclusion(const OracleClip& clip, int t) {
  if (t < 1 || t >= clip.clip.length()) throw ContractError("oracle_disocclusion: frame index must be in 1..L-1");
  return clip.disocclusion[static_cast<std::size_t>(t)];
}

nlohmann::json to_json(const WorldSpec& spec) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : spec.classes) {
    classes.push_back({{"id", c.id},
                       {"name", c.name},
                       {"shape", shape_name(c.shape)},
                       {"size_min", c.size_min},
                       {"size_max", c.size_max},
                       {"law",
                        {{"kind", law_name(c.law.kind)},
                         {"velocity", c.law.velocity},
                         {"amplitude", c.law.amplitude},
                         {"period", c.law.period},
                         {"axis", c.law.axis},
                         {"random_phase", c.law.random_phase}}}});
  }
  return {{"height", spec.height},
          {"width", spec.width},
          {"classes", classes},
          {"camera_pan", spec.camera_pan},
          {"observed_len", spec.observed_len},
          {"horizon", spec.horizon},
          {"seed", spec.seed},
          {"integer_motion", spec.integer_motion},
          {"texture_noise", spec.texture_noise}};
}

WorldSpec world_spec_from_json(const nlohmann::json& j) {
  WorldSpec spec = default_world_spec();
  try {
    spec.height = j.value("height", spec.height);
    spec.width = j.value("width", spec.width);
    spec.observed_len = j.value("observed_len", spec.observed_len);
    spec.horizon = j.value("horizon", spec.horizon);
    spec.seed = j.value("seed", spec.seed);
    spec.integer_motion = j.value("integer_motion", spec.integer_motion);
    spec.texture_noise = j.value("texture_noise", spec.texture_noise);
    if (j.contains("camera_pan")) spec.camera_pan = j.at("camera_pan").get<std::vector<Vec2>>();
    if (j.contains("classes")) {
      spec.classes.clear();
      for (const auto& c : j.at("classes")) {
        ClassSpec cs;
        cs.id = c.at("id").get<int>();
        cs.name = c.value("name", "");
        cs.shape = shape_from(c.value("shape", "background"));
        cs.size_min = c.value("size_min", 4.0);
        cs.size_max = c.value("size_max", 8.0);
        if (c.contains("law")) {
          const auto& l = c.at("law");
          cs.law.kind = law_from(l.value("kind", "static"));
          if (l.contains("velocity")) cs.law.velocity = l.at("velocity").get<Vec2>();
          cs.law.amplitude = l.value("amplitude", 0.0);
          cs.law.period = l.value("period", 1.0);
          cs.law.axis = l.value("axis", 1);
          cs.law.random_phase = l.value("random_phase", true);
        }
        spec.classes.push_back(cs);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("world spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string spec_hash(const WorldSpec& spec) {
  std::uint64_t hsh = 1469598103934665603ull;
  for (unsigned char ch : to_json(spec).dump()) {
    hsh ^= ch;
    hsh *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hsh));
  return buf;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace sadm::synthworld
