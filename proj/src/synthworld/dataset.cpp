#include "sadm/synthworld/dataset.hpp"

#include <cstdio>
#include <fstream>

#include "sadm/core/error.hpp"
#include "sadm/core/io.hpp"

namespace sadm::synthworld {
namespace {

std::string numbered(const char* stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%02d%s", stem, i, ext);
  return buf;
}

}  // namespace

std::vector<OracleClip> make_clips(const WorldSpec& spec, int count, std::uint64_t stream) {
  std::vector<OracleClip> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    WorldSpec s = spec;
    s.seed = derive_seed(spec.seed, stream + static_cast<std::uint64_t>(i));
    out.push_back(generate(s));
  }
  return out;
}

void write_split(const std::filesystem::path& root, const std::string& split, const WorldSpec& spec,
                 const std::vector<OracleClip>& clips) {
  namespace fs = std::filesystem;
  const std::string hash = spec_hash(spec);
  fs::create_directories(root / split);
  std::ofstream manifest(root / "manifest.jsonl", std::ios::app);
  if (!manifest) throw ConfigError("cannot open manifest in " + root.string());
  for (std::size_t k = 0; k < clips.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04zu", k);
    const fs::path rel = fs::path(split) / name;
    const fs::path dir = root / rel;
    fs::create_directories(dir);
    const auto& oc = clips[k];
    const core::Clip& c = oc.clip;
    for (int t = 0; t < c.length(); ++t) {
      const auto i = static_cast<std::size_t>(t);
      core::io::write_frame_png(dir / numbered("frame", t, ".png"), c.frames[i]);
      core::io::write_flo(dir / numbered("flow", t, ".flo"), c.flows[i]);
      core::io::write_map_png(dir / numbered("seg", t, ".png"), c.maps[i]);
      core::io::write_mask_png(dir / numbered("disocc", t, ".png"), oc.disocclusion[i].as_bools(), c.height(), c.width());
    }
    nlohmann::json line{{"split", split},   {"path", rel.string()},       {"seed", oc.seed},
                        {"spec_hash", hash}, {"length", c.length()},       {"observed_len", c.observed_len},
                        {"height", c.height()}, {"width", c.width()}, {"num_classes", c.num_classes()}};
    manifest << line.dump() << '\n';
  }
}

core::Clip read_clip(const std::filesystem::path& dir, int length, int num_classes, int observed_len) {
  core::Clip c;
  c.observed_len = observed_len;
  c.horizon = length - observed_len;
  for (int t = 0; t < length; ++t) {
    c.frames.push_back(core::io::read_frame_png(dir / numbered("frame", t, ".png"), t));
    c.flows.push_back(core::io::read_flo(dir / numbered("flow", t, ".flo")));
    c.maps.push_back(core::io::read_map_png(dir / numbered("seg", t, ".png"), num_classes));
  }
  c.validate();
  return c;
}

std::vector<core::Clip> read_split(const std::filesystem::path& root, const std::string& split) {
  std::ifstream manifest(root / "manifest.jsonl");
  if (!manifest) throw ConfigError("no manifest in " + root.string());
  std::vector<core::Clip> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("bad manifest line: " + std::string(e.what()));
    }
    if (rec.value("split", "") != split) continue;
    out.push_back(read_clip(root / rec.at("path").get<std::string>(), rec.at("length"), rec.at("num_classes"),
                            rec.at("observed_len")));
  }
  return out;
}

}  // namespace sadm::synthworld
