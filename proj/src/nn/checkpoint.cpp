#include "sadm/nn/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>

#include "sadm/core/error.hpp"

namespace sadm::nn {
namespace {

constexpr char kMagic[8] = {'S', 'A', 'D', 'M', 'C', 'K', 'P', 'T'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("truncated checkpoint");
  return v;
}

}  // namespace

TensorMap Archive::with_prefix(const std::string& prefix) const {
  TensorMap out;
  for (const auto& [k, t] : arrays)
    if (k.rfind(prefix, 0) == 0) out.emplace(k.substr(prefix.size()), t);
  return out;
}

void Archive::insert(const std::string& prefix, const TensorMap& src) {
  for (const auto& [k, t] : src) arrays[prefix + k] = t;
}

void save_archive(const std::filesystem::path& path, const Archive& archive) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kArchiveVersion);
  const std::string meta = archive.metadata.dump();
  put<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put<std::uint64_t>(out, archive.arrays.size());
  for (const auto& [key, t] : archive.arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put<std::int32_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Archive load_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kMagic)) throw ConfigError("not a checkpoint archive: " + path.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kArchiveVersion) throw ConfigError("unsupported checkpoint version " + std::to_string(version));

  Archive archive;
  const auto meta_len = get<std::uint64_t>(in);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw ConfigError("truncated checkpoint metadata");
  archive.metadata = nlohmann::json::parse(meta);

  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto key_len = get<std::uint32_t>(in);
    std::string key(key_len, '\0');
    in.read(key.data(), key_len);
    const auto rank = get<std::uint32_t>(in);
    if (rank > 8) throw ConfigError("corrupt checkpoint rank for " + key);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::int32_t>(in);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw ConfigError("truncated checkpoint array " + key);
    archive.arrays.emplace(std::move(key), std::move(t));
  }
  return archive;
}

}  // namespace sadm::nn
