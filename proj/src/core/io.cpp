#include "sadm/core/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "sadm/core/error.hpp"

namespace sadm::core::io {
namespace {

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

void write_png(const fs::path& path, const cv::Mat& mat) {
  ensure_parent(path);
  if (!cv::imwrite(path.string(), mat)) throw ConfigError("failed to write " + path.string());
}

cv::Mat read_png(const fs::path& path, int flags) {
  cv::Mat mat = cv::imread(path.string(), flags);
  if (mat.empty()) throw ConfigError("failed to read image " + path.string());
  return mat;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

void write_rgb_png(const fs::path& path, const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(0) != 3) throw ShapeError("write_rgb_png expects [3,H,W]");
  const int h = rgb.dim(1), w = rgb.dim(2);
  cv::Mat mat(h, w, CV_8UC3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // OpenCV stores BGR
      mat.at<cv::Vec3b>(y, x) = cv::Vec3b(to_byte(rgb.at(2, y, x)), to_byte(rgb.at(1, y, x)), to_byte(rgb.at(0, y, x)));
    }
  }
  write_png(path, mat);
}

void write_frame_png(const fs::path& path, const Frame& frame) { write_rgb_png(path, frame.pixels); }

Frame read_frame_png(const fs::path& path, int timestamp) {
  const cv::Mat mat = read_png(path, cv::IMREAD_COLOR);
  Frame frame(mat.rows, mat.cols, timestamp);
  for (int y = 0; y < mat.rows; ++y) {
    for (int x = 0; x < mat.cols; ++x) {
      const auto px = mat.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) frame.pixels.at(c, y, x) = px[2 - c] / 255.0;
    }
  }
  return frame;
}

void write_map_png(const fs::path& path, const SemanticMap& map) {
  if (map.num_classes() > 255) throw ConfigError("class count too large for 8-bit label PNG");
  cv::Mat mat(map.height(), map.width(), CV_8UC1);
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) mat.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(map(y, x) + 1);
  write_png(path, mat);
}

SemanticMap read_map_png(const fs::path& path, int num_classes) {
  const cv::Mat mat = read_png(path, cv::IMREAD_UNCHANGED);
  if (mat.type() != CV_8UC1) throw ConfigError("label PNG must be single-channel 8-bit: " + path.string());
  std::vector<int> labels(static_cast<std::size_t>(mat.rows) * mat.cols);
  for (int y = 0; y < mat.rows; ++y) {
    for (int x = 0; x < mat.cols; ++x) {
      const int id = mat.at<std::uint8_t>(y, x);
      if (id < 1 || id > num_classes) throw ConfigError("class id " + std::to_string(id) + " outside 1.." + std::to_string(num_classes) + " in " + path.string());
      labels[static_cast<std::size_t>(y) * mat.cols + x] = id - 1;
    }
  }
  return SemanticMap(mat.rows, mat.cols, num_classes, std::move(labels));
}

void write_mask_png(const fs::path& path, const std::vector<bool>& mask, int height, int width) {
  if (mask.size() != static_cast<std::size_t>(height) * width) throw ShapeError("mask size does not match H*W");
  cv::Mat mat(height, width, CV_8UC1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) mat.at<std::uint8_t>(y, x) = mask[static_cast<std::size_t>(y) * width + x] ? 255 : 0;
  write_png(path, mat);
}

std::vector<bool> read_mask_png(const fs::path& path, int& height, int& width) {
  const cv::Mat mat = read_png(path, cv::IMREAD_GRAYSCALE);
  height = mat.rows;
  width = mat.cols;
  std::vector<bool> mask(static_cast<std::size_t>(height) * width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) mask[static_cast<std::size_t>(y) * width + x] = mat.at<std::uint8_t>(y, x) >= 128;
  return mask;
}

void write_flo(const fs::path& path, const FlowField& flow) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string());
  const std::int32_t w = flow.width(), h = flow.height();
  out.write(reinterpret_cast<const char*>(&kFloMagic), sizeof(float));
  out.write(reinterpret_cast<const char*>(&w), sizeof(w));
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  std::vector<float> row(static_cast<std::size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      row[2 * static_cast<std::size_t>(x)] = static_cast<float>(flow.u(y, x));
      row[2 * static_cast<std::size_t>(x) + 1] = static_cast<float>(flow.v(y, x));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

FlowField read_flo(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  float magic = 0.0f;
  std::int32_t w = 0, h = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  in.read(reinterpret_cast<char*>(&w), sizeof(w));
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in || magic != kFloMagic) throw ConfigError("bad .flo magic in " + path.string());
  if (w <= 0 || h <= 0 || w > 100000 || h > 100000) throw ConfigError("bad .flo dimensions in " + path.string());
  FlowField flow(h, w);
  std::vector<float> row(static_cast<std::size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw ConfigError("truncated .flo file " + path.string());
    for (int x = 0; x < w; ++x) {
      flow.vectors.at(0, y, x) = row[2 * static_cast<std::size_t>(x)];
      flow.vectors.at(1, y, x) = row[2 * static_cast<std::size_t>(x) + 1];
    }
  }
  return flow;
}

}  // namespace sadm::core::io
