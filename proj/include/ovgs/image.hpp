#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ovgs {

inline constexpr std::uint16_t kPgmUnassigned = 65535;

/// Interleaved RGB, row-major, values in [0,1].
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0f) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  float* at(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const float* at(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

/// Per-pixel object ids, row-major; kUnassigned for unlabeled pixels.
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;

  std::int32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

// P6, 8 bit.
void write_ppm(const RgbImage& image, const std::filesystem::path& path);
RgbImage read_ppm(const std::filesystem::path& path);

// P5, 16 bit big-endian; 65535 <-> kUnassigned.
void write_label_pgm(const LabelImage& image, const std::filesystem::path& path);
// Accepts 8- and 16-bit P5. For 16-bit files 65535 maps to kUnassigned.
LabelImage read_label_pgm(const std::filesystem::path& path);

// Header-less little-endian float32, planar (channel-major) layout.
void write_planar_f32(std::span<const float> interleaved, int width, int height, int channels,
                      const std::filesystem::path& path);

// 8-bit RGB PNG in memory.
std::string encode_png(const RgbImage& image);

}  // namespace ovgs
