#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "ovgs/scene.hpp"

namespace ovgs {

// GSG container: a directory holding manifest.json and arrays.bin.
//
// arrays.bin is little-endian float32, arrays concatenated in manifest order:
// positions[N*3] rotations[N*4] scales[N*3] opacities[N] colors[N*3]
// identity[N*16], then object_ids as little-endian int32[N] (-1 = UNASSIGNED).
inline constexpr std::size_t kGsgValuesPerGaussian = 3 + 4 + 3 + 1 + 3 + 16 + 1;

inline constexpr std::size_t gsg_arrays_bytes(std::size_t num_gaussians) {
  return 4 * kGsgValuesPerGaussian * num_gaussians;
}

struct GsgBlobs {
  std::string manifest;  // manifest.json text
  std::string arrays;    // arrays.bin bytes
};

GsgBlobs encode_scene(const GroupedScene& scene);
GroupedScene decode_scene(std::string_view manifest, std::string_view arrays);

GroupedScene load_scene(const std::filesystem::path& path);
void save_scene(const GroupedScene& scene, const std::filesystem::path& path);

}  // namespace ovgs
