#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ovgs/classifier.hpp"
#include "ovgs/image.hpp"
#include "ovgs/scene.hpp"

namespace ovgs {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovDilation = 0.3;  // pixel^2 low-pass
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;
inline constexpr double kAlphaFloor = 0.5;

struct ProjectedSplat {
  std::array<double, 2> mean{};
  std::array<double, 3> cov{};    // xx, xy, yy (pixel^2, dilated)
  std::array<double, 3> conic{};  // inverse of cov: xx, xy, yy
  double depth = 0.0;
  std::array<float, 3> color{};
  float opacity = 0.0f;
  IdentityEncoding identity{};
  std::size_t source_index = 0;
  // Half-extent of the axis-aligned box outside which alpha < kMinAlpha.
  std::array<double, 2> support{};
};

// EWA projection. Empty when depth <= kNearPlane or the 3-sigma footprint
// misses the image.
std::optional<ProjectedSplat> project_gaussian(const SplatGaussian& g, const Camera& cam,
                                               std::size_t source_index = 0);

// Per-pixel alpha of a splat before the 0.99 clamp and skip threshold.
double splat_alpha(const ProjectedSplat& s, double px, double py);

struct RenderOptions {
  int tile_size = 16;
  unsigned threads = 0;  // 0 = hardware concurrency
  double alpha_floor = kAlphaFloor;
};

struct RenderedView {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;                 // H*W*3, over black
  std::vector<float> alpha;               // H*W
  std::vector<float> identity_features;   // H*W*16
  std::vector<std::int32_t> id_map;       // H*W
  Camera camera;

  RgbImage rgb_image() const;
  LabelImage id_image() const;
};

RenderedView render(const GroupedScene& scene, const Camera& cam, const IdentityClassifier& clf,
                    const RenderOptions& options = {});

// Argmax id per pixel where alpha > alpha_floor, else kUnassigned.
std::vector<std::int32_t> classify_pixels(std::span<const float> features,
                                          std::span<const float> alpha,
                                          const IdentityClassifier& clf,
                                          double alpha_floor = kAlphaFloor);

}  // namespace ovgs
