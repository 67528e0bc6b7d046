#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ovgs/classifier.hpp"
#include "ovgs/embedder.hpp"
#include "ovgs/embedding.hpp"
#include "ovgs/relevancy.hpp"
#include "ovgs/renderer.hpp"
#include "ovgs/scene.hpp"

namespace ovgs {

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) {
    pixels[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  bool operator==(const BinaryMask&) const = default;
};

BinaryMask mask_from_ids(std::span<const std::int32_t> id_map, int width, int height,
                         const ObjectIdSet& ids);

struct SegmentationOutput {
  BinaryMask mask;
  QueryResult query;
  RenderedView view;
};

// Render, rank, keep pixels whose id is selected.
SegmentationOutput segment_2d_detailed(const GroupedScene& scene, const Camera& cam,
                                       const IdentityClassifier& clf, const EmbeddingBank& bank,
                                       std::string_view query_text, const Embedder& embedder,
                                       std::size_t k, const SelectionRule& rule,
                                       const RenderOptions& options = {});

BinaryMask segment_2d(const GroupedScene& scene, const Camera& cam, const IdentityClassifier& clf,
                      const EmbeddingBank& bank, std::string_view query_text,
                      const Embedder& embedder, std::size_t k = kDefaultTopK,
                      const SelectionRule& rule = SelectionRule::top1());

GroupedScene extract_3d(const GroupedScene& scene, const EmbeddingBank& bank,
                        std::string_view query_text, const Embedder& embedder,
                        std::size_t k = kDefaultTopK,
                        const SelectionRule& rule = SelectionRule::top1());

// |a & b| / |a | b|; 1.0 when both are empty.
double iou(const BinaryMask& pred, const BinaryMask& gt);

// 8-connected components of `mask`, largest first (ties: first in raster
// order). Each entry lists pixel indices.
std::vector<std::vector<std::size_t>> connected_components(const BinaryMask& mask);

// Representative point of a predicted mask: centroid of the largest
// component, or, when that centroid falls outside the mask, the
// highest-alpha mask pixel (nearest-to-centroid mask pixel without alpha).
std::optional<std::pair<int, int>> representative_point(const BinaryMask& pred,
                                                        std::span<const float> alpha = {});

// True iff the representative point lies inside gt. Empty pred -> false.
bool localization_hit(const BinaryMask& pred, const BinaryMask& gt,
                      std::span<const float> alpha = {});

}  // namespace ovgs
