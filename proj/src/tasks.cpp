#include "ovgs/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ovgs/error.hpp"

namespace ovgs {

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

BinaryMask mask_from_ids(std::span<const std::int32_t> id_map, int width, int height,
                         const ObjectIdSet& ids) {
  BinaryMask m(width, height);
  if (id_map.size() != m.pixels.size()) throw InputError("id map does not match dimensions");
  for (std::size_t p = 0; p < id_map.size(); ++p)
    m.pixels[p] = id_map[p] != kUnassigned && ids.contains(id_map[p]) ? 1 : 0;
  return m;
}

namespace {

void check_consistent(const GroupedScene& scene, const EmbeddingBank& bank) {
  for (const auto& [id, bag] : bank.bags) {
    if (id >= scene.num_objects)
      throw InputError("bank object " + std::to_string(id) + " is not in the scene (K = " +
                       std::to_string(scene.num_objects) + ")");
  }
}

}  // namespace

SegmentationOutput segment_2d_detailed(const GroupedScene& scene, const Camera& cam,
                                       const IdentityClassifier& clf, const EmbeddingBank& bank,
                                       std::string_view query_text, const Embedder& embedder,
                                       std::size_t k, const SelectionRule& rule,
                                       const RenderOptions& options) {
  check_consistent(scene, bank);
  SegmentationOutput out;
  out.query = rank_objects(bank, query_text, embedder, k, rule);
  out.view = render(scene, cam, clf, options);
  const ObjectIdSet ids(out.query.selected.begin(), out.query.selected.end());
  out.mask = mask_from_ids(out.view.id_map, out.view.width, out.view.height, ids);
  return out;
}

BinaryMask segment_2d(const GroupedScene& scene, const Camera& cam, const IdentityClassifier& clf,
                      const EmbeddingBank& bank, std::string_view query_text,
                      const Embedder& embedder, std::size_t k, const SelectionRule& rule) {
  return segment_2d_detailed(scene, cam, clf, bank, query_text, embedder, k, rule).mask;
}

GroupedScene extract_3d(const GroupedScene& scene, const EmbeddingBank& bank,
                        std::string_view query_text, const Embedder& embedder, std::size_t k,
                        const SelectionRule& rule) {
  check_consistent(scene, bank);
  const QueryResult result = rank_objects(bank, query_text, embedder, k, rule);
  return filter_by_object_ids(scene, ObjectIdSet(result.selected.begin(), result.selected.end()));
}

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw InputError("iou: mask dimensions differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < pred.pixels.size(); ++p) {
    const bool a = pred.pixels[p] != 0, b = gt.pixels[p] != 0;
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::vector<std::size_t>> connected_components(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::uint8_t> seen(mask.pixels.size(), 0);
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.pixels.size(); ++start) {
    if (!mask.pixels[start] || seen[start]) continue;
    std::vector<std::size_t> comp;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      comp.push_back(p);
      const int x = static_cast<int>(p % w), y = static_cast<int>(p / w);
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
          if (mask.pixels[q] && !seen[q]) {
            seen[q] = 1;
            stack.push_back(q);
          }
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  // Components are discovered in raster order of their first pixel, so a
  // stable sort by size keeps that order among equals.
  std::stable_sort(comps.begin(), comps.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return comps;
}

std::optional<std::pair<int, int>> representative_point(const BinaryMask& pred,
                                                        std::span<const float> alpha) {
  const auto comps = connected_components(pred);
  if (comps.empty()) return std::nullopt;
  const auto& largest = comps.front();
  const int w = pred.width;

  double sx = 0.0, sy = 0.0;
  for (std::size_t p : largest) {
    sx += static_cast<double>(p % w);
    sy += static_cast<double>(p / w);
  }
  const double cx = sx / static_cast<double>(largest.size());
  const double cy = sy / static_cast<double>(largest.size());
  const int rx = static_cast<int>(std::lround(cx));
  const int ry = static_cast<int>(std::lround(cy));
  if (pred.at(rx, ry)) return std::pair{rx, ry};

  // Centroid fell outside the (non-convex) mask.
  std::size_t best = largest.front();
  if (!alpha.empty()) {
    if (alpha.size() != pred.pixels.size()) throw InputError("alpha does not match mask");
    for (std::size_t p : largest)
      if (alpha[p] > alpha[best]) best = p;
  } else {
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t p : largest) {
      const double dx = static_cast<double>(p % w) - cx, dy = static_cast<double>(p / w) - cy;
      if (dx * dx + dy * dy < best_d) {
        best_d = dx * dx + dy * dy;
        best = p;
      }
    }
  }
  return std::pair{static_cast<int>(best % w), static_cast<int>(best / w)};
}

bool localization_hit(const BinaryMask& pred, const BinaryMask& gt, std::span<const float> alpha) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw InputError("localization: mask dimensions differ");
  const auto point = representative_point(pred, alpha);
  if (!point) return false;
  return gt.at(point->first, point->second);
}

}  // namespace ovgs
