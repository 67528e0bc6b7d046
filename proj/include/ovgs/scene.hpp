#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ovgs {

class IdentityClassifier;

inline constexpr std::size_t kIdentityDim = 16;
inline constexpr std::int32_t kUnassigned = -1;

using IdentityEncoding = std::array<float, kIdentityDim>;
using ObjectIdSet = std::set<std::int32_t>;

/// One 3D Gaussian of a grouped scene. Color is degree-0 only.
struct SplatGaussian {
  std::array<float, 3> position{};
  std::array<float, 4> rotation{1.0f, 0.0f, 0.0f, 0.0f};  // w, x, y, z
  std::array<float, 3> scale{1.0f, 1.0f, 1.0f};            // per-axis std dev
  float opacity = 1.0f;
  std::array<float, 3> color{};
  IdentityEncoding identity{};
  std::int32_t object_id = kUnassigned;

  bool operator==(const SplatGaussian&) const = default;
};

/// Pinhole camera, OpenCV axes (x right, y down, z forward). Pixel centers
/// sit at integer coordinates.
struct Camera {
  std::string view_id;
  int width = 1;
  int height = 1;
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // world->camera, row-major
  std::array<double, 3> translation{};

  std::array<double, 3> to_camera(const std::array<double, 3>& world) const;
  // Throws InputError if intrinsics or the rotation are invalid.
  void validate() const;

  bool operator==(const Camera&) const = default;
};

// Camera at `eye` looking at `target`; `up` fixes the roll (image y points
// away from it).
Camera look_at(std::string view_id, const std::array<double, 3>& eye,
               const std::array<double, 3>& target, const std::array<double, 3>& up,
               int width, int height, double focal);

struct ObjectInfo {
  std::size_t gaussian_count = 0;
  std::optional<std::size_t> views_visible;

  bool operator==(const ObjectInfo&) const = default;
};

struct GroupedScene {
  std::vector<SplatGaussian> gaussians;
  std::vector<Camera> cameras;
  std::int32_t num_objects = 0;
  std::map<std::int32_t, ObjectInfo> object_table;

  // Recomputes per-object Gaussian counts (keeps visibility slots).
  void rebuild_object_table();
  // Throws InputError naming the offending field and index.
  void validate() const;
  const Camera* find_camera(const std::string& view_id) const;

  bool operator==(const GroupedScene&) const = default;
};

// Keeps the Gaussians whose object_id is in `ids`, in original order.
// UNASSIGNED Gaussians are dropped unless `include_unassigned` is set.
GroupedScene filter_by_object_ids(const GroupedScene& scene, const ObjectIdSet& ids,
                                  bool include_unassigned = false);

// Sets each object_id to the classifier's argmax over the Gaussian's identity
// encoding; the background class maps to UNASSIGNED.
GroupedScene resolve_gaussian_ids(const GroupedScene& scene, const IdentityClassifier& clf);

}  // namespace ovgs
