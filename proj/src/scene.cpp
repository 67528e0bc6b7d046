#include "ovgs/scene.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>

#include "ovgs/classifier.hpp"
#include "ovgs/error.hpp"

namespace ovgs {

std::array<double, 3> Camera::to_camera(const std::array<double, 3>& p) const {
  const auto& r = rotation;
  return {r[0] * p[0] + r[1] * p[1] + r[2] * p[2] + translation[0],
          r[3] * p[0] + r[4] * p[1] + r[5] * p[2] + translation[1],
          r[6] * p[0] + r[7] * p[1] + r[8] * p[2] + translation[2]};
}

void Camera::validate() const {
  auto fail = [&](const std::string& what) {
    throw InputError("camera '" + view_id + "': " + what);
  };
  if (!(fx > 0.0) || !(fy > 0.0)) fail("focal lengths must be positive");
  if (width < 1 || height < 1) fail("resolution must be at least 1x1");
  if (!std::isfinite(cx) || !std::isfinite(cy)) fail("principal point is not finite");
  for (double v : rotation)
    if (!std::isfinite(v)) fail("rotation is not finite");
  for (double v : translation)
    if (!std::isfinite(v)) fail("translation is not finite");
  // R R^T = I
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int c = 0; c < 3; ++c) dot += rotation[i * 3 + c] * rotation[j * 3 + c];
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-5) fail("rotation is not orthonormal");
    }
  }
}

Camera look_at(std::string view_id, const std::array<double, 3>& eye,
               const std::array<double, 3>& target, const std::array<double, 3>& up, int width,
               int height, double focal) {
  auto sub = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return std::array<double, 3>{a[0] - b[0], a[1] - b[1], a[2] - b[2]};
  };
  auto cross = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return std::array<double, 3>{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                                 a[0] * b[1] - a[1] * b[0]};
  };
  auto unit = [](std::array<double, 3> a) {
    const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    if (!(n > 0.0)) throw InputError("look_at: degenerate direction");
    for (double& v : a) v /= n;
    return a;
  };

  const auto forward = unit(sub(target, eye));
  const auto right = unit(cross(forward, up));
  const auto down = cross(forward, right);

  Camera cam;
  cam.view_id = std::move(view_id);
  cam.width = width;
  cam.height = height;
  cam.fx = cam.fy = focal;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  for (int c = 0; c < 3; ++c) {
    cam.rotation[0 + c] = right[c];
    cam.rotation[3 + c] = down[c];
    cam.rotation[6 + c] = forward[c];
  }
  for (int r = 0; r < 3; ++r) {
    cam.translation[r] = -(cam.rotation[r * 3 + 0] * eye[0] + cam.rotation[r * 3 + 1] * eye[1] +
                           cam.rotation[r * 3 + 2] * eye[2]);
  }
  return cam;
}

void GroupedScene::rebuild_object_table() {
  std::map<std::int32_t, ObjectInfo> table;
  for (std::int32_t id = 0; id < num_objects; ++id) {
    auto& info = table[id];
    if (auto it = object_table.find(id); it != object_table.end())
      info.views_visible = it->second.views_visible;
  }
  for (const auto& g : gaussians)
    if (g.object_id != kUnassigned) ++table[g.object_id].gaussian_count;
  object_table = std::move(table);
}

void GroupedScene::validate() const {
  auto fail = [](const std::string& field, std::size_t index, const std::string& what) {
    std::ostringstream os;
    os << field << ' ' << what << " at index " << index;
    throw InputError(os.str());
  };
  auto finite = [&](std::span<const float> values, const char* field, std::size_t index) {
    for (float v : values)
      if (!std::isfinite(v)) fail(field, index, "is not finite");
  };

  if (num_objects < 0) throw InputError("num_objects must be nonnegative");
  for (std::size_t i = 0; i < gaussians.size(); ++i) {
    const auto& g = gaussians[i];
    finite(g.position, "position", i);
    finite(g.rotation, "rotation", i);
    finite(g.scale, "scale", i);
    finite(std::span<const float>(&g.opacity, 1), "opacity", i);
    finite(g.color, "color", i);
    finite(g.identity, "identity", i);

    double norm2 = 0.0;
    for (float q : g.rotation) norm2 += static_cast<double>(q) * q;
    if (std::abs(std::sqrt(norm2) - 1.0) > 1e-6) fail("rotation", i, "is not unit length");
    for (float s : g.scale)
      if (!(s > 0.0f)) fail("scale", i, "is not positive");
    if (g.opacity < 0.0f || g.opacity > 1.0f) fail("opacity", i, "out of range");
    for (float c : g.color)
      if (c < 0.0f || c > 1.0f) fail("color", i, "out of range");
    if (g.object_id != kUnassigned && (g.object_id < 0 || g.object_id >= num_objects))
      fail("object_id", i, "out of range");
  }
  for (const auto& cam : cameras) cam.validate();

  for (std::int32_t id = 0; id < num_objects; ++id) {
    const auto it = object_table.find(id);
    const std::size_t expected = static_cast<std::size_t>(
        std::count_if(gaussians.begin(), gaussians.end(),
                      [id](const SplatGaussian& g) { return g.object_id == id; }));
    if (it == object_table.end() || it->second.gaussian_count != expected)
      throw InputError("object_table count mismatch for object " + std::to_string(id));
  }
}

const Camera* GroupedScene::find_camera(const std::string& view_id) const {
  for (const auto& cam : cameras)
    if (cam.view_id == view_id) return &cam;
  return nullptr;
}

GroupedScene filter_by_object_ids(const GroupedScene& scene, const ObjectIdSet& ids,
                                  bool include_unassigned) {
  std::vector<std::int32_t> bad;
  for (std::int32_t id : ids)
    if (id < 0 || id >= scene.num_objects) bad.push_back(id);
  if (!bad.empty()) {
    std::ostringstream os;
    os << "object ids out of range [0, " << scene.num_objects << "):";
    for (std::int32_t id : bad) os << ' ' << id;
    throw InputError(os.str());
  }

  GroupedScene out;
  out.cameras = scene.cameras;
  out.num_objects = scene.num_objects;
  out.object_table = scene.object_table;
  for (const auto& g : scene.gaussians) {
    const bool keep =
        g.object_id == kUnassigned ? include_unassigned : ids.contains(g.object_id);
    if (keep) out.gaussians.push_back(g);
  }
  out.rebuild_object_table();
  return out;
}

GroupedScene resolve_gaussian_ids(const GroupedScene& scene, const IdentityClassifier& clf) {
  if (clf.num_objects() != scene.num_objects) {
    throw InputError("classifier dimension mismatch: classifier has " +
                     std::to_string(clf.num_objects()) + " objects, scene has " +
                     std::to_string(scene.num_objects));
  }
  GroupedScene out = scene;
  for (auto& g : out.gaussians) g.object_id = clf.classify(g.identity);
  out.rebuild_object_table();
  return out;
}

}  // namespace ovgs
