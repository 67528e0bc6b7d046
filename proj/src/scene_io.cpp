#include "ovgs/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "binary_io.hpp"
#include "ovgs/error.hpp"

namespace ovgs {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct ArrayDesc {
  const char* name;
  const char* dtype;
  std::size_t components;
};

constexpr ArrayDesc kArrays[] = {
    {"positions", "float32", 3}, {"rotations", "float32", 4}, {"scales", "float32", 3},
    {"opacities", "float32", 1}, {"colors", "float32", 3},    {"identity", "float32", 16},
    {"object_ids", "int32", 1},
};

json camera_to_json(const Camera& c) {
  return {{"view_id", c.view_id}, {"width", c.width},       {"height", c.height},
          {"fx", c.fx},           {"fy", c.fy},             {"cx", c.cx},
          {"cy", c.cy},           {"rotation", c.rotation}, {"translation", c.translation}};
}

Camera camera_from_json(const json& j) {
  Camera c;
  c.view_id = j.at("view_id").get<std::string>();
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.fx = j.at("fx").get<double>();
  c.fy = j.at("fy").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.rotation = j.at("rotation").get<std::array<double, 9>>();
  c.translation = j.at("translation").get<std::array<double, 3>>();
  return c;
}

template <std::size_t N>
void read_floats(std::string_view bin, std::size_t& offset, std::array<float, N>& dst) {
  for (std::size_t i = 0; i < N; ++i, offset += 4) dst[i] = detail::read_le<float>(bin, offset);
}

void renormalize(std::array<float, 4>& q) {
  double n2 = 0.0;
  for (float v : q) n2 += static_cast<double>(v) * v;
  const double n = std::sqrt(n2);
  if (!(n > 0.0) || !std::isfinite(n)) return;  // validate() reports it
  if (std::abs(n - 1.0) <= 1e-6) return;
  for (float& v : q) v = static_cast<float>(v / n);
}

}  // namespace

GroupedScene load_scene(const fs::path& path) {
  if (path.extension() == ".zip")
    throw InputError("zip GSG containers are not supported; extract to a directory: " +
                     path.string());
  if (!fs::is_directory(path)) throw InputError("GSG container not found: " + path.string());
  return decode_scene(detail::read_file((path / "manifest.json").string()),
                      detail::read_file((path / "arrays.bin").string()));
}

GroupedScene decode_scene(std::string_view manifest_text, std::string_view bin) {
  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw InputError("malformed manifest: " + std::string(e.what()));
  }

  GroupedScene scene;
  std::size_t n = 0;
  json declared_objects;
  try {
    if (manifest.at("format").get<std::string>() != "gsg")
      throw InputError("malformed manifest: format is not gsg");
    n = manifest.at("num_gaussians").get<std::size_t>();
    scene.num_objects = manifest.at("num_objects").get<std::int32_t>();
    for (const auto& c : manifest.at("cameras")) scene.cameras.push_back(camera_from_json(c));
    const auto& arrays = manifest.at("arrays");
    if (arrays.size() != std::size(kArrays))
      throw InputError("malformed manifest: expected 7 array descriptors");
    for (std::size_t i = 0; i < std::size(kArrays); ++i) {
      const auto& a = arrays[i];
      if (a.at("name").get<std::string>() != kArrays[i].name ||
          a.at("dtype").get<std::string>() != kArrays[i].dtype ||
          a.at("components").get<std::size_t>() != kArrays[i].components) {
        throw InputError(std::string("malformed manifest: array descriptor ") +
                         std::to_string(i) + " must be " + kArrays[i].name);
      }
    }
    declared_objects = manifest.value("objects", json::array());
  } catch (const json::exception& e) {
    throw InputError("malformed manifest: " + std::string(e.what()));
  }

  if (bin.size() != gsg_arrays_bytes(n)) {
    throw InputError("array length mismatch: arrays.bin has " + std::to_string(bin.size()) +
                     " bytes, manifest implies " + std::to_string(gsg_arrays_bytes(n)));
  }

  scene.gaussians.resize(n);
  std::size_t off = 0;
  for (auto& g : scene.gaussians) read_floats(bin, off, g.position);
  for (auto& g : scene.gaussians) read_floats(bin, off, g.rotation);
  for (auto& g : scene.gaussians) read_floats(bin, off, g.scale);
  for (auto& g : scene.gaussians) {
    g.opacity = detail::read_le<float>(bin, off);
    off += 4;
  }
  for (auto& g : scene.gaussians) read_floats(bin, off, g.color);
  for (auto& g : scene.gaussians) read_floats(bin, off, g.identity);
  for (std::size_t i = 0; i < n; ++i, off += 4) {
    const auto id = detail::read_le<std::int32_t>(bin, off);
    if (id < kUnassigned) throw InputError("object_id out of range at index " + std::to_string(i));
    scene.gaussians[i].object_id = id;
  }

  for (auto& g : scene.gaussians) renormalize(g.rotation);
  scene.rebuild_object_table();
  for (const auto& o : declared_objects) {
    const auto id = o.at("id").get<std::int32_t>();
    auto it = scene.object_table.find(id);
    if (it == scene.object_table.end())
      throw InputError("malformed manifest: object " + std::to_string(id) + " >= num_objects");
    if (o.at("gaussian_count").get<std::size_t>() != it->second.gaussian_count)
      throw InputError("object_table count mismatch for object " + std::to_string(id));
    if (o.contains("views_visible") && !o["views_visible"].is_null())
      it->second.views_visible = o["views_visible"].get<std::size_t>();
  }
  scene.validate();
  return scene;
}

GsgBlobs encode_scene(const GroupedScene& scene) {
  json cams = json::array();
  for (const auto& c : scene.cameras) cams.push_back(camera_to_json(c));
  json arrays = json::array();
  for (const auto& a : kArrays)
    arrays.push_back({{"name", a.name}, {"dtype", a.dtype}, {"components", a.components}});
  json objects = json::array();
  for (const auto& [id, info] : scene.object_table) {
    json o = {{"id", id}, {"gaussian_count", info.gaussian_count}};
    o["views_visible"] = info.views_visible ? json(*info.views_visible) : json(nullptr);
    objects.push_back(std::move(o));
  }
  const json manifest = {{"format", "gsg"},
                         {"version", 1},
                         {"num_gaussians", scene.gaussians.size()},
                         {"num_objects", scene.num_objects},
                         {"cameras", cams},
                         {"objects", objects},
                         {"arrays", arrays}};

  std::string bin;
  bin.reserve(gsg_arrays_bytes(scene.gaussians.size()));
  for (const auto& g : scene.gaussians)
    for (float v : g.position) detail::append_le(bin, v);
  for (const auto& g : scene.gaussians)
    for (float v : g.rotation) detail::append_le(bin, v);
  for (const auto& g : scene.gaussians)
    for (float v : g.scale) detail::append_le(bin, v);
  for (const auto& g : scene.gaussians) detail::append_le(bin, g.opacity);
  for (const auto& g : scene.gaussians)
    for (float v : g.color) detail::append_le(bin, v);
  for (const auto& g : scene.gaussians)
    for (float v : g.identity) detail::append_le(bin, v);
  for (const auto& g : scene.gaussians) detail::append_le(bin, g.object_id);

  return {manifest.dump(2) + "\n", std::move(bin)};
}

void save_scene(const GroupedScene& scene, const fs::path& path) {
  const GsgBlobs blobs = encode_scene(scene);
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path))
    throw InputError("cannot create GSG directory " + path.string());
  detail::write_file((path / "manifest.json").string(), blobs.manifest);
  detail::write_file((path / "arrays.bin").string(), blobs.arrays);
}

}  // namespace ovgs
