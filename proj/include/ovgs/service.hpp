#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovgs/classifier.hpp"
#include "ovgs/embedder.hpp"
#include "ovgs/embedding.hpp"
#include "ovgs/image.hpp"
#include "ovgs/relevancy.hpp"
#include "ovgs/scene.hpp"

namespace ovgs {

struct SessionConfig {
  std::size_t k = kDefaultTopK;
  SelectionRule rule = SelectionRule::top1();
  // Empty = keep the bank's cached canonical embeddings.
  std::vector<std::string> canonical_phrases;
  int tile_size = 16;
};

struct SessionPaths {
  std::filesystem::path scene;
  std::filesystem::path bank;
  std::filesystem::path classifier;
  // Empty = toy embedder; otherwise a TableEmbedder JSON file.
  std::filesystem::path embedder;
};

// Assets of one loaded scene; immutable once constructed.
struct Session {
  GroupedScene scene;
  EmbeddingBank bank;
  IdentityClassifier classifier;
  std::shared_ptr<const Embedder> embedder;
  std::uint64_t revision = 0;

  static std::shared_ptr<const Session> load(const SessionPaths& paths,
                                             const SessionConfig& config);
};

nlohmann::json ok_envelope(nlohmann::json data);
nlohmann::json error_envelope(int status, const std::string& message);

// Shared by `ovgs query --json` and POST /query.
nlohmann::json query_response(const EmbeddingBank& bank, const Embedder& embedder,
                              const std::string& text, std::size_t k, const SelectionRule& rule);

// 50% blend of the rgb render with a fixed highlight color over pixels whose
// id is in `ids`.
RgbImage overlay_composite(const RgbImage& rgb, const std::vector<std::int32_t>& id_map,
                           const ObjectIdSet& ids);
inline constexpr std::array<float, 3> kHighlightColor{1.0f, 0.85f, 0.0f};

// HTTP front end:
//   GET  /health               {"scene_loaded": bool, ...}
//   POST /load                 {"scene","bank","classifier","embedder"?} (server-side paths)
//   GET  /views                camera list
//   POST /query                {"text", "k"?, "rule"?} -> QueryResult
//   GET  /render/{view_id}?ids=1,2   PNG overlay
//   GET  /extract?ids=1,2      GSG download (pack_gsg tarball)
class Service {
 public:
  explicit Service(SessionConfig config = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void load(const SessionPaths& paths);
  void set_session(std::shared_ptr<const Session> session);
  std::shared_ptr<const Session> session() const;

  // Binds to an ephemeral port when `port` is 0; returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

  std::size_t render_cache_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// A GSG directory as one ustar archive holding manifest.json and arrays.bin
// (mtime 0, mode 0644, so equal scenes give equal bytes).
std::string pack_gsg(const GroupedScene& scene);
GroupedScene unpack_gsg(const std::string& blob);

// "1,2,3" -> {1, 2, 3}; empty string -> {}. Throws InputError.
ObjectIdSet parse_id_list(const std::string& text);

}  // namespace ovgs
