#include "ovgs/service.hpp"

#include <httplib.h>

#include <cstdio>
#include <cstring>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>

#include "ovgs/error.hpp"
#include "ovgs/renderer.hpp"
#include "ovgs/scene_io.hpp"

namespace ovgs {

using nlohmann::json;

std::shared_ptr<const Session> Session::load(const SessionPaths& paths,
                                             const SessionConfig& config) {
  auto s = std::make_shared<Session>();
  s->scene = load_scene(paths.scene);
  s->bank = ingest_bank(paths.bank);
  s->classifier = load_classifier(paths.classifier);
  if (paths.embedder.empty()) {
    s->embedder = std::make_shared<ToyEmbedder>();
  } else {
    s->embedder = std::make_shared<TableEmbedder>(paths.embedder);
  }
  if (s->classifier.num_objects() != s->scene.num_objects)
    throw InputError("classifier and scene disagree on the object count");
  if (s->embedder->dim() != s->bank.dim)
    throw InputError("embedder dim " + std::to_string(s->embedder->dim()) + " != bank dim " +
                     std::to_string(s->bank.dim));

  std::vector<std::string> phrases;
  for (const auto& c : s->bank.canonical) phrases.push_back(c.phrase);
  if (!config.canonical_phrases.empty() && phrases != config.canonical_phrases) {
    s->bank.canonical.clear();
    for (const auto& p : config.canonical_phrases)
      s->bank.canonical.push_back({p, normalized(s->embedder->embed_text(p))});
  }
  return s;
}

json ok_envelope(json data) { return {{"ok", true}, {"data", std::move(data)}}; }

json error_envelope(int status, const std::string& message) {
  return {{"ok", false}, {"error", {{"status", status}, {"message", message}}}};
}

json query_response(const EmbeddingBank& bank, const Embedder& embedder, const std::string& text,
                    std::size_t k, const SelectionRule& rule) {
  return ok_envelope(to_json(rank_objects(bank, text, embedder, k, rule)));
}

RgbImage overlay_composite(const RgbImage& rgb, const std::vector<std::int32_t>& id_map,
                           const ObjectIdSet& ids) {
  RgbImage out = rgb;
  for (std::size_t p = 0; p < id_map.size(); ++p) {
    if (id_map[p] == kUnassigned || !ids.contains(id_map[p])) continue;
    for (int c = 0; c < 3; ++c) out.data[p * 3 + c] = 0.5f * out.data[p * 3 + c] + 0.5f * kHighlightColor[c];
  }
  return out;
}

ObjectIdSet parse_id_list(const std::string& text) {
  ObjectIdSet ids;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? text.size() : comma + 1;
    if (tok.empty()) continue;
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(tok, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != tok.size() || v < 0 || v > INT32_MAX) throw InputError("invalid object id '" + tok + "'");
    ids.insert(static_cast<std::int32_t>(v));
  }
  return ids;
}

namespace {

void tar_entry(std::string& out, const std::string& name, const std::string& data) {
  char h[512] = {};
  std::snprintf(h, 100, "%s", name.c_str());
  std::snprintf(h + 100, 8, "%07o", 0644);
  std::snprintf(h + 108, 8, "%07o", 0);
  std::snprintf(h + 116, 8, "%07o", 0);
  std::snprintf(h + 124, 12, "%011llo", static_cast<unsigned long long>(data.size()));
  std::snprintf(h + 136, 12, "%011o", 0);
  h[156] = '0';
  std::memcpy(h + 257, "ustar", 6);
  std::memcpy(h + 263, "00", 2);
  std::memset(h + 148, ' ', 8);
  unsigned sum = 0;
  for (unsigned char c : h) sum += c;
  std::snprintf(h + 148, 8, "%06o", sum);
  h[155] = ' ';
  out.append(h, 512);
  out.append(data);
  out.append((512 - data.size() % 512) % 512, '\0');
}

}  // namespace

std::string pack_gsg(const GroupedScene& scene) {
  const GsgBlobs blobs = encode_scene(scene);
  std::string out;
  tar_entry(out, "manifest.json", blobs.manifest);
  tar_entry(out, "arrays.bin", blobs.arrays);
  out.append(1024, '\0');
  return out;
}

GroupedScene unpack_gsg(const std::string& blob) {
  std::map<std::string, std::string> files;
  std::size_t pos = 0;
  while (pos + 512 <= blob.size()) {
    const char* h = blob.data() + pos;
    if (h[0] == '\0') break;
    const std::string name(h, strnlen(h, 100));
    const std::size_t size = std::stoull(std::string(h + 124, strnlen(h + 124, 12)), nullptr, 8);
    pos += 512;
    if (pos + size > blob.size()) throw InputError("truncated GSG archive");
    files[name] = blob.substr(pos, size);
    pos += (size + 511) / 512 * 512;
  }
  if (!files.contains("manifest.json") || !files.contains("arrays.bin"))
    throw InputError("GSG archive lacks manifest.json or arrays.bin");
  return decode_scene(files["manifest.json"], files["arrays.bin"]);
}

struct Service::Impl {
  SessionConfig config;
  mutable std::shared_mutex session_mu;
  std::shared_ptr<const Session> session;
  std::uint64_t revisions = 0;

  using CacheKey = std::tuple<std::uint64_t, std::string, std::string>;
  mutable std::mutex cache_mu;
  std::map<CacheKey, std::shared_ptr<const std::string>> render_cache;

  httplib::Server server;

  std::shared_ptr<const Session> current() const {
    std::shared_lock lock(session_mu);
    return session;
  }

  void install(std::shared_ptr<const Session> s) {
    {
      std::unique_lock lock(session_mu);
      auto copy = std::make_shared<Session>(*s);
      copy->revision = ++revisions;
      session = std::move(copy);
    }
    std::lock_guard lock(cache_mu);
    render_cache.clear();
  }

  std::shared_ptr<const std::string> render_png(const Session& s, const Camera& cam,
                                                const ObjectIdSet& ids) {
    std::string id_key;
    for (std::int32_t id : ids) id_key += std::to_string(id) + ",";
    const CacheKey key{s.revision, cam.view_id, id_key};
    {
      std::lock_guard lock(cache_mu);
      if (auto it = render_cache.find(key); it != render_cache.end()) return it->second;
    }
    RenderOptions opts;
    opts.tile_size = config.tile_size;
    const RenderedView v = render(s.scene, cam, s.classifier, opts);
    auto png = std::make_shared<const std::string>(encode_png(overlay_composite(v.rgb_image(), v.id_map, ids)));
    std::lock_guard lock(cache_mu);
    return render_cache.emplace(key, png).first->second;
  }

  void routes();
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, error_envelope(status, message));
}

// Runs a handler, mapping InputError to 400 and anything else to 500.
template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const InputError& e) {
    send_error(res, 400, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

void Service::Impl::routes() {
  server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto s = current();
    json data = {{"scene_loaded", s != nullptr}};
    if (s) {
      data["num_gaussians"] = s->scene.gaussians.size();
      data["num_objects"] = s->scene.num_objects;
      data["revision"] = s->revision;
    }
    send_json(res, 200, ok_envelope(data));
  });

  server.Post("/load", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        throw InputError(std::string("invalid JSON body: ") + e.what());
      }
      SessionPaths paths;
      try {
        paths.scene = body.at("scene").get<std::string>();
        paths.bank = body.at("bank").get<std::string>();
        paths.classifier = body.at("classifier").get<std::string>();
        paths.embedder = body.value("embedder", std::string());
      } catch (const json::exception& e) {
        throw InputError(std::string("load needs scene, bank and classifier paths: ") + e.what());
      }
      install(Session::load(paths, config));
      const auto s = current();
      send_json(res, 200, ok_envelope({{"scene_loaded", true}, {"revision", s->revision}}));
    });
  });

  server.Get("/views", [this](const httplib::Request&, httplib::Response& res) {
    const auto s = current();
    if (!s) return send_error(res, 409, "no scene loaded");
    json views = json::array();
    for (const auto& c : s->scene.cameras)
      views.push_back({{"view_id", c.view_id}, {"width", c.width}, {"height", c.height}});
    send_json(res, 200, ok_envelope(views));
  });

  server.Post("/query", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = current();
    if (!s) return send_error(res, 409, "no scene loaded");
    guarded(res, [&] {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        throw InputError(std::string("invalid JSON body: ") + e.what());
      }
      if (!body.is_object() || !body.contains("text") || !body["text"].is_string() ||
          body["text"].get<std::string>().empty())
        throw InputError("query needs a nonempty string 'text'");
      std::size_t k = config.k;
      if (body.contains("k")) {
        if (!body["k"].is_number_integer() || body["k"].get<long long>() < 1)
          throw InputError("'k' must be a positive integer");
        k = body["k"].get<std::size_t>();
      }
      SelectionRule rule = config.rule;
      if (body.contains("rule")) {
        if (!body["rule"].is_string()) throw InputError("'rule' must be a string");
        rule = SelectionRule::parse(body["rule"].get<std::string>());
      }
      send_json(res, 200, query_response(s->bank, *s->embedder, body["text"].get<std::string>(), k, rule));
    });
  });

  server.Get(R"(/render/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = current();
    if (!s) return send_error(res, 409, "no scene loaded");
    const Camera* cam = s->scene.find_camera(req.matches[1]);
    if (!cam) return send_error(res, 404, "unknown view '" + std::string(req.matches[1]) + "'");
    guarded(res, [&] {
      const ObjectIdSet ids = parse_id_list(req.get_param_value("ids"));
      const auto png = render_png(*s, *cam, ids);
      res.status = 200;
      res.set_content(*png, "image/png");
    });
  });

  server.Get("/extract", [this](const httplib::Request& req, httplib::Response& res) {
    const auto s = current();
    if (!s) return send_error(res, 409, "no scene loaded");
    guarded(res, [&] {
      if (!req.has_param("ids")) throw InputError("extract needs an 'ids' parameter");
      const ObjectIdSet ids = parse_id_list(req.get_param_value("ids"));
      res.status = 200;
      res.set_header("Content-Disposition", "attachment; filename=\"extract.gsg.tar\"");
      res.set_content(pack_gsg(filter_by_object_ids(s->scene, ids)), "application/x-tar");
    });
  });

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "not found");
  });
}

Service::Service(SessionConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->routes();
}

Service::~Service() { stop(); }

void Service::load(const SessionPaths& paths) { impl_->install(Session::load(paths, impl_->config)); }

void Service::set_session(std::shared_ptr<const Session> session) { impl_->install(std::move(session)); }

std::shared_ptr<const Session> Service::session() const { return impl_->current(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

std::size_t Service::render_cache_size() const {
  std::lock_guard lock(impl_->cache_mu);
  return impl_->render_cache.size();
}

}  // namespace ovgs
