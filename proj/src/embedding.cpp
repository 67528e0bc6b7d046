#include "ovgs/embedding.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "ovgs/embedder.hpp"
#include "ovgs/error.hpp"
#include "ovgs/scene.hpp"

namespace ovgs {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Embedding> EmbeddingBank::canonical_vectors() const {
  std::vector<Embedding> out;
  out.reserve(canonical.size());
  for (const auto& c : canonical) out.push_back(c.embedding);
  return out;
}

std::size_t EmbeddingBank::entry_count() const {
  std::size_t n = 0;
  for (const auto& [id, bag] : bags) n += bag.entries.size();
  return n;
}

Embedding normalized(std::span<const float> v) {
  double n2 = 0.0;
  for (float x : v) n2 += static_cast<double>(x) * x;
  const double n = std::sqrt(n2);
  if (!std::isfinite(n)) throw InputError("embedding has non-finite components");
  if (!(n > 0.0)) throw InputError("zero-norm embedding");
  Embedding out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

EmbeddingBank ingest_bank(const fs::path& path) {
  if (!fs::is_directory(path)) throw InputError("EMB container not found: " + path.string());
  json manifest;
  try {
    manifest = json::parse(detail::read_file((path / "manifest.json").string()));
  } catch (const json::exception& e) {
    throw InputError("malformed EMB manifest: " + std::string(e.what()));
  }
  const std::string bin = detail::read_file((path / "vectors.bin").string());

  EmbeddingBank bank;
  try {
    if (manifest.at("format").get<std::string>() != "emb")
      throw InputError("malformed EMB manifest: format is not emb");
    bank.dim = manifest.at("dim").get<std::size_t>();
    if (bank.dim == 0) throw InputError("EMB dim must be positive");
    if (bin.size() % (4 * bank.dim) != 0)
      throw InputError("vectors.bin size is not a multiple of 4 * dim");
    const std::size_t stored = bin.size() / (4 * bank.dim);

    auto vector_at = [&](std::size_t offset, const std::string& who) {
      if (offset >= stored)
        throw InputError(who + ": offset " + std::to_string(offset) + " beyond vectors.bin");
      std::vector<float> raw(bank.dim);
      for (std::size_t d = 0; d < bank.dim; ++d)
        raw[d] = detail::read_le<float>(bin, (offset * bank.dim + d) * 4);
      try {
        return normalized(raw);
      } catch (const InputError& e) {
        throw InputError(who + ": " + e.what());
      }
    };

    const auto& phrases = manifest.at("canonical");
    if (phrases.empty()) throw InputError("EMB canonical phrase list is empty");
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      const auto phrase = phrases[i].get<std::string>();
      bank.canonical.push_back({phrase, vector_at(i, "canonical '" + phrase + "'")});
    }

    std::set<std::string> views;
    const auto& records = manifest.at("records");
    for (std::size_t r = 0; r < records.size(); ++r) {
      const auto& rec = records[r];
      const auto id = rec.at("object_id").get<std::int32_t>();
      const auto view = rec.at("view_id").get<std::string>();
      std::ostringstream who;
      who << "record " << r << " (object " << id << ", view " << view << ")";
      if (rec.contains("dim") && rec["dim"].get<std::size_t>() != bank.dim) {
        throw InputError(who.str() + ": dimension " + std::to_string(rec["dim"].get<std::size_t>()) +
                         " does not match bank dim " + std::to_string(bank.dim));
      }
      if (id < 0) throw InputError(who.str() + ": negative object id");
      auto& bag = bank.bags[id];
      bag.object_id = id;
      for (const auto& e : bag.entries)
        if (e.view_id == view) throw InputError(who.str() + ": duplicate view in bag");
      bag.entries.push_back({view, vector_at(rec.at("offset").get<std::size_t>(), who.str())});
      views.insert(view);
    }
    bank.total_views = manifest.contains("total_views")
                           ? manifest["total_views"].get<std::size_t>()
                           : views.size();
  } catch (const json::exception& e) {
    throw InputError("malformed EMB manifest: " + std::string(e.what()));
  }
  return bank;
}

void write_bank(const EmbeddingBank& bank, const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec || !fs::is_directory(path))
    throw InputError("cannot create EMB directory " + path.string());

  std::string bin;
  auto put = [&](const Embedding& e) {
    if (e.size() != bank.dim) throw InputError("write_bank: embedding dim mismatch");
    for (float v : e) detail::append_le(bin, v);
  };
  json phrases = json::array();
  for (const auto& c : bank.canonical) {
    phrases.push_back(c.phrase);
    put(c.embedding);
  }
  json records = json::array();
  std::size_t offset = bank.canonical.size();
  for (const auto& [id, bag] : bank.bags) {
    for (const auto& e : bag.entries) {
      records.push_back({{"object_id", id}, {"view_id", e.view_id}, {"offset", offset++}});
      put(e.embedding);
    }
  }
  const json manifest = {{"format", "emb"},          {"version", 1},
                         {"dim", bank.dim},          {"total_views", bank.total_views},
                         {"canonical", phrases},     {"records", records}};
  detail::write_file((path / "manifest.json").string(), manifest.dump(2) + "\n");
  detail::write_file((path / "vectors.bin").string(), bin);
}

EmbeddingBank build_bank(std::span<const MaskedView> views, const Embedder& embedder,
                         const std::vector<std::string>& canonical_phrases) {
  if (canonical_phrases.empty()) throw InputError("canonical phrase list is empty");
  EmbeddingBank bank;
  bank.dim = embedder.dim();
  for (const auto& phrase : canonical_phrases)
    bank.canonical.push_back({phrase, normalized(embedder.embed_text(phrase))});

  std::set<std::string> distinct_views;
  for (const auto& v : views) {
    const std::string key = std::to_string(v.object_id) + "/" + v.view_id;
    auto& bag = bank.bags[v.object_id];
    bag.object_id = v.object_id;
    for (const auto& e : bag.entries)
      if (e.view_id == v.view_id) throw InputError("duplicate (object, view) pair " + key);
    Embedding emb;
    try {
      emb = normalized(embedder.embed_image(v.image, key));
    } catch (const std::exception& e) {
      throw InputError("embedding failed for " + key + ": " + e.what());
    }
    if (emb.size() != bank.dim) throw InputError("embedder returned wrong dim for " + key);
    bag.entries.push_back({v.view_id, std::move(emb)});
    distinct_views.insert(v.view_id);
  }
  bank.total_views = distinct_views.size();
  return bank;
}

RgbImage mask_image(const RgbImage& image, const LabelImage& labels, std::int32_t id) {
  if (image.width != labels.width || image.height != labels.height)
    throw InputError("mask and image dimensions differ");
  RgbImage out(image.width, image.height);
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    if (labels.labels[i] != id) continue;
    for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = image.data[i * 3 + c];
  }
  return out;
}

std::vector<MaskedView> masked_views(std::span<const RgbImage> images,
                                     std::span<const LabelImage> masks,
                                     std::span<const std::string> view_ids) {
  if (images.size() != masks.size() || images.size() != view_ids.size())
    throw InputError("masked_views: images, masks and view ids must align");
  std::vector<MaskedView> out;
  for (std::size_t v = 0; v < images.size(); ++v) {
    std::set<std::int32_t> ids;
    for (std::int32_t l : masks[v].labels)
      if (l != kUnassigned) ids.insert(l);
    for (std::int32_t id : ids) out.push_back({id, view_ids[v], mask_image(images[v], masks[v], id)});
  }
  return out;
}

EmbeddingBank visibility_filter(const EmbeddingBank& bank, std::span<const VisibilityStats> stats,
                                double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    throw InputError("visibility threshold must be in [0, 1]");
  std::map<std::int32_t, const VisibilityStats*> by_id;
  for (const auto& s : stats) by_id[s.object_id] = &s;

  EmbeddingBank out = bank;
  out.bags.clear();
  for (const auto& [id, bag] : bank.bags) {
    const auto it = by_id.find(id);
    if (it == by_id.end())
      throw InputError("no visibility stats for object " + std::to_string(id));
    const auto& s = *it->second;
    const double ratio =
        s.total_views == 0 ? 0.0 : static_cast<double>(s.views_visible) / s.total_views;
    if (ratio >= threshold) out.bags.emplace(id, bag);
  }
  return out;
}

}  // namespace ovgs
