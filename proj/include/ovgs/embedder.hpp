#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "ovgs/embedding.hpp"

namespace ovgs {

/// Image/text encoder into a shared embedding space (a CLIP stand-in).
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  // `key` identifies the image ("<object_id>/<view_id>" when building banks);
  // lookup-based embedders use it, pixel-based ones ignore it.
  virtual Embedding embed_image(const RgbImage& image, std::string_view key) const = 0;
  virtual Embedding embed_text(std::string_view text) const = 0;
};

inline constexpr std::size_t kToyDim = 16;

// Deterministic 16-bin color descriptor. Bins 0..11 are color concepts shared
// by images (chromaticity histogram) and text (keyword table); bins 12..15
// hold a hash of texts that name no color.
Embedding toy_embed_image(const RgbImage& image);
Embedding toy_embed_text(std::string_view text);

class ToyEmbedder final : public Embedder {
 public:
  std::size_t dim() const override { return kToyDim; }
  Embedding embed_image(const RgbImage& image, std::string_view) const override {
    return toy_embed_image(image);
  }
  Embedding embed_text(std::string_view text) const override { return toy_embed_text(text); }
};

/// Precomputed embeddings from a JSON file:
///   {"dim": D, "images": {"<key>": [...]}, "texts": {"<text>": [...]}}
/// Unknown keys or texts are errors.
class TableEmbedder final : public Embedder {
 public:
  explicit TableEmbedder(const std::filesystem::path& path);

  std::size_t dim() const override { return dim_; }
  Embedding embed_image(const RgbImage& image, std::string_view key) const override;
  Embedding embed_text(std::string_view text) const override;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Embedding, std::less<>> images_;
  std::map<std::string, Embedding, std::less<>> texts_;
};

}  // namespace ovgs
