#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ovgs/image.hpp"

namespace ovgs {

class Embedder;

using Embedding = std::vector<float>;

inline const std::vector<std::string>& default_canonical_phrases() {
  static const std::vector<std::string> phrases{"object", "stuff", "texture"};
  return phrases;
}

struct BagEntry {
  std::string view_id;
  Embedding embedding;

  bool operator==(const BagEntry&) const = default;
};

/// All per-view embeddings of one object, kept unaveraged.
struct EmbeddingBag {
  std::int32_t object_id = 0;
  std::vector<BagEntry> entries;

  bool operator==(const EmbeddingBag&) const = default;
};

struct CanonicalPhrase {
  std::string phrase;
  Embedding embedding;

  bool operator==(const CanonicalPhrase&) const = default;
};

struct EmbeddingBank {
  std::size_t dim = 0;
  std::map<std::int32_t, EmbeddingBag> bags;
  std::vector<CanonicalPhrase> canonical;
  std::size_t total_views = 0;

  std::vector<Embedding> canonical_vectors() const;
  std::size_t entry_count() const;

  bool operator==(const EmbeddingBank&) const = default;
};

struct VisibilityStats {
  std::int32_t object_id = 0;
  std::size_t views_visible = 0;
  std::size_t total_views = 0;

  bool operator==(const VisibilityStats&) const = default;
};

// Unit-norm copy (normalized in double). Throws InputError on a zero or
// non-finite vector.
Embedding normalized(std::span<const float> v);

// EMB container: a directory with manifest.json and vectors.bin
// (little-endian float32, D per record, canonical vectors first).
EmbeddingBank ingest_bank(const std::filesystem::path& path);
void write_bank(const EmbeddingBank& bank, const std::filesystem::path& path);

/// One object's masked image in one view (pixels outside the mask black).
struct MaskedView {
  std::int32_t object_id = 0;
  std::string view_id;
  RgbImage image;
};

// One bag entry per (object_id, view_id); canonical phrases embedded as text.
EmbeddingBank build_bank(std::span<const MaskedView> views, const Embedder& embedder,
                         const std::vector<std::string>& canonical_phrases =
                             default_canonical_phrases());

// Black-out masking of `image` to the pixels where `labels` equals `id`.
RgbImage mask_image(const RgbImage& image, const LabelImage& labels, std::int32_t id);

// Every (object, view) pair with a nonempty mask, ids ascending per view.
std::vector<MaskedView> masked_views(std::span<const RgbImage> images,
                                     std::span<const LabelImage> masks,
                                     std::span<const std::string> view_ids);

// Drops bags seen in fewer than `threshold` of the views (ratio >= threshold
// is kept). Every bag needs a stats row.
EmbeddingBank visibility_filter(const EmbeddingBank& bank, std::span<const VisibilityStats> stats,
                                double threshold);

}  // namespace ovgs
