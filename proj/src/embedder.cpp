#include "ovgs/embedder.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "ovgs/error.hpp"

namespace ovgs {
namespace {

enum Bin : std::size_t {
  kRed,
  kOrange,
  kYellow,
  kGreen,
  kCyan,
  kBlue,
  kPurple,
  kMagenta,
  kWhite,
  kGray,
  kBlack,
  kBrown,
  kHashBase  // 12..15
};

constexpr float kBackgroundValue = 0.05f;

std::size_t color_bin(float r, float g, float b) {
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float sat = (mx - mn) / mx;
  if (sat < 0.25f) return mx >= 0.6f ? kWhite : kGray;

  float hue;
  const float d = mx - mn;
  if (mx == r) {
    hue = 60.0f * std::fmod((g - b) / d, 6.0f);
  } else if (mx == g) {
    hue = 60.0f * ((b - r) / d + 2.0f);
  } else {
    hue = 60.0f * ((r - g) / d + 4.0f);
  }
  if (hue < 0.0f) hue += 360.0f;

  if (hue >= 345.0f || hue < 15.0f) return kRed;
  if (hue < 40.0f) return mx < 0.6f ? kBrown : kOrange;
  if (hue < 70.0f) return kYellow;
  if (hue < 160.0f) return kGreen;
  if (hue < 200.0f) return kCyan;
  if (hue < 255.0f) return kBlue;
  if (hue < 290.0f) return kPurple;
  return kMagenta;
}

struct Keyword {
  const char* word;
  std::size_t bin;
};

constexpr Keyword kKeywords[] = {
    {"red", kRed},         {"crimson", kRed},       {"scarlet", kRed},
    {"orange", kOrange},   {"yellow", kYellow},     {"gold", kYellow},
    {"golden", kYellow},   {"green", kGreen},       {"lime", kGreen},
    {"cyan", kCyan},       {"teal", kCyan},         {"turquoise", kCyan},
    {"blue", kBlue},       {"navy", kBlue},         {"purple", kPurple},
    {"violet", kPurple},   {"magenta", kMagenta},   {"pink", kMagenta},
    {"white", kWhite},     {"gray", kGray},         {"grey", kGray},
    {"silver", kGray},     {"black", kBlack},       {"brown", kBrown},
};

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Embedding toy_embed_image(const RgbImage& image) {
  if (image.pixel_count() == 0) throw InputError("toy embedder: empty image");
  std::array<float, kToyDim> hist{};
  std::size_t foreground = 0;
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const float r = image.data[i * 3], g = image.data[i * 3 + 1], b = image.data[i * 3 + 2];
    if (std::max({r, g, b}) < kBackgroundValue) continue;
    hist[color_bin(r, g, b)] += 1.0f;
    ++foreground;
  }
  if (foreground == 0) hist[kBlack] = 1.0f;
  return normalized(hist);
}

Embedding toy_embed_text(std::string_view text) {
  std::array<float, kToyDim> v{};
  std::string lowered;
  for (char c : text) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  bool any = false;
  std::size_t pos = 0;
  while (pos < lowered.size()) {
    while (pos < lowered.size() && !std::isalnum(static_cast<unsigned char>(lowered[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < lowered.size() && std::isalnum(static_cast<unsigned char>(lowered[pos]))) ++pos;
    const std::string_view word(lowered.data() + start, pos - start);
    for (const auto& k : kKeywords) {
      if (word == k.word) {
        v[k.bin] += 1.0f;
        any = true;
      }
    }
  }
  if (!any) {
    // No color word: a stable pseudo-direction confined to the hash bins.
    const std::uint64_t h = fnv1a(lowered);
    for (std::size_t i = 0; i < 4; ++i)
      v[kHashBase + i] = 0.1f + static_cast<float>((h >> (16 * i)) & 0xffff) / 65535.0f;
  }
  return normalized(v);
}

TableEmbedder::TableEmbedder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open embedding table " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    dim_ = j.at("dim").get<std::size_t>();
    auto load = [&](const char* field, std::map<std::string, Embedding, std::less<>>& dst) {
      if (!j.contains(field)) return;
      for (const auto& [key, value] : j[field].items()) {
        auto v = value.get<std::vector<float>>();
        if (v.size() != dim_)
          throw InputError(std::string("embedding table: ") + field + " '" + key +
                           "' has wrong dimension");
        dst.emplace(key, std::move(v));
      }
    };
    load("images", images_);
    load("texts", texts_);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("embedding table " + path.string() + ": " + e.what());
  }
}

Embedding TableEmbedder::embed_image(const RgbImage&, std::string_view key) const {
  const auto it = images_.find(key);
  if (it == images_.end()) throw InputError("embedding table has no image '" + std::string(key) + "'");
  return normalized(it->second);
}

Embedding TableEmbedder::embed_text(std::string_view text) const {
  const auto it = texts_.find(text);
  if (it == texts_.end()) throw InputError("embedding table has no text '" + std::string(text) + "'");
  return normalized(it->second);
}

}  // namespace ovgs
