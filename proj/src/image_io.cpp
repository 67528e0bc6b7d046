#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "binary_io.hpp"
#include "ovgs/error.hpp"
#include "ovgs/image.hpp"
#include "ovgs/scene.hpp"

namespace ovgs {
namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

struct PnmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(const std::string& bytes, const std::string& path) {
  PnmHeader h;
  std::size_t pos = 0;
  auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&] {
    skip_space_and_comments();
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw InputError("truncated PNM header: " + path);
    return bytes.substr(start, pos - start);
  };
  auto number = [&] {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(c); }))
      throw InputError("bad PNM header field '" + t + "': " + path);
    return std::stoi(t);
  };
  h.magic = token();
  h.width = number();
  h.height = number();
  h.maxval = number();
  if (pos >= bytes.size()) throw InputError("truncated PNM: " + path);
  h.data_offset = pos + 1;  // single whitespace byte after maxval
  if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 65535)
    throw InputError("bad PNM dimensions: " + path);
  return h;
}

}  // namespace

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::string out = os.str();
  out.reserve(out.size() + image.data.size());
  for (float v : image.data) out.push_back(static_cast<char>(to_byte(v)));
  detail::write_file(path.string(), out);
}

RgbImage read_ppm(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path.string());
  const PnmHeader h = parse_pnm_header(bytes, path.string());
  if (h.magic != "P6") throw InputError("not a binary PPM (P6): " + path.string());
  const std::size_t bpc = h.maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height * 3;
  if (bytes.size() < h.data_offset + n * bpc) throw InputError("truncated PPM: " + path.string());
  RgbImage img(h.width, h.height);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned v = bpc == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : p[i];
    img.data[i] = static_cast<float>(v) / static_cast<float>(h.maxval);
  }
  return img;
}

void write_label_pgm(const LabelImage& image, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "P5\n" << image.width << ' ' << image.height << "\n65535\n";
  std::string out = os.str();
  for (std::int32_t label : image.labels) {
    if (label != kUnassigned && (label < 0 || label >= kPgmUnassigned))
      throw InputError("label " + std::to_string(label) + " does not fit a 16-bit PGM");
    const std::uint16_t v = label == kUnassigned ? kPgmUnassigned : static_cast<std::uint16_t>(label);
    out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  detail::write_file(path.string(), out);
}

LabelImage read_label_pgm(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path.string());
  const PnmHeader h = parse_pnm_header(bytes, path.string());
  if (h.magic != "P5") throw InputError("not a binary PGM (P5): " + path.string());
  const std::size_t bpc = h.maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() < h.data_offset + n * bpc) throw InputError("truncated PGM: " + path.string());
  LabelImage img{h.width, h.height, std::vector<std::int32_t>(n)};
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t i = 0; i < n; ++i) {
    if (bpc == 2) {
      const unsigned v = (p[2 * i] << 8) | p[2 * i + 1];
      img.labels[i] = v == kPgmUnassigned ? kUnassigned : static_cast<std::int32_t>(v);
    } else {
      img.labels[i] = p[i];
    }
  }
  return img;
}

void write_planar_f32(std::span<const float> interleaved, int width, int height, int channels,
                      const std::filesystem::path& path) {
  const std::size_t pixels = static_cast<std::size_t>(width) * height;
  if (interleaved.size() != pixels * channels)
    throw InputError("planar write: buffer size does not match dimensions");
  std::string out;
  out.reserve(interleaved.size() * 4);
  for (int c = 0; c < channels; ++c)
    for (std::size_t i = 0; i < pixels; ++i) detail::append_le(out, interleaved[i * channels + c]);
  detail::write_file(path.string(), out);
}

std::string encode_png(const RgbImage& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;

  std::vector<std::uint8_t> pixels(image.data.size());
  std::transform(image.data.begin(), image.data.end(), pixels.begin(), to_byte);

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + png.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, pixels.data(), 0, nullptr))
    throw std::runtime_error(std::string("png encode failed: ") + png.message);
  out.resize(size);
  return out;
}

}  // namespace ovgs
