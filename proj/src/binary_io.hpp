#pragma once

// Little-endian scalar packing shared by the container readers/writers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace ovgs::detail {

template <typename T>
void append_le(std::string& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff),
                         static_cast<char>((bits >> 24) & 0xff)};
  out.append(bytes, 4);
}

template <typename T>
T read_le(std::string_view in, std::size_t offset) {
  static_assert(sizeof(T) == 4);
  const auto* p = reinterpret_cast<const unsigned char*>(in.data() + offset);
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace ovgs::detail
