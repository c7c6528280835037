#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace admp::io {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

/// Appends the little-endian encoding of `v` to `out`.
template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

template <typename T>
T get_le(const unsigned char* p) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  return v;
}

std::vector<unsigned char> read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::span<const unsigned char> bytes);
void write_text(const std::filesystem::path& p, const std::string& text);
std::string read_text(const std::filesystem::path& p);

/// key=value lines; blank lines and lines starting with '#' are skipped. Order is preserved.
std::vector<std::pair<std::string, std::string>> parse_manifest(const std::string& text);
/// First value for `key`; throws DataError if missing.
const std::string& manifest_get(const std::vector<std::pair<std::string, std::string>>& kv, const std::string& key);

/// zlib CRC-32 of the payload.
std::uint32_t crc32(std::span<const unsigned char> bytes);

}  // namespace admp::io
