#include "gsp/render/digest.hpp"

#include <openssl/sha.h>

#include <array>

namespace gsp::render {

namespace {

std::array<unsigned char, SHA256_DIGEST_LENGTH> digest(const void* data, std::size_t size) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> out{};
  SHA256(static_cast<const unsigned char*>(data), size, out.data());
  return out;
}

std::string to_hex(const std::array<unsigned char, SHA256_DIGEST_LENGTH>& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * d.size());
  for (unsigned char c : d) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 0xF]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) { return to_hex(digest(data.data(), data.size())); }

std::string sha256_hex(std::span<const std::uint8_t> data) { return to_hex(digest(data.data(), data.size())); }

std::uint64_t digest_seed(std::string_view data) {
  const auto d = digest(data.data(), data.size());
  std::uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | d[static_cast<std::size_t>(i)];
  return seed;
}

}  // namespace gsp::render
