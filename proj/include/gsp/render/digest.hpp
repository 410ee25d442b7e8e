#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace gsp::render {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const std::uint8_t> data);

/// First 8 bytes of the SHA-256 of `data`, big-endian.
std::uint64_t digest_seed(std::string_view data);

}  // namespace gsp::render
