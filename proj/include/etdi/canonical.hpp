#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "etdi/errors.hpp"

namespace etdi {

using Json = nlohmann::json;

// Canonical serialization used for everything that gets signed or hashed:
// object keys sorted lexicographically by code point, no insignificant
// whitespace, UTF-8 throughout. Throws EncodingError for values with no
// canonical form (non-finite numbers, invalid UTF-8, binary blobs).
std::string canonical_dump(const Json& doc);

std::vector<std::uint8_t> canonical_bytes(const Json& doc);

// Hex-encoded (lowercase) SHA-256 of a byte sequence.
std::string sha256_hex(const std::uint8_t* data, std::size_t size);
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);
std::string sha256_hex(const std::string& text);

// Base64 helpers. Standard alphabet with padding for stored key material and
// signatures; URL-safe unpadded variant for token segments.
std::string base64_encode(const std::uint8_t* data, std::size_t size);
std::vector<std::uint8_t> base64_decode(const std::string& text);
std::string base64url_encode(const std::uint8_t* data, std::size_t size);
std::string base64url_encode(const std::string& text);
std::vector<std::uint8_t> base64url_decode(const std::string& text);

bool is_lower_hex(const std::string& text, std::size_t expected_size);

}  // namespace etdi
