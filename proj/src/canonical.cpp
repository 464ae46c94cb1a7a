#include "etdi/canonical.hpp"

#include <cmath>
#include <mutex>

#include <sodium.h>

namespace etdi {

namespace {

void ensure_sodium() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0) {
            throw Error("libsodium initialization failed");
        }
    });
}

void check_canonicalizable(const Json& node, const std::string& path) {
    switch (node.type()) {
        case Json::value_t::number_float: {
            const double v = node.get<double>();
            if (!std::isfinite(v)) {
                throw EncodingError("non-finite number at " + path);
            }
            return;
        }
        case Json::value_t::binary:
            throw EncodingError("binary value at " + path);
        case Json::value_t::discarded:
            throw EncodingError("discarded value at " + path);
        case Json::value_t::object:
            for (const auto& [key, value] : node.items()) {
                check_canonicalizable(value, path + "/" + key);
            }
            return;
        case Json::value_t::array: {
            std::size_t i = 0;
            for (const auto& value : node) {
                check_canonicalizable(value, path + "/" + std::to_string(i++));
            }
            return;
        }
        default:
            return;
    }
}

}  // namespace

std::string canonical_dump(const Json& doc) {
    check_canonicalizable(doc, "");
    try {
        // nlohmann objects are backed by std::map, so keys come out sorted
        // by byte value, which equals code-point order for UTF-8.
        return doc.dump(-1, ' ', false, Json::error_handler_t::strict);
    } catch (const Json::type_error& e) {
        throw EncodingError(std::string("invalid UTF-8 in document: ") + e.what());
    }
}

std::vector<std::uint8_t> canonical_bytes(const Json& doc) {
    const std::string text = canonical_dump(doc);
    return {text.begin(), text.end()};
}

std::string sha256_hex(const std::uint8_t* data, std::size_t size) {
    ensure_sodium();
    unsigned char digest[crypto_hash_sha256_BYTES];
    crypto_hash_sha256(digest, data, size);
    char hex[crypto_hash_sha256_BYTES * 2 + 1];
    sodium_bin2hex(hex, sizeof hex, digest, sizeof digest);
    return hex;
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
    return sha256_hex(bytes.data(), bytes.size());
}

std::string sha256_hex(const std::string& text) {
    return sha256_hex(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

namespace {

std::string encode_variant(const std::uint8_t* data, std::size_t size, int variant) {
    ensure_sodium();
    std::string out;
    out.resize(sodium_base64_encoded_len(size, variant));
    sodium_bin2base64(out.data(), out.size(), data, size, variant);
    out.resize(out.find('\0') == std::string::npos ? out.size() : out.find('\0'));
    return out;
}

std::vector<std::uint8_t> decode_variant(const std::string& text, int variant) {
    ensure_sodium();
    std::vector<std::uint8_t> out(text.size() + 4);
    std::size_t written = 0;
    if (sodium_base642bin(out.data(), out.size(),
                          text.data(), text.size(),
                          nullptr, &written, nullptr, variant) != 0) {
        throw EncodingError("invalid base64 input");
    }
    out.resize(written);
    return out;
}

}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t size) {
    return encode_variant(data, size, sodium_base64_VARIANT_ORIGINAL);
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
    return decode_variant(text, sodium_base64_VARIANT_ORIGINAL);
}

std::string base64url_encode(const std::uint8_t* data, std::size_t size) {
    return encode_variant(data, size, sodium_base64_VARIANT_URLSAFE_NO_PADDING);
}

std::string base64url_encode(const std::string& text) {
    return base64url_encode(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
}

std::vector<std::uint8_t> base64url_decode(const std::string& text) {
    return decode_variant(text, sodium_base64_VARIANT_URLSAFE_NO_PADDING);
}

bool is_lower_hex(const std::string& text, std::size_t expected_size) {
    if (text.size() != expected_size) {
        return false;
    }
    for (char c : text) {
        const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!ok) {
            return false;
        }
    }
    return true;
}

}  // namespace etdi
