#include "etdi/crypto.hpp"

#include <fstream>
#include <mutex>

#include <sodium.h>

namespace etdi::crypto {

namespace {

void ensure_sodium() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        if (sodium_init() < 0) {
            throw Error("libsodium initialization failed");
        }
    });
}

static_assert(kPublicKeyBytes == crypto_sign_PUBLICKEYBYTES);
static_assert(kSeedBytes == crypto_sign_SEEDBYTES);
static_assert(kSignatureBytes == crypto_sign_BYTES);

std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> secret_key_from_seed(const Seed& seed) {
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk{};
    PublicKey pk{};
    crypto_sign_seed_keypair(pk.data(), sk.data(), seed.data());
    return sk;
}

template <std::size_t N>
std::array<std::uint8_t, N> array_from_b64(const std::string& text, const char* what) {
    const auto bytes = base64_decode(text);
    if (bytes.size() != N) {
        throw EncodingError(std::string(what) + " has wrong length");
    }
    std::array<std::uint8_t, N> out{};
    std::copy(bytes.begin(), bytes.end(), out.begin());
    return out;
}

}  // namespace

Json KeyPair::to_json() const {
    return Json{
        {"key_id", key_id},
        {"algorithm", algorithm},
        {"public_key", base64_encode(public_key.data(), public_key.size())},
        {"private_key", base64_encode(private_seed.data(), private_seed.size())},
    };
}

KeyPair KeyPair::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("key_id") || !doc.contains("public_key") ||
        !doc.contains("private_key")) {
        throw EncodingError("malformed keypair document");
    }
    KeyPair pair;
    pair.key_id = doc["key_id"].get<std::string>();
    pair.algorithm = doc.value("algorithm", std::string(kAlgorithm));
    if (pair.algorithm != kAlgorithm) {
        throw EncodingError("unsupported key algorithm '" + pair.algorithm + "'");
    }
    pair.public_key = array_from_b64<kPublicKeyBytes>(doc["public_key"].get<std::string>(),
                                                      "public_key");
    pair.private_seed = array_from_b64<kSeedBytes>(doc["private_key"].get<std::string>(),
                                                   "private_key");
    if (pair.key_id.empty()) {
        throw EncodingError("key_id must be non-empty");
    }
    // The stored public key must correspond to the seed.
    const KeyPair derived = keypair_from_seed(pair.key_id, pair.private_seed);
    if (derived.public_key != pair.public_key) {
        throw EncodingError("public key does not match private seed");
    }
    return pair;
}

KeyPair generate_keypair(const std::string& key_id) {
    ensure_sodium();
    if (key_id.empty()) {
        throw InvariantViolation("key_id must be non-empty");
    }
    Seed seed{};
    randombytes_buf(seed.data(), seed.size());
    return keypair_from_seed(key_id, seed);
}

KeyPair keypair_from_seed(const std::string& key_id, const Seed& seed) {
    ensure_sodium();
    if (key_id.empty()) {
        throw InvariantViolation("key_id must be non-empty");
    }
    KeyPair pair;
    pair.key_id = key_id;
    pair.private_seed = seed;
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk{};
    crypto_sign_seed_keypair(pair.public_key.data(), sk.data(), seed.data());
    sodium_memzero(sk.data(), sk.size());
    return pair;
}

KeyPair keypair_from_seed_phrase(const std::string& key_id, const std::string& phrase) {
    ensure_sodium();
    Seed seed{};
    crypto_hash_sha256(seed.data(),
                       reinterpret_cast<const unsigned char*>(phrase.data()), phrase.size());
    return keypair_from_seed(key_id, seed);
}

Signature sign_bytes(const std::vector<std::uint8_t>& bytes, const KeyPair& pair) {
    ensure_sodium();
    auto sk = secret_key_from_seed(pair.private_seed);
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, bytes.data(), bytes.size(), sk.data());
    sodium_memzero(sk.data(), sk.size());
    return sig;
}

bool verify_bytes(const std::vector<std::uint8_t>& bytes, const Signature& sig,
                  const PublicKey& pub) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data(), bytes.data(), bytes.size(), pub.data()) == 0;
}

// -------------------------------------------------------------------------
// Trust store

const char* to_string(KeyStatus s) {
    return s == KeyStatus::Active ? "ACTIVE" : "REVOKED";
}

namespace {

KeyStatus key_status_from_string(const std::string& text) {
    if (text == "ACTIVE") return KeyStatus::Active;
    if (text == "REVOKED") return KeyStatus::Revoked;
    throw EncodingError("unknown key status '" + text + "'");
}

void add_key(std::map<std::string, std::vector<TrustedKey>>& registry,
             const std::string& owner, TrustedKey key) {
    auto& keys = registry[owner];
    for (const auto& existing : keys) {
        if (existing.key_id == key.key_id) {
            throw InvariantViolation("duplicate key_id '" + key.key_id + "' for '" + owner + "'");
        }
    }
    keys.push_back(std::move(key));
}

void revoke_key(std::map<std::string, std::vector<TrustedKey>>& registry,
                const std::string& owner, const std::string& key_id) {
    auto it = registry.find(owner);
    if (it == registry.end()) {
        throw NotFound("no keys registered for '" + owner + "'");
    }
    for (auto& key : it->second) {
        if (key.key_id == key_id) {
            key.status = KeyStatus::Revoked;
            return;
        }
    }
    throw NotFound("key '" + key_id + "' not registered for '" + owner + "'");
}

const TrustedKey* find_key(const std::map<std::string, std::vector<TrustedKey>>& registry,
                           const std::string& owner, const std::string& key_id) {
    auto it = registry.find(owner);
    if (it == registry.end()) return nullptr;
    for (const auto& key : it->second) {
        if (key.key_id == key_id) return &key;
    }
    return nullptr;
}

Json registry_to_json(const std::map<std::string, std::vector<TrustedKey>>& registry) {
    Json out = Json::object();
    for (const auto& [owner, keys] : registry) {
        Json arr = Json::array();
        for (const auto& key : keys) {
            arr.push_back(Json{
                {"key_id", key.key_id},
                {"algorithm", key.algorithm},
                {"public_key", base64_encode(key.public_key.data(), key.public_key.size())},
                {"status", to_string(key.status)},
            });
        }
        out[owner] = std::move(arr);
    }
    return out;
}

std::map<std::string, std::vector<TrustedKey>> registry_from_json(const Json& doc,
                                                                  const char* what) {
    if (!doc.is_object()) {
        throw EncodingError(std::string(what) + " section must be an object");
    }
    std::map<std::string, std::vector<TrustedKey>> out;
    for (const auto& [owner, keys] : doc.items()) {
        if (!keys.is_array()) {
            throw EncodingError("keys for '" + owner + "' must be an array");
        }
        for (const auto& entry : keys) {
            TrustedKey key;
            key.key_id = entry.at("key_id").get<std::string>();
            key.algorithm = entry.value("algorithm", std::string(kAlgorithm));
            key.public_key = array_from_b64<kPublicKeyBytes>(
                entry.at("public_key").get<std::string>(), "public_key");
            key.status = key_status_from_string(entry.value("status", std::string("ACTIVE")));
            add_key(out, owner, std::move(key));
        }
    }
    return out;
}

}  // namespace

TrustStore TrustStore::with_provider_key(const std::string& provider_id, TrustedKey key) const {
    TrustStore next = *this;
    add_key(next.providers_, provider_id, std::move(key));
    return next;
}

TrustStore TrustStore::with_issuer_key(const std::string& issuer_id, TrustedKey key) const {
    TrustStore next = *this;
    add_key(next.issuers_, issuer_id, std::move(key));
    return next;
}

TrustStore TrustStore::with_provider_key_revoked(const std::string& provider_id,
                                                 const std::string& key_id) const {
    TrustStore next = *this;
    revoke_key(next.providers_, provider_id, key_id);
    return next;
}

TrustStore TrustStore::with_issuer_key_revoked(const std::string& issuer_id,
                                               const std::string& key_id) const {
    TrustStore next = *this;
    revoke_key(next.issuers_, issuer_id, key_id);
    return next;
}

bool TrustStore::has_provider(const std::string& provider_id) const {
    return providers_.contains(provider_id);
}

bool TrustStore::has_issuer(const std::string& issuer_id) const {
    return issuers_.contains(issuer_id);
}

const TrustedKey* TrustStore::find_provider_key(const std::string& provider_id,
                                                const std::string& key_id) const {
    return find_key(providers_, provider_id, key_id);
}

const TrustedKey* TrustStore::find_issuer_key(const std::string& issuer_id,
                                              const std::string& key_id) const {
    return find_key(issuers_, issuer_id, key_id);
}

Json TrustStore::to_json() const {
    return Json{
        {"providers", registry_to_json(providers_)},
        {"issuers", registry_to_json(issuers_)},
    };
}

TrustStore TrustStore::from_json(const Json& doc) {
    if (!doc.is_object()) {
        throw EncodingError("trust store must be an object");
    }
    TrustStore ts;
    if (doc.contains("providers")) {
        ts.providers_ = registry_from_json(doc["providers"], "providers");
    }
    if (doc.contains("issuers")) {
        ts.issuers_ = registry_from_json(doc["issuers"], "issuers");
    }
    return ts;
}

TrustStore TrustStore::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw StoreIOError("cannot open trust store file: " + path);
    }
    Json doc;
    try {
        in >> doc;
    } catch (const Json::exception& e) {
        throw StoreIOError("cannot parse trust store file " + path + ": " + e.what());
    }
    return from_json(doc);
}

void TrustStore::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw StoreIOError("cannot write trust store file: " + path);
    }
    out << to_json().dump(2) << "\n";
}

// -------------------------------------------------------------------------
// Verification

const char* to_string(VerifyFailure f) {
    switch (f) {
        case VerifyFailure::UnknownProvider: return "UNKNOWN_PROVIDER";
        case VerifyFailure::UnknownKey: return "UNKNOWN_KEY";
        case VerifyFailure::RevokedKey: return "REVOKED_KEY";
        case VerifyFailure::BadSignature: return "BAD_SIGNATURE";
        case VerifyFailure::HashMismatch: return "HASH_MISMATCH";
    }
    return "BAD_SIGNATURE";
}

VerificationResult VerificationResult::ok(std::string provider_id, std::string key_id) {
    VerificationResult r;
    r.verified = true;
    r.provider_id = std::move(provider_id);
    r.key_id = std::move(key_id);
    return r;
}

VerificationResult VerificationResult::invalid(VerifyFailure failure, std::string detail) {
    VerificationResult r;
    r.verified = false;
    r.failure = failure;
    r.detail = std::move(detail);
    return r;
}

VerificationResult verify_envelope(const std::vector<std::uint8_t>& canonical,
                                   const std::string& signer_id,
                                   const std::string& key_id,
                                   const std::string& algorithm,
                                   const Signature& signature,
                                   const ContentHash& signed_bytes_hash,
                                   const TrustStore& ts,
                                   bool issuer_registry) {
    const bool known = issuer_registry ? ts.has_issuer(signer_id) : ts.has_provider(signer_id);
    if (!known) {
        return VerificationResult::invalid(VerifyFailure::UnknownProvider,
                                           "no trusted keys for '" + signer_id + "'");
    }
    const TrustedKey* key = issuer_registry ? ts.find_issuer_key(signer_id, key_id)
                                            : ts.find_provider_key(signer_id, key_id);
    if (key == nullptr) {
        return VerificationResult::invalid(VerifyFailure::UnknownKey,
                                           "key '" + key_id + "' not trusted for '" +
                                               signer_id + "'");
    }
    if (key->status == KeyStatus::Revoked) {
        return VerificationResult::invalid(VerifyFailure::RevokedKey,
                                           "key '" + key_id + "' is revoked");
    }
    if (algorithm != kAlgorithm || key->algorithm != kAlgorithm) {
        return VerificationResult::invalid(VerifyFailure::BadSignature,
                                           "unsupported signature algorithm '" + algorithm + "'");
    }
    if (!verify_bytes(canonical, signature, key->public_key)) {
        return VerificationResult::invalid(VerifyFailure::BadSignature,
                                           "signature does not verify over canonical bytes");
    }
    if (sha256_hex(canonical) != signed_bytes_hash.hex) {
        return VerificationResult::invalid(VerifyFailure::HashMismatch,
                                           "signed_bytes_hash does not match canonical bytes");
    }
    return VerificationResult::ok(signer_id, key_id);
}

// -------------------------------------------------------------------------
// Signed tool definitions

Json SignedToolDefinition::to_json() const {
    return Json{
        {"definition", definition_to_json(definition)},
        {"key_id", key_id},
        {"algorithm", algorithm},
        {"signature", base64_encode(signature.data(), signature.size())},
        {"signed_bytes_hash", signed_bytes_hash.hex},
    };
}

SignedToolDefinition SignedToolDefinition::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("definition") || !doc.contains("key_id") ||
        !doc.contains("signature") || !doc.contains("signed_bytes_hash")) {
        throw EncodingError("malformed signature envelope");
    }
    SignedToolDefinition sd;
    sd.definition = definition_from_json(doc["definition"]);
    sd.key_id = doc["key_id"].get<std::string>();
    sd.algorithm = doc.value("algorithm", std::string(kAlgorithm));
    sd.signature = array_from_b64<kSignatureBytes>(doc["signature"].get<std::string>(),
                                                   "signature");
    sd.signed_bytes_hash.hex = doc["signed_bytes_hash"].get<std::string>();
    if (!sd.signed_bytes_hash.valid()) {
        throw EncodingError("signed_bytes_hash must be 64 lowercase hex characters");
    }
    return sd;
}

SignedToolDefinition sign_definition(const ToolDefinition& def, const KeyPair& pair) {
    const auto canonical = canonical_encode(def);
    SignedToolDefinition sd;
    sd.definition = def;
    sd.key_id = pair.key_id;
    sd.algorithm = pair.algorithm;
    sd.signature = sign_bytes(canonical, pair);
    sd.signed_bytes_hash.hex = sha256_hex(canonical);
    return sd;
}

VerificationResult verify_signed_definition(const SignedToolDefinition& sd,
                                            const TrustStore& ts) {
    std::vector<std::uint8_t> canonical;
    try {
        canonical = canonical_encode(sd.definition);
    } catch (const Error& e) {
        return VerificationResult::invalid(VerifyFailure::BadSignature,
                                           std::string("definition not canonicalizable: ") +
                                               e.what());
    }
    return verify_envelope(canonical, sd.definition.provider_id, sd.key_id, sd.algorithm,
                           sd.signature, sd.signed_bytes_hash, ts, /*issuer_registry=*/false);
}

}  // namespace etdi::crypto
