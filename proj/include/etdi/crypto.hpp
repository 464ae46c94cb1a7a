#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "etdi/model.hpp"

namespace etdi::crypto {

inline constexpr std::size_t kPublicKeyBytes = 32;
inline constexpr std::size_t kSeedBytes = 32;
inline constexpr std::size_t kSignatureBytes = 64;
inline constexpr const char* kAlgorithm = "ed25519";

using PublicKey = std::array<std::uint8_t, kPublicKeyBytes>;
using Seed = std::array<std::uint8_t, kSeedBytes>;
using Signature = std::array<std::uint8_t, kSignatureBytes>;

// An Ed25519 keypair. The private part is the 32-byte seed and is never
// serialized into any signed artifact; only the keypair file format (used by
// the CLI) carries it.
struct KeyPair {
    std::string key_id;
    std::string algorithm = kAlgorithm;
    PublicKey public_key{};
    Seed private_seed{};

    Json to_json() const;  // includes the private seed; for key files only
    static KeyPair from_json(const Json& doc);
};

KeyPair generate_keypair(const std::string& key_id);

// Deterministic keypair derivation; used by fixtures so that scenario runs
// are reproducible from a seed string.
KeyPair keypair_from_seed(const std::string& key_id, const Seed& seed);
KeyPair keypair_from_seed_phrase(const std::string& key_id, const std::string& phrase);

Signature sign_bytes(const std::vector<std::uint8_t>& bytes, const KeyPair& pair);
bool verify_bytes(const std::vector<std::uint8_t>& bytes, const Signature& sig,
                  const PublicKey& pub);

// -------------------------------------------------------------------------
// Trust store

enum class KeyStatus { Active, Revoked };

const char* to_string(KeyStatus s);

struct TrustedKey {
    std::string key_id;
    std::string algorithm = kAlgorithm;
    PublicKey public_key{};
    KeyStatus status = KeyStatus::Active;
};

// Maps provider ids and issuer ids to their published keys. Immutable in
// use: mutations return a new store value, so concurrent readers never see
// a partial update.
class TrustStore {
public:
    TrustStore() = default;

    TrustStore with_provider_key(const std::string& provider_id, TrustedKey key) const;
    TrustStore with_issuer_key(const std::string& issuer_id, TrustedKey key) const;
    // Marks a key REVOKED. Idempotent on an already revoked key.
    // Throws NotFound when the provider or key does not exist.
    TrustStore with_provider_key_revoked(const std::string& provider_id,
                                         const std::string& key_id) const;
    TrustStore with_issuer_key_revoked(const std::string& issuer_id,
                                       const std::string& key_id) const;

    bool has_provider(const std::string& provider_id) const;
    bool has_issuer(const std::string& issuer_id) const;
    const TrustedKey* find_provider_key(const std::string& provider_id,
                                        const std::string& key_id) const;
    const TrustedKey* find_issuer_key(const std::string& issuer_id,
                                      const std::string& key_id) const;

    Json to_json() const;
    static TrustStore from_json(const Json& doc);
    static TrustStore load_file(const std::string& path);  // throws StoreIOError
    void save_file(const std::string& path) const;

private:
    std::map<std::string, std::vector<TrustedKey>> providers_;
    std::map<std::string, std::vector<TrustedKey>> issuers_;
};

// -------------------------------------------------------------------------
// Verification results

enum class VerifyFailure {
    UnknownProvider,
    UnknownKey,
    RevokedKey,
    BadSignature,
    HashMismatch,
};

const char* to_string(VerifyFailure f);

struct VerificationResult {
    bool verified = false;
    std::string provider_id;  // set when verified
    std::string key_id;       // set when verified
    VerifyFailure failure = VerifyFailure::BadSignature;
    std::string detail;

    static VerificationResult ok(std::string provider_id, std::string key_id);
    static VerificationResult invalid(VerifyFailure failure, std::string detail);
};

// -------------------------------------------------------------------------
// Signed tool definitions

struct SignedToolDefinition {
    ToolDefinition definition;
    std::string key_id;
    std::string algorithm = kAlgorithm;
    Signature signature{};
    ContentHash signed_bytes_hash;  // hash of the canonical bytes that were signed

    Json to_json() const;
    static SignedToolDefinition from_json(const Json& doc);
};

SignedToolDefinition sign_definition(const ToolDefinition& def, const KeyPair& pair);

// VerifiedBy(provider, key) only when the trust store holds an ACTIVE key
// with the envelope's key id under the definition's own provider id, the
// signature verifies over the canonical encoding, and the envelope hash
// matches the recomputed content hash. All failures are returned as values.
VerificationResult verify_signed_definition(const SignedToolDefinition& sd,
                                            const TrustStore& ts);

// Shared envelope check used by definition and policy verification. Looks up
// provider keys or issuer keys depending on `issuer_registry`.
VerificationResult verify_envelope(const std::vector<std::uint8_t>& canonical,
                                   const std::string& signer_id,
                                   const std::string& key_id,
                                   const std::string& algorithm,
                                   const Signature& signature,
                                   const ContentHash& signed_bytes_hash,
                                   const TrustStore& ts,
                                   bool issuer_registry = false);

}  // namespace etdi::crypto
