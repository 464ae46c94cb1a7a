#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "etdi/crypto.hpp"

namespace etdi::token {

// Claim set carried by a token. Tool tokens bind tool_id/tool_version to a
// concrete definition; user tokens leave both empty and carry entitlement
// scopes in `scopes`.
struct Claims {
    std::string iss;
    std::string sub;
    std::int64_t iat = 0;
    std::int64_t exp = 0;
    std::string tool_id;
    std::string tool_version;  // "major.minor.patch", empty when unbound
    std::set<std::string> scopes;
    std::string jti;

    bool operator==(const Claims&) const = default;
    Json to_json() const;
    static Claims from_json(const Json& doc);
};

// Compact serialized token: base64url(header).base64url(payload).base64url(sig)
// with header {"alg":"EdDSA","kid":...}.
struct ToolToken {
    std::string header_b64;
    std::string payload_b64;
    std::string signature_b64;

    std::string serialize() const;
    static ToolToken parse(const std::string& compact);  // throws EncodingError
};

enum class TokenError {
    UntrustedIssuer,
    BadSignature,
    Expired,
    ToolBindingMismatch,
    Revoked,
};

const char* to_string(TokenError e);

struct ValidationResult {
    bool valid = false;
    std::optional<Claims> claims;       // set when valid
    TokenError error = TokenError::BadSignature;
    std::string detail;

    static ValidationResult ok(Claims c);
    static ValidationResult fail(TokenError e, std::string detail);
};

struct Binding {
    std::string tool_id;
    std::string tool_version;
};

Binding binding_for(const ToolDefinition& def);

class RevocationList {
public:
    RevocationList() = default;

    bool contains(const std::string& jti) const { return revoked_.count(jti) != 0; }
    void add(std::string jti) { revoked_.insert(std::move(jti)); }
    std::size_t size() const { return revoked_.size(); }
    const std::set<std::string>& jtis() const { return revoked_; }

    std::string dump() const;  // one jti per line
    static RevocationList parse(const std::string& text);
    static RevocationList load_file(const std::string& path);  // throws StoreIOError
    void save_file(const std::string& path) const;

private:
    std::set<std::string> revoked_;
};

// Mints a token under an issuer key. Throws InvalidClaims when iat > exp or
// iss/jti are empty.
ToolToken issue_token(const crypto::KeyPair& idp_key, const Claims& claims);

// Validation pipeline over a compact token, every failure typed:
//   (a) issuer listed in the trust store with an ACTIVE key -> UNTRUSTED_ISSUER
//   (b) Ed25519 signature over header.payload                -> BAD_SIGNATURE
//   (c) now < exp (exclusive validity)                       -> EXPIRED
//   (d) claims match `expected` binding when one is given    -> TOOL_BINDING_MISMATCH
//   (e) jti absent from the revocation list                  -> REVOKED
// Malformed input (wrong segment count, bad base64, bad JSON) reports
// BAD_SIGNATURE with a detail message.
ValidationResult validate_token(const std::string& compact,
                                const crypto::TrustStore& ts,
                                const std::optional<Binding>& expected,
                                std::int64_t now,
                                const RevocationList& rl);

struct AdherenceResult {
    bool passed = false;
    std::vector<std::string> missing;  // needed scopes no token scope covers
    std::string detail;
};

// PASS iff every needed scope is covered by some token scope. Scopes are
// colon-delimited; a token scope may end in a lone "*" segment that covers
// any suffix ("fs:read:*" covers "fs:read:documents"). Throws MalformedScope
// on empty scopes, empty segments, or '*' anywhere but a whole tail segment.
AdherenceResult check_scope_adherence(const std::set<std::string>& action_scopes,
                                      const std::set<std::string>& token_scopes);

// True iff `token_scope` covers `needed` (both well-formed).
bool scope_covers(const std::string& token_scope, const std::string& needed);

// PASS iff the definition's required caller entitlements are covered by the
// (already validated) user token's scopes. An empty requirement passes even
// without a token.
AdherenceResult check_caller_entitlements(const ToolDefinition& def,
                                          const std::optional<Claims>& user_claims);

}  // namespace etdi::token
