#include "etdi/token.hpp"

#include <fstream>
#include <sstream>

#include "etdi/canonical.hpp"
#include "etdi/errors.hpp"

namespace etdi::token {

namespace {

constexpr const char* kJwsAlg = "EdDSA";

std::vector<std::string> split_scope(const std::string& scope) {
    if (scope.empty()) throw MalformedScope("scope must be non-empty");
    std::vector<std::string> segments;
    std::string current;
    for (char ch : scope) {
        if (ch == ':') {
            segments.push_back(current);
            current.clear();
        } else {
            current += ch;
        }
    }
    segments.push_back(current);
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const std::string& seg = segments[i];
        if (seg.empty())
            throw MalformedScope("scope '" + scope + "' has an empty segment");
        const bool has_star = seg.find('*') != std::string::npos;
        if (has_star && (seg != "*" || i + 1 != segments.size()))
            throw MalformedScope("scope '" + scope +
                                 "': '*' is only valid as a whole tail segment");
    }
    return segments;
}

bool is_wildcard(const std::vector<std::string>& segments) {
    return segments.back() == "*";
}

std::vector<std::uint8_t> signing_input(const std::string& header_b64,
                                        const std::string& payload_b64) {
    std::string joined = header_b64 + "." + payload_b64;
    return std::vector<std::uint8_t>(joined.begin(), joined.end());
}

}  // namespace

Json Claims::to_json() const {
    Json doc;
    doc["iss"] = iss;
    doc["sub"] = sub;
    doc["iat"] = iat;
    doc["exp"] = exp;
    doc["tool_id"] = tool_id;
    doc["tool_version"] = tool_version;
    Json arr = Json::array();
    for (const auto& s : scopes) arr.push_back(s);
    doc["scopes"] = arr;
    doc["jti"] = jti;
    return doc;
}

Claims Claims::from_json(const Json& doc) {
    if (!doc.is_object()) throw EncodingError("claims must be a JSON object");
    static const std::set<std::string> known = {"iss", "sub",          "iat",    "exp",
                                                "tool_id", "tool_version", "scopes", "jti"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!known.count(key)) throw EncodingError("unknown claim '" + key + "'");
    }
    for (const auto& key : known) {
        if (!doc.contains(key)) throw EncodingError("missing claim '" + key + "'");
    }
    Claims c;
    for (const auto& key : {"iss", "sub", "tool_id", "tool_version", "jti"}) {
        if (!doc[key].is_string()) throw EncodingError(std::string("claim '") + key + "' must be a string");
    }
    if (!doc["iat"].is_number_integer() || !doc["exp"].is_number_integer())
        throw EncodingError("claims 'iat' and 'exp' must be integers");
    c.iss = doc["iss"].get<std::string>();
    c.sub = doc["sub"].get<std::string>();
    c.iat = doc["iat"].get<std::int64_t>();
    c.exp = doc["exp"].get<std::int64_t>();
    c.tool_id = doc["tool_id"].get<std::string>();
    c.tool_version = doc["tool_version"].get<std::string>();
    c.jti = doc["jti"].get<std::string>();
    if (!doc["scopes"].is_array()) throw EncodingError("claim 'scopes' must be an array");
    for (const auto& item : doc["scopes"]) {
        if (!item.is_string()) throw EncodingError("claim 'scopes' must contain strings");
        if (!c.scopes.insert(item.get<std::string>()).second)
            throw EncodingError("claim 'scopes' has duplicate entry");
    }
    return c;
}

std::string ToolToken::serialize() const {
    return header_b64 + "." + payload_b64 + "." + signature_b64;
}

ToolToken ToolToken::parse(const std::string& compact) {
    std::vector<std::string> parts;
    std::string current;
    for (char ch : compact) {
        if (ch == '.') {
            parts.push_back(current);
            current.clear();
        } else {
            current += ch;
        }
    }
    parts.push_back(current);
    if (parts.size() != 3)
        throw EncodingError("token must have exactly 3 dot-separated segments, got " +
                            std::to_string(parts.size()));
    if (parts[0].empty() || parts[1].empty() || parts[2].empty())
        throw EncodingError("token has an empty segment");
    return ToolToken{parts[0], parts[1], parts[2]};
}

Binding binding_for(const ToolDefinition& def) {
    return Binding{def.id, def.version.to_string()};
}

std::string RevocationList::dump() const {
    std::string out;
    for (const auto& jti : revoked_) {
        out += jti;
        out += '\n';
    }
    return out;
}

RevocationList RevocationList::parse(const std::string& text) {
    RevocationList rl;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rl.add(line);
    }
    return rl;
}

RevocationList RevocationList::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreIOError("cannot open revocation list: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void RevocationList::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreIOError("cannot write revocation list: " + path);
    out << dump();
    if (!out) throw StoreIOError("failed writing revocation list: " + path);
}

ToolToken issue_token(const crypto::KeyPair& idp_key, const Claims& claims) {
    if (claims.iat > claims.exp)
        throw InvalidClaims("iat " + std::to_string(claims.iat) + " is after exp " +
                            std::to_string(claims.exp));
    if (claims.iss.empty()) throw InvalidClaims("iss must be non-empty");
    if (claims.jti.empty()) throw InvalidClaims("jti must be non-empty");
    Json header;
    header["alg"] = kJwsAlg;
    header["kid"] = idp_key.key_id;
    ToolToken tok;
    tok.header_b64 = base64url_encode(canonical_dump(header));
    tok.payload_b64 = base64url_encode(canonical_dump(claims.to_json()));
    crypto::Signature sig = crypto::sign_bytes(signing_input(tok.header_b64, tok.payload_b64), idp_key);
    tok.signature_b64 = base64url_encode(sig.data(), sig.size());
    return tok;
}

ValidationResult ValidationResult::ok(Claims c) {
    ValidationResult r;
    r.valid = true;
    r.claims = std::move(c);
    return r;
}

ValidationResult ValidationResult::fail(TokenError e, std::string detail) {
    ValidationResult r;
    r.valid = false;
    r.error = e;
    r.detail = std::move(detail);
    return r;
}

ValidationResult validate_token(const std::string& compact,
                                const crypto::TrustStore& ts,
                                const std::optional<Binding>& expected,
                                std::int64_t now,
                                const RevocationList& rl) {
    ToolToken tok;
    Json header;
    Claims claims;
    crypto::Signature sig{};
    try {
        tok = ToolToken::parse(compact);
        const std::vector<std::uint8_t> header_bytes = base64url_decode(tok.header_b64);
        const std::vector<std::uint8_t> payload_bytes = base64url_decode(tok.payload_b64);
        header = Json::parse(std::string(header_bytes.begin(), header_bytes.end()));
        Json payload = Json::parse(std::string(payload_bytes.begin(), payload_bytes.end()));
        claims = Claims::from_json(payload);
        std::vector<std::uint8_t> sig_bytes = base64url_decode(tok.signature_b64);
        if (sig_bytes.size() != sig.size())
            throw EncodingError("signature segment must decode to " + std::to_string(sig.size()) +
                                " bytes");
        std::copy(sig_bytes.begin(), sig_bytes.end(), sig.begin());
    } catch (const Error& e) {
        return ValidationResult::fail(TokenError::BadSignature,
                                      std::string("malformed token: ") + e.what());
    } catch (const Json::exception& e) {
        return ValidationResult::fail(TokenError::BadSignature,
                                      std::string("malformed token: ") + e.what());
    }
    if (!header.is_object() || !header.contains("alg") || !header.contains("kid") ||
        !header["alg"].is_string() || !header["kid"].is_string())
        return ValidationResult::fail(TokenError::BadSignature,
                                      "token header must carry string 'alg' and 'kid'");

    // (a) issuer trust: known issuer, known kid, ACTIVE key
    const std::string kid = header["kid"].get<std::string>();
    if (!ts.has_issuer(claims.iss))
        return ValidationResult::fail(TokenError::UntrustedIssuer,
                                      "issuer '" + claims.iss + "' is not trusted");
    const crypto::TrustedKey* key = ts.find_issuer_key(claims.iss, kid);
    if (key == nullptr)
        return ValidationResult::fail(TokenError::UntrustedIssuer,
                                      "issuer '" + claims.iss + "' has no key '" + kid + "'");
    if (key->status != crypto::KeyStatus::Active)
        return ValidationResult::fail(TokenError::UntrustedIssuer,
                                      "issuer key '" + kid + "' is revoked");

    // (b) signature over header.payload
    if (header["alg"].get<std::string>() != kJwsAlg)
        return ValidationResult::fail(TokenError::BadSignature,
                                      "unsupported alg '" + header["alg"].get<std::string>() + "'");
    if (!crypto::verify_bytes(signing_input(tok.header_b64, tok.payload_b64), sig, key->public_key))
        return ValidationResult::fail(TokenError::BadSignature, "signature does not verify");

    // (c) expiry, exclusive: the token dies at the exp instant
    if (now >= claims.exp)
        return ValidationResult::fail(TokenError::Expired,
                                      "token expired at " + std::to_string(claims.exp) +
                                          " (now " + std::to_string(now) + ")");

    // (d) binding to the expected tool identity
    if (expected) {
        if (claims.tool_id != expected->tool_id || claims.tool_version != expected->tool_version)
            return ValidationResult::fail(
                TokenError::ToolBindingMismatch,
                "token bound to (" + claims.tool_id + ", " + claims.tool_version +
                    "), expected (" + expected->tool_id + ", " + expected->tool_version + ")");
    }

    // (e) revocation
    if (rl.contains(claims.jti))
        return ValidationResult::fail(TokenError::Revoked, "token id '" + claims.jti + "' is revoked");

    return ValidationResult::ok(std::move(claims));
}

bool scope_covers(const std::string& token_scope, const std::string& needed) {
    const std::vector<std::string> t = split_scope(token_scope);
    const std::vector<std::string> n = split_scope(needed);
    const bool t_wild = is_wildcard(t);
    const bool n_wild = is_wildcard(n);
    if (!t_wild) {
        // An exact grant covers exactly itself; it can never cover a
        // wildcard need (which stands for unboundedly many scopes).
        return !n_wild && t == n;
    }
    const std::size_t t_prefix = t.size() - 1;
    if (!n_wild) {
        if (n.size() < t_prefix + 1) return false;
        for (std::size_t i = 0; i < t_prefix; ++i)
            if (t[i] != n[i]) return false;
        return true;
    }
    // wildcard covers wildcard iff the grant's prefix is a prefix of the
    // need's prefix
    const std::size_t n_prefix = n.size() - 1;
    if (t_prefix > n_prefix) return false;
    for (std::size_t i = 0; i < t_prefix; ++i)
        if (t[i] != n[i]) return false;
    return true;
}

AdherenceResult check_scope_adherence(const std::set<std::string>& action_scopes,
                                      const std::set<std::string>& token_scopes) {
    // Validate every scope up front so malformed input fails loudly even
    // when it would not have affected the decision.
    for (const auto& s : action_scopes) split_scope(s);
    for (const auto& s : token_scopes) split_scope(s);
    AdherenceResult result;
    for (const auto& needed : action_scopes) {
        bool covered = false;
        for (const auto& have : token_scopes) {
            if (scope_covers(have, needed)) {
                covered = true;
                break;
            }
        }
        if (!covered) result.missing.push_back(needed);
    }
    result.passed = result.missing.empty();
    if (!result.passed) {
        result.detail = "missing scopes:";
        for (const auto& m : result.missing) result.detail += " " + m;
    }
    return result;
}

AdherenceResult check_caller_entitlements(const ToolDefinition& def,
                                          const std::optional<Claims>& user_claims) {
    if (def.required_caller_entitlements.empty()) {
        AdherenceResult result;
        result.passed = true;
        return result;
    }
    if (!user_claims) {
        AdherenceResult result;
        result.passed = false;
        result.missing.assign(def.required_caller_entitlements.begin(),
                              def.required_caller_entitlements.end());
        result.detail = "tool requires caller entitlements but no user token was presented";
        return result;
    }
    return check_scope_adherence(def.required_caller_entitlements, user_claims->scopes);
}

const char* to_string(TokenError e) {
    switch (e) {
        case TokenError::UntrustedIssuer: return "UNTRUSTED_ISSUER";
        case TokenError::BadSignature: return "BAD_SIGNATURE";
        case TokenError::Expired: return "EXPIRED";
        case TokenError::ToolBindingMismatch: return "TOOL_BINDING_MISMATCH";
        case TokenError::Revoked: return "REVOKED";
    }
    return "UNKNOWN";
}

}  // namespace etdi::token
