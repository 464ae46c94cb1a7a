#include <doctest.h>

#include "etdi/errors.hpp"
#include "etdi/token.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace etdi;
using crypto::KeyPair;
using crypto::TrustStore;
using token::Binding;
using token::Claims;
using token::RevocationList;
using token::TokenError;
using token::ToolToken;

namespace {

struct Fixture {
    KeyPair idp = crypto::keypair_from_seed_phrase("idp-key", "token-tests");
    TrustStore trust;
    RevocationList revoked;

    Fixture() {
        trust = trust.with_issuer_key(
            "issuer-1", crypto::TrustedKey{idp.key_id, idp.algorithm, idp.public_key,
                                           crypto::KeyStatus::Active});
    }

    Claims claims() const {
        Claims c;
        c.iss = "issuer-1";
        c.sub = "user-7";
        c.iat = 100;
        c.exp = 200;
        c.tool_id = "tool.a";
        c.tool_version = "1.0.0";
        c.scopes = {"fs:read:*"};
        c.jti = "jti-1";
        return c;
    }

    std::string mint() const { return token::issue_token(idp, claims()).serialize(); }
};

}  // namespace

TEST_CASE("tokens are three base64url segments with an EdDSA header") {
    Fixture fx;
    const std::string compact = fx.mint();
    const ToolToken parts = ToolToken::parse(compact);
    CHECK(compact == parts.serialize());

    const auto header_bytes = base64url_decode(parts.header_b64);
    const Json header = Json::parse(std::string(header_bytes.begin(), header_bytes.end()));
    CHECK(header.at("alg") == "EdDSA");
    CHECK(header.at("kid") == fx.idp.key_id);
    CHECK(header.size() == 2);

    const auto payload_bytes = base64url_decode(parts.payload_b64);
    const Claims decoded =
        Claims::from_json(Json::parse(std::string(payload_bytes.begin(), payload_bytes.end())));
    CHECK(decoded == fx.claims());
    CHECK(compact.find('=') == std::string::npos);  // unpadded

    CHECK_THROWS_AS(ToolToken::parse("onlyonesegment"), EncodingError);
    CHECK_THROWS_AS(ToolToken::parse("a.b"), EncodingError);
    CHECK_THROWS_AS(ToolToken::parse("a.b.c.d"), EncodingError);
}

TEST_CASE("claims round-trip through json and reject bad shapes") {
    Fixture fx;
    const Claims c = fx.claims();
    CHECK(Claims::from_json(c.to_json()) == c);
    Json doc = c.to_json();
    doc["unknown"] = 1;
    CHECK_THROWS_AS(Claims::from_json(doc), EncodingError);
    Json missing = c.to_json();
    missing.erase("jti");
    CHECK_THROWS_AS(Claims::from_json(missing), EncodingError);
}

TEST_CASE("minting validates the claim set") {
    Fixture fx;
    auto c = fx.claims();
    c.exp = c.iat - 1;
    CHECK_THROWS_AS(token::issue_token(fx.idp, c), InvalidClaims);
    c = fx.claims();
    c.iss = "";
    CHECK_THROWS_AS(token::issue_token(fx.idp, c), InvalidClaims);
    c = fx.claims();
    c.jti = "";
    CHECK_THROWS_AS(token::issue_token(fx.idp, c), InvalidClaims);
}

TEST_CASE("a valid token validates and returns its claims") {
    Fixture fx;
    const auto vr = token::validate_token(fx.mint(), fx.trust,
                                          Binding{"tool.a", "1.0.0"}, 150, fx.revoked);
    REQUIRE(vr.valid);
    CHECK(*vr.claims == fx.claims());
}

TEST_CASE("five-way failure independence") {
    // Each protection is perturbed alone, starting from the same valid
    // baseline; each must fail with its own error.
    Fixture fx;
    const std::string compact = fx.mint();
    const Binding binding{"tool.a", "1.0.0"};

    SUBCASE("issuer trust") {
        const auto vr =
            token::validate_token(compact, TrustStore(), binding, 150, fx.revoked);
        CHECK_FALSE(vr.valid);
        CHECK(vr.error == TokenError::UntrustedIssuer);
    }
    SUBCASE("signature") {
        auto parts = ToolToken::parse(compact);
        auto sig = base64url_decode(parts.signature_b64);
        sig[8] ^= 1;
        parts.signature_b64 = base64url_encode(sig.data(), sig.size());
        const auto vr =
            token::validate_token(parts.serialize(), fx.trust, binding, 150, fx.revoked);
        CHECK_FALSE(vr.valid);
        CHECK(vr.error == TokenError::BadSignature);
    }
    SUBCASE("expiry") {
        const auto vr = token::validate_token(compact, fx.trust, binding, 250, fx.revoked);
        CHECK_FALSE(vr.valid);
        CHECK(vr.error == TokenError::Expired);
    }
    SUBCASE("binding") {
        const auto vr = token::validate_token(compact, fx.trust, Binding{"tool.b", "1.0.0"},
                                              150, fx.revoked);
        CHECK_FALSE(vr.valid);
        CHECK(vr.error == TokenError::ToolBindingMismatch);
    }
    SUBCASE("revocation") {
        RevocationList rl;
        rl.add("jti-1");
        const auto vr = token::validate_token(compact, fx.trust, binding, 150, rl);
        CHECK_FALSE(vr.valid);
        CHECK(vr.error == TokenError::Revoked);
    }
}

TEST_CASE("expiry is exclusive: the token dies exactly at exp") {
    Fixture fx;
    const std::string compact = fx.mint();
    CHECK(token::validate_token(compact, fx.trust, std::nullopt, 199, fx.revoked).valid);
    const auto at_exp = token::validate_token(compact, fx.trust, std::nullopt, 200, fx.revoked);
    CHECK_FALSE(at_exp.valid);
    CHECK(at_exp.error == TokenError::Expired);
}

TEST_CASE("binding mismatches cover both the other-tool and other-version replays") {
    Fixture fx;
    const std::string compact = fx.mint();
    const auto cross_tool = token::validate_token(compact, fx.trust, Binding{"tool.b", "1.0.0"},
                                                  150, fx.revoked);
    CHECK(cross_tool.error == TokenError::ToolBindingMismatch);
    const auto cross_version = token::validate_token(
        compact, fx.trust, Binding{"tool.a", "1.1.0"}, 150, fx.revoked);
    CHECK(cross_version.error == TokenError::ToolBindingMismatch);
    // no expected binding given -> the same token is fine
    CHECK(token::validate_token(compact, fx.trust, std::nullopt, 150, fx.revoked).valid);
}

TEST_CASE("validation failures follow the pinned order") {
    Fixture fx;
    SUBCASE("issuer trust precedes signature") {
        auto parts = ToolToken::parse(fx.mint());
        auto sig = base64url_decode(parts.signature_b64);
        sig[0] ^= 1;
        parts.signature_b64 = base64url_encode(sig.data(), sig.size());
        const auto vr = token::validate_token(parts.serialize(), TrustStore(), std::nullopt,
                                              150, fx.revoked);
        CHECK(vr.error == TokenError::UntrustedIssuer);
    }
    SUBCASE("signature precedes expiry") {
        auto parts = ToolToken::parse(fx.mint());
        auto sig = base64url_decode(parts.signature_b64);
        sig[0] ^= 1;
        parts.signature_b64 = base64url_encode(sig.data(), sig.size());
        const auto vr =
            token::validate_token(parts.serialize(), fx.trust, std::nullopt, 999, fx.revoked);
        CHECK(vr.error == TokenError::BadSignature);
    }
    SUBCASE("expiry precedes binding and revocation") {
        RevocationList rl;
        rl.add("jti-1");
        const auto vr =
            token::validate_token(fx.mint(), fx.trust, Binding{"other", "9.9.9"}, 999, rl);
        CHECK(vr.error == TokenError::Expired);
    }
    SUBCASE("binding precedes revocation") {
        RevocationList rl;
        rl.add("jti-1");
        const auto vr =
            token::validate_token(fx.mint(), fx.trust, Binding{"other", "9.9.9"}, 150, rl);
        CHECK(vr.error == TokenError::ToolBindingMismatch);
    }
}

TEST_CASE("malformed tokens report BAD_SIGNATURE with a malformed detail") {
    Fixture fx;
    for (const std::string bad : {"", "abc", "a.b", "!.!.!", "a.b.c.d",
                                  "####.####.####"}) {
        const auto vr = token::validate_token(bad, fx.trust, std::nullopt, 150, fx.revoked);
        CHECK_FALSE(vr.valid);
        CHECK(vr.error == TokenError::BadSignature);
        CHECK(vr.detail.find("malformed token") != std::string::npos);
    }
    // a structurally fine token whose payload is not claims-shaped
    const std::string junk_payload =
        base64url_encode(std::string("{\"iss\":42}"));
    auto parts = ToolToken::parse(fx.mint());
    parts.payload_b64 = junk_payload;
    const auto vr =
        token::validate_token(parts.serialize(), fx.trust, std::nullopt, 150, fx.revoked);
    CHECK_FALSE(vr.valid);
    CHECK(vr.error == TokenError::BadSignature);
}

TEST_CASE("scope wildcard matching agrees with the regex oracle") {
    testutil::Rng rng(0x5c07e);
    int cases = 0;
    for (int i = 0; i < 6000; ++i) {
        const std::string grant = testutil::random_scope(rng);
        const std::string need = testutil::random_scope(rng);
        REQUIRE(oracle::scope_well_formed(grant));
        REQUIRE(oracle::scope_well_formed(need));
        CAPTURE(grant);
        CAPTURE(need);
        CHECK(token::scope_covers(grant, need) == oracle::scope_covers(grant, need));
        ++cases;
    }
    CHECK(cases == 6000);
}

TEST_CASE("scope covering pins the documented examples") {
    CHECK(token::scope_covers("fs:read:*", "fs:read:documents"));
    CHECK(token::scope_covers("fs:read:*", "fs:read:documents:private"));
    CHECK_FALSE(token::scope_covers("fs:read:*", "fs:read"));        // needs a tail segment
    CHECK_FALSE(token::scope_covers("fs:read:*", "fs:write:docs"));
    CHECK(token::scope_covers("fs:*", "fs:read:*"));                 // wildcard over wildcard
    CHECK_FALSE(token::scope_covers("fs:read:*", "fs:*"));           // narrower cannot cover wider
    CHECK(token::scope_covers("a:b", "a:b"));
    CHECK_FALSE(token::scope_covers("a:b", "a:b:*"));                // exact never covers wildcard
    CHECK(token::scope_covers("*", "anything:at:all"));
}

TEST_CASE("malformed scopes throw instead of silently failing") {
    for (const std::string bad : {"", ":", "a:", ":a", "a::b", "a:*:b", "ab*", "*x", "a:b*"}) {
        CAPTURE(bad);
        CHECK_FALSE(oracle::scope_well_formed(bad));
        CHECK_THROWS_AS(token::scope_covers(bad, "a:b"), MalformedScope);
    }
    CHECK_THROWS_AS(token::check_scope_adherence({"ok:scope"}, {"bad::scope"}), MalformedScope);
}

TEST_CASE("scope adherence lists exactly the uncovered scopes") {
    testutil::Rng rng(0xad4e4e);
    for (int i = 0; i < 800; ++i) {
        std::set<std::string> needed, granted;
        for (int k = testutil::rand_int(rng, 0, 3); k > 0; --k) needed.insert(testutil::random_scope(rng));
        for (int k = testutil::rand_int(rng, 0, 3); k > 0; --k) granted.insert(testutil::random_scope(rng));
        const auto result = token::check_scope_adherence(needed, granted);
        std::vector<std::string> expected_missing;
        for (const auto& need : needed) {
            bool covered = false;
            for (const auto& have : granted)
                if (oracle::scope_covers(have, need)) covered = true;
            if (!covered) expected_missing.push_back(need);
        }
        CAPTURE(i);
        CHECK(result.passed == expected_missing.empty());
        CHECK(result.missing == expected_missing);
    }
}

TEST_CASE("caller entitlements are enforced only when the definition asks") {
    Fixture fx;
    auto def = testutil::make_definition();
    def.required_caller_entitlements = {};
    CHECK(token::check_caller_entitlements(def, std::nullopt).passed);

    def.required_caller_entitlements = {"mail:send"};
    const auto absent = token::check_caller_entitlements(def, std::nullopt);
    CHECK_FALSE(absent.passed);
    CHECK(absent.missing == std::vector<std::string>{"mail:send"});

    auto user = fx.claims();
    user.scopes = {"mail:*"};
    CHECK(token::check_caller_entitlements(def, user).passed);
    user.scopes = {"files:read"};
    CHECK_FALSE(token::check_caller_entitlements(def, user).passed);
}

TEST_CASE("the revocation list round-trips through its file format") {
    RevocationList rl;
    rl.add("jti-b");
    rl.add("jti-a");
    rl.add("jti-b");  // set semantics
    CHECK(rl.size() == 2);
    const std::string text = rl.dump();
    const RevocationList back = RevocationList::parse(text);
    CHECK(back.contains("jti-a"));
    CHECK(back.contains("jti-b"));
    CHECK_FALSE(back.contains("jti-c"));
    CHECK(back.dump() == text);

    testutil::TempDir dir;
    rl.save_file(dir.file("revoked.txt"));
    CHECK(RevocationList::load_file(dir.file("revoked.txt")).dump() == text);
    CHECK_THROWS_AS(RevocationList::load_file(dir.file("nope.txt")), StoreIOError);
}

TEST_CASE("issuing is deterministic for identical claims") {
    Fixture fx;
    CHECK(fx.mint() == fx.mint());
}
