#include <doctest.h>

#include <map>

#include "etdi/approval.hpp"
#include "etdi/errors.hpp"

#include "helpers.hpp"

using namespace etdi;
using approval::ApprovalRecord;
using approval::ApprovalStore;
using approval::Outcome;
using crypto::KeyPair;
using crypto::TrustStore;

namespace {

struct Fixture {
    KeyPair key = crypto::keypair_from_seed_phrase("appr-key", "approval-tests");
    TrustStore trust;
    ApprovalStore store;

    Fixture() {
        trust = trust.with_provider_key(
            "demo-provider", crypto::TrustedKey{key.key_id, key.algorithm, key.public_key,
                                                crypto::KeyStatus::Active});
    }
    crypto::SignedToolDefinition signed_def(const ToolDefinition& def) const {
        return crypto::sign_definition(def, key);
    }
};

}  // namespace

TEST_CASE("a signed but never-approved tool needs first approval") {
    Fixture fx;
    const auto sd = fx.signed_def(testutil::make_definition());
    const auto outcome = approval::evaluate_tool(sd, fx.trust, fx.store);
    CHECK(outcome.outcome == Outcome::NeedsApprovalNewTool);
    CHECK_FALSE(outcome.approved.has_value());
}

TEST_CASE("approval then identical re-presentation is allowed silently") {
    Fixture fx;
    const auto sd = fx.signed_def(testutil::make_definition());
    approval::record_approval(sd, sd.definition.permissions, fx.store, 7);
    const auto outcome = approval::evaluate_tool(sd, fx.trust, fx.store);
    CHECK(outcome.outcome == Outcome::AllowedExisting);
    REQUIRE(outcome.approved.has_value());
    CHECK(outcome.approved->approved_at == 7);
    CHECK(outcome.approved->content_hash.hex == content_hash(sd.definition).hex);
}

TEST_CASE("an unverifiable envelope is rejected before any store lookup") {
    Fixture fx;
    auto sd = fx.signed_def(testutil::make_definition());
    sd.signature[3] ^= 1;
    const auto outcome = approval::evaluate_tool(sd, fx.trust, fx.store);
    CHECK(outcome.outcome == Outcome::RejectedSignature);
    REQUIRE(outcome.crypto_failure.has_value());
    CHECK(*outcome.crypto_failure == crypto::VerifyFailure::BadSignature);

    // unknown signer: forged identical definition, untrusted key
    const KeyPair rogue = crypto::keypair_from_seed_phrase("rogue", "approval-tests-2");
    const auto forged = crypto::sign_definition(testutil::make_definition(), rogue);
    const auto forged_outcome = approval::evaluate_tool(forged, fx.trust, fx.store);
    CHECK(forged_outcome.outcome == Outcome::RejectedSignature);
    CHECK(*forged_outcome.crypto_failure == crypto::VerifyFailure::UnknownKey);
}

TEST_CASE("same version with different content is flagged as tampering") {
    Fixture fx;
    const auto original = testutil::make_definition();
    approval::record_approval(fx.signed_def(original), original.permissions, fx.store, 1);

    auto swapped = original;
    swapped.api_contract_hash = sha256_hex(std::string("silently-changed"));
    const auto outcome = approval::evaluate_tool(fx.signed_def(swapped), fx.trust, fx.store);
    CHECK(outcome.outcome == Outcome::NeedsApprovalTampered);
    REQUIRE(outcome.change_report.has_value());
    CHECK(outcome.change_report->requires_reapproval);
    // The approval snapshot keeps only the content hash, so the report can
    // name the hash movement but not the underlying field.
    bool hash_named = false;
    for (const auto& change : outcome.change_report->changes)
        if (change.field == "content_hash" &&
            change.old_value == etdi::content_hash(original).hex &&
            change.new_value == etdi::content_hash(swapped).hex)
            hash_named = true;
    CHECK(hash_named);
}

TEST_CASE("a version bump needs re-approval and the report names the new scope") {
    Fixture fx;
    const auto v1 = testutil::make_definition();
    approval::record_approval(fx.signed_def(v1), v1.permissions, fx.store, 1);

    auto v2 = v1;
    v2.version = {1, 1, 0};
    v2.permissions.insert("net:fetch:images");
    const auto outcome = approval::evaluate_tool(fx.signed_def(v2), fx.trust, fx.store);
    CHECK(outcome.outcome == Outcome::NeedsApprovalNewVersion);
    REQUIRE(outcome.change_report.has_value());
    bool scope_named = false;
    for (const auto& change : outcome.change_report->changes)
        if (change.field == "permissions")
            for (const auto& added : change.added)
                if (added == "net:fetch:images") scope_named = true;
    CHECK(scope_named);
}

TEST_CASE("an older version than the approved one warns about downgrade") {
    Fixture fx;
    auto v2 = testutil::make_definition();
    v2.version = {2, 0, 0};
    approval::record_approval(fx.signed_def(v2), v2.permissions, fx.store, 1);
    const auto outcome =
        approval::evaluate_tool(fx.signed_def(testutil::make_definition()), fx.trust, fx.store);
    CHECK(outcome.outcome == Outcome::DowngradeWarning);
}

TEST_CASE("grants must be a subset of declared permissions") {
    Fixture fx;
    const auto sd = fx.signed_def(testutil::make_definition());
    CHECK_THROWS_AS(approval::record_approval(sd, {"secret:everything"}, fx.store, 0),
                    etdi::SubsetViolation);
    CHECK(fx.store.history().empty());
    // empty grant set is a valid (most restrictive) approval
    approval::record_approval(sd, {}, fx.store, 0);
    CHECK(fx.store.history().size() == 1);
}

TEST_CASE("a grant that no longer appears in the definition counts as tampering") {
    Fixture fx;
    const auto original = testutil::make_definition();
    approval::record_approval(fx.signed_def(original), original.permissions, fx.store, 1);
    // the store remembers fs:read:documents; the presented definition with
    // the same version silently dropped it
    auto shrunk = original;
    shrunk.permissions.clear();
    const auto outcome = approval::evaluate_tool(fx.signed_def(shrunk), fx.trust, fx.store);
    CHECK(outcome.outcome == Outcome::NeedsApprovalTampered);
}

TEST_CASE("revocation forgets the tool until a fresh approval") {
    Fixture fx;
    const auto sd = fx.signed_def(testutil::make_definition());
    CHECK_THROWS_AS(approval::revoke_approval("demo.tool", fx.store, 2), etdi::NotFound);
    approval::record_approval(sd, sd.definition.permissions, fx.store, 1);
    approval::revoke_approval("demo.tool", fx.store, 2);
    CHECK_FALSE(fx.store.current_approval("demo.tool").has_value());
    CHECK(approval::evaluate_tool(sd, fx.trust, fx.store).outcome ==
          Outcome::NeedsApprovalNewTool);
    // the log keeps the full history including the tombstone
    CHECK(fx.store.history().size() == 2);
    approval::record_approval(sd, sd.definition.permissions, fx.store, 3);
    CHECK(approval::evaluate_tool(sd, fx.trust, fx.store).outcome == Outcome::AllowedExisting);
}

TEST_CASE("the approval store round-trips through jsonl and files") {
    Fixture fx;
    const auto v1 = fx.signed_def(testutil::make_definition());
    approval::record_approval(v1, v1.definition.permissions, fx.store, 1);
    auto d2 = testutil::make_definition("second.tool", {0, 3, 1});
    approval::record_approval(fx.signed_def(d2), {}, fx.store, 2);
    approval::revoke_approval("second.tool", fx.store, 3);

    const std::string text = fx.store.dump_jsonl();
    const ApprovalStore parsed = ApprovalStore::parse_jsonl(text);
    REQUIRE(parsed.history().size() == 3);
    CHECK(parsed.dump_jsonl() == text);
    CHECK(parsed.current_approval("demo.tool").has_value());
    CHECK_FALSE(parsed.current_approval("second.tool").has_value());

    testutil::TempDir dir;
    const std::string path = dir.file("approvals.jsonl");
    fx.store.save_file(path);
    CHECK(ApprovalStore::load_file(path).dump_jsonl() == text);
    ApprovalStore::append_file(path, fx.store.history().front());
    CHECK(ApprovalStore::load_file(path).history().size() == 4);
}

TEST_CASE("current approval replay matches a reference model over random histories") {
    testutil::Rng rng(0xa9901);
    Fixture fx;
    const std::vector<std::string> tools = {"t.one", "t.two", "t.three"};

    // reference: per tool, the live record set since the last tombstone;
    // current = highest version, ties broken by latest approval time
    struct RefRecord {
        SemVer version;
        std::int64_t at;
    };
    std::map<std::string, std::vector<RefRecord>> live;

    std::int64_t t = 0;
    for (int step = 0; step < 1000; ++step) {
        const std::string& tool = testutil::pick(rng, tools);
        ++t;
        if (testutil::coin(rng, 0.25)) {
            const bool exists = !live[tool].empty();
            if (exists) {
                approval::revoke_approval(tool, fx.store, t);
                live[tool].clear();
            } else {
                CHECK_THROWS_AS(approval::revoke_approval(tool, fx.store, t), etdi::NotFound);
            }
        } else {
            const SemVer version{testutil::rand_int(rng, 0, 2), testutil::rand_int(rng, 0, 2), 0};
            auto def = testutil::make_definition(tool, version);
            approval::record_approval(fx.signed_def(def), def.permissions, fx.store, t);
            live[tool].push_back({version, t});
        }
        // compare the replayed current approval against the reference
        for (const auto& probe : tools) {
            const auto current = fx.store.current_approval(probe);
            const auto& records = live[probe];
            if (records.empty()) {
                CHECK_FALSE(current.has_value());
                continue;
            }
            RefRecord best = records.front();
            for (const auto& r : records)
                if (r.version > best.version ||
                    (r.version == best.version && r.at > best.at))
                    best = r;
            REQUIRE(current.has_value());
            CHECK(current->version == best.version);
            CHECK(current->approved_at == best.at);
        }
    }
}
