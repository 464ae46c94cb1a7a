#include <doctest.h>

#include <algorithm>

#include "etdi/errors.hpp"
#include "etdi/policy.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

using namespace etdi;
using policy::AuthorizationRequest;
using policy::Condition;
using policy::Effect;
using policy::PolicyDocument;
using policy::PolicyRule;
using policy::PolicyStore;
using policy::SignedPolicyDocument;

namespace {

PolicyRule rule(std::string id, Effect effect, std::string principal, std::string action,
                std::string resource, std::optional<Json> condition = std::nullopt) {
    PolicyRule r;
    r.rule_id = std::move(id);
    r.effect = effect;
    r.principal_matcher = std::move(principal);
    r.action_matcher = std::move(action);
    r.resource_matcher = std::move(resource);
    if (condition) r.condition = Condition::from_json(*condition, /*strict=*/false);
    return r;
}

PolicyDocument document(std::string store_id, SemVer version, std::vector<PolicyRule> rules) {
    PolicyDocument doc;
    doc.policy_store_id = std::move(store_id);
    doc.version = version;
    doc.author_provider_id = "policy-author";
    doc.rules = std::move(rules);
    return doc;
}

AuthorizationRequest request(std::string principal, std::string action, std::string resource,
                             Json context = Json::object()) {
    return AuthorizationRequest{std::move(principal), std::move(action), std::move(resource),
                                std::move(context)};
}

struct SignedFixture {
    crypto::KeyPair author = crypto::keypair_from_seed_phrase("pol-key", "policy-tests");
    crypto::TrustStore trust;
    SignedFixture() {
        trust = trust.with_provider_key(
            "policy-author", crypto::TrustedKey{author.key_id, author.algorithm,
                                                author.public_key, crypto::KeyStatus::Active});
    }
    PolicyStore load(std::vector<PolicyDocument> docs, policy::LoadReport* report = nullptr) {
        std::vector<SignedPolicyDocument> signed_docs;
        for (auto& d : docs) signed_docs.push_back(policy::sign_policy(d, author));
        return policy::load_policy_store(signed_docs, trust, report);
    }
};

// Random policy documents for the property suite. Requests draw from the
// same small vocabularies so matches actually occur.
const std::vector<std::string> kPrincipals = {"acme::tool.a@1.0.0", "acme::tool.b@1.0.0",
                                              "globex::tool.a@2.1.0"};
const std::vector<std::string> kActions = {"Tool::Invoke", "Tool::Read", "Tool::Write"};
const std::vector<std::string> kResources = {"UserDocs::Public::readme",
                                             "UserDocs::Private::taxes", "Mail::Outbox"};

std::string random_matcher(testutil::Rng& rng, const std::vector<std::string>& pool) {
    const std::string& value = testutil::pick(rng, pool);
    switch (testutil::rand_int(rng, 0, 3)) {
        case 0: return "*";
        case 1: return value;
        case 2: return value.substr(0, testutil::rand_int(rng, 1, (std::int64_t)value.size())) + "*";
        default: return testutil::coin(rng) ? value : testutil::random_word(rng);  // often no match
    }
}

PolicyRule random_rule(testutil::Rng& rng, int index) {
    PolicyRule r;
    r.rule_id = "r" + std::to_string(index);
    r.effect = testutil::coin(rng, 0.7) ? Effect::Permit : Effect::Forbid;
    r.principal_matcher = random_matcher(rng, kPrincipals);
    r.action_matcher = random_matcher(rng, kActions);
    r.resource_matcher = random_matcher(rng, kResources);
    if (testutil::coin(rng, 0.4))
        r.condition = Condition::from_json(oracle::random_condition(rng), /*strict=*/false);
    return r;
}

PolicyDocument random_document(testutil::Rng& rng, const std::string& store_id) {
    PolicyDocument doc;
    doc.policy_store_id = store_id;
    doc.version = {testutil::rand_int(rng, 0, 3), testutil::rand_int(rng, 0, 3), 0};
    doc.author_provider_id = "policy-author";
    const std::int64_t n = testutil::rand_int(rng, 0, 6);
    for (std::int64_t i = 0; i < n; ++i) doc.rules.push_back(random_rule(rng, (int)i));
    return doc;
}

AuthorizationRequest random_request(testutil::Rng& rng) {
    return request(testutil::pick(rng, kPrincipals), testutil::pick(rng, kActions),
                   testutil::pick(rng, kResources), oracle::random_context(rng));
}

}  // namespace

TEST_CASE("conditions parse from and serialize to the documented array form") {
    const Json expr = Json::parse(R"(["and",["eq","user.id","u1"],["lt","request.time",1700000000]])");
    const Condition cond = Condition::from_json(expr, /*strict=*/true);
    CHECK(cond.to_json() == expr);

    CHECK(policy::eval_condition(
        cond, Json{{"user", Json{{"id", "u1"}}}, {"request", Json{{"time", 5}}}}));
    CHECK_FALSE(policy::eval_condition(
        cond, Json{{"user", Json{{"id", "u2"}}}, {"request", Json{{"time", 5}}}}));
}

TEST_CASE("condition parsing rejects malformed trees") {
    for (const char* bad : {
             R"(["frobnicate","a",1])",          // unknown operator
             R"([])",                            // empty
             R"(["not"])",                       // missing operand
             R"(["not",["eq","a",1],["eq","b",2]])",  // too many operands
             R"(["and"])",                       // no operands
             R"(["eq","a"])",                    // missing literal
             R"(["eq","a",1,2])",                // too many parts
             R"(["eq","",1])",                   // empty attribute
             R"(["eq","a",[1,2]])",              // non-scalar literal
             R"(["in","a","not-an-array"])",
             R"(42)",
         }) {
        CAPTURE(bad);
        CHECK_THROWS_AS(Condition::from_json(Json::parse(bad), false), InvalidPolicy);
    }
}

TEST_CASE("strict parsing rejects statically visible type errors, lenient defers them") {
    const Json ordered_text = Json::parse(R"(["lt","request.time","high"])");
    CHECK_THROWS_AS(Condition::from_json(ordered_text, true), InvalidPolicy);
    const Condition lenient = Condition::from_json(ordered_text, false);
    CHECK_THROWS_AS(policy::eval_condition(lenient, Json{{"request", Json{{"time", 3}}}}),
                    ConditionTypeError);

    const Json mixed_in = Json::parse(R"(["in","user.id",["u1",7]])");
    CHECK_THROWS_AS(Condition::from_json(mixed_in, true), InvalidPolicy);
    CHECK_NOTHROW(Condition::from_json(mixed_in, false));
}

TEST_CASE("condition evaluation agrees with the recursive oracle on 10000 random trees") {
    testutil::Rng rng(0xc0de);
    int agreements = 0;
    for (int i = 0; i < 10000; ++i) {
        const Json tree = oracle::random_condition(rng);
        const Json context = oracle::random_context(rng);
        const Condition cond = Condition::from_json(tree, /*strict=*/false);
        REQUIRE(cond.to_json() == tree);  // serialization is faithful

        const std::optional<bool> expected = oracle::eval_condition(tree, context);
        CAPTURE(tree.dump());
        CAPTURE(context.dump());
        if (expected) {
            const bool got = policy::eval_condition(cond, context);
            CHECK(got == *expected);
            if (got == *expected) ++agreements;
        } else {
            CHECK_THROWS_AS(policy::eval_condition(cond, context), ConditionTypeError);
            ++agreements;
        }
    }
    CHECK(agreements == 10000);
}

TEST_CASE("type errors dominate combinators even alongside deciding branches") {
    // or(true, error) must error, not settle for true
    const Json tree = Json::parse(R"(["or",["eq","flag",true],["lt","user.level","x"]])");
    const Condition cond = Condition::from_json(tree, false);
    const Json ctx = Json{{"flag", true}, {"user", Json{{"level", 3}}}};
    CHECK_THROWS_AS(policy::eval_condition(cond, ctx), ConditionTypeError);
    // and(false, error) likewise
    const Json tree2 = Json::parse(R"(["and",["eq","flag",false],["gt","user.level","x"]])");
    CHECK_THROWS_AS(
        policy::eval_condition(Condition::from_json(tree2, false), ctx),
        ConditionTypeError);
}

TEST_CASE("missing attributes make comparisons false rather than erroring") {
    const Condition cond = Condition::from_json(Json::parse(R"(["eq","nowhere.at.all","x"])"), true);
    CHECK_FALSE(policy::eval_condition(cond, Json::object()));
    const Condition neg = Condition::from_json(Json::parse(R"(["not",["eq","nowhere","x"]])"), true);
    CHECK(policy::eval_condition(neg, Json::object()));
}

TEST_CASE("exact top-level keys win over dotted-path descent") {
    const Condition cond = Condition::from_json(Json::parse(R"(["eq","user.id","flat"])"), true);
    Json ctx;
    ctx["user.id"] = "flat";
    ctx["user"] = Json{{"id", "nested"}};
    CHECK(policy::eval_condition(cond, ctx));
}

TEST_CASE("policy patterns are prefix matchers only with a trailing star") {
    CHECK(policy::pattern_matches("*", "anything"));
    CHECK(policy::pattern_matches("UserDocs::*", "UserDocs::Private::taxes"));
    CHECK(policy::pattern_matches("abc", "abc"));
    CHECK_FALSE(policy::pattern_matches("abc", "abcd"));
    CHECK_FALSE(policy::pattern_matches("UserDocs::*", "Mail::Outbox"));
    CHECK_FALSE(policy::pattern_matches("a*c", "abc"));  // star only counts at the end
}

TEST_CASE("policy documents round-trip and reject duplicate rule ids") {
    PolicyDocument doc = document("store-1", {1, 2, 3},
                                  {rule("allow", Effect::Permit, "*", "*", "*"),
                                   rule("deny-private", Effect::Forbid, "*", "*",
                                        "UserDocs::Private::*",
                                        Json::parse(R"(["eq","user.id","u1"])"))});
    const PolicyDocument back = PolicyDocument::from_json(doc.to_json(), true);
    CHECK(canonical_dump(back.to_json()) == canonical_dump(doc.to_json()));

    Json dup = doc.to_json();
    dup["rules"].push_back(dup["rules"][0]);
    CHECK_THROWS_AS(PolicyDocument::from_json(dup, true), InvalidPolicy);

    Json bad_effect = doc.to_json();
    bad_effect["rules"][0]["effect"] = "MAYBE";
    CHECK_THROWS_AS(PolicyDocument::from_json(bad_effect, true), InvalidPolicy);
}

TEST_CASE("signing a policy document protects every byte of it") {
    SignedFixture fx;
    const PolicyDocument doc =
        document("store-1", {1, 0, 0}, {rule("r1", Effect::Permit, "*", "*", "*")});
    SignedPolicyDocument sd = policy::sign_policy(doc, fx.author);
    CHECK(policy::verify_signed_policy(sd, fx.trust).verified);

    SignedPolicyDocument tampered = sd;
    tampered.document.rules[0].resource_matcher = "UserDocs::*";
    CHECK_FALSE(policy::verify_signed_policy(tampered, fx.trust).verified);

    const SignedPolicyDocument back = SignedPolicyDocument::from_json(sd.to_json(), true);
    CHECK(policy::verify_signed_policy(back, fx.trust).verified);
}

TEST_CASE("listing-2 shaped denial: private resources forbidden despite a permit") {
    SignedFixture fx;
    const PolicyStore store = fx.load({document(
        "store-1", {1, 0, 0},
        {rule("permit-all-tools", Effect::Permit, "acme::*", "Tool::Invoke", "*"),
         rule("forbid-private", Effect::Forbid, "*", "*", "UserDocs::Private::*")})});

    const auto ok = store.is_authorized(
        request("acme::tool.a@1.0.0", "Tool::Invoke", "UserDocs::Public::readme"));
    CHECK(ok.allowed);
    CHECK(ok.determining_rules == std::vector<std::string>{"permit-all-tools"});

    const auto denied = store.is_authorized(
        request("acme::tool.a@1.0.0", "Tool::Invoke", "UserDocs::Private::taxes"));
    CHECK_FALSE(denied.allowed);
    CHECK(std::count(denied.determining_rules.begin(), denied.determining_rules.end(),
                     "forbid-private") == 1);
    CHECK(denied.reason.find("FORBID") != std::string::npos);
}

TEST_CASE("decisions agree with the truth-table oracle on 1200 random store/request pairs") {
    testutil::Rng rng(0x9011c4);
    SignedFixture fx;
    for (int i = 0; i < 1200; ++i) {
        std::vector<PolicyDocument> docs;
        const std::int64_t ndocs = testutil::rand_int(rng, 1, 2);
        for (std::int64_t d = 0; d < ndocs; ++d)
            docs.push_back(random_document(rng, "store-" + std::to_string(d)));
        bool any_rules = false;
        for (const auto& d : docs) any_rules |= !d.rules.empty();
        if (!any_rules) continue;  // EmptyStore only triggers on zero docs, not zero rules

        const PolicyStore store = fx.load(docs);
        const AuthorizationRequest req = random_request(rng);
        const auto decision = store.is_authorized(req);
        const auto expected = oracle::policy_decision(docs, req);
        CAPTURE(i);
        CHECK(decision.allowed == expected.allowed);
        CHECK(decision.determining_rules == expected.determining_rules);
    }
}

TEST_CASE("default deny, forbid dominance, permit monotonicity, order irrelevance") {
    testutil::Rng rng(0x9509);
    SignedFixture fx;
    int checked = 0;
    for (int i = 0; i < 400; ++i) {
        PolicyDocument doc = random_document(rng, "store-p");
        const AuthorizationRequest req = random_request(rng);

        // default deny: a store whose rules cannot match this principal
        PolicyDocument unmatched = doc;
        for (auto& r : unmatched.rules) r.principal_matcher = "never::matches";
        if (!unmatched.rules.empty()) {
            const auto d = fx.load({unmatched}).is_authorized(req);
            CHECK_FALSE(d.allowed);
            CHECK(d.reason.find("default deny") != std::string::npos);
        }

        // forbid dominance: adding a matching FORBID always denies
        PolicyDocument with_forbid = doc;
        with_forbid.rules.push_back(rule("omega-forbid", Effect::Forbid, "*", "*", "*"));
        CHECK_FALSE(fx.load({with_forbid}).is_authorized(req).allowed);

        // permit monotonicity on forbid-free stores: adding a permit never
        // turns an allow into a deny
        PolicyDocument no_forbid = doc;
        no_forbid.rules.erase(
            std::remove_if(no_forbid.rules.begin(), no_forbid.rules.end(),
                           [](const PolicyRule& r) { return r.effect == Effect::Forbid; }),
            no_forbid.rules.end());
        if (!no_forbid.rules.empty()) {
            const bool before = fx.load({no_forbid}).is_authorized(req).allowed;
            PolicyDocument grown = no_forbid;
            grown.rules.push_back(rule("omega-permit", Effect::Permit, "*", "*", "*"));
            const bool after = fx.load({grown}).is_authorized(req).allowed;
            CHECK(after);
            if (before) CHECK(after);  // monotone: no allow is ever lost
        }

        // rule order irrelevance
        if (doc.rules.size() > 1) {
            PolicyDocument shuffled = doc;
            std::shuffle(shuffled.rules.begin(), shuffled.rules.end(), rng);
            const auto a = fx.load({doc}).is_authorized(req);
            const auto b = fx.load({shuffled}).is_authorized(req);
            CHECK(a.allowed == b.allowed);
            auto sa = a.determining_rules, sb = b.determining_rules;
            std::sort(sa.begin(), sa.end());
            std::sort(sb.begin(), sb.end());
            CHECK(sa == sb);
        }
        ++checked;
    }
    CHECK(checked == 400);
}

TEST_CASE("condition type errors surface in the reason but do not crash decisions") {
    SignedFixture fx;
    const PolicyStore store = fx.load({document(
        "store-1", {1, 0, 0},
        {rule("broken", Effect::Permit, "*", "*", "*",
              Json::parse(R"(["lt","user.level","not-a-number"])"))})});
    const auto decision = store.is_authorized(
        request("acme::tool.a@1.0.0", "Tool::Invoke", "Mail::Outbox",
                Json{{"user", Json{{"level", 3}}}}));
    CHECK_FALSE(decision.allowed);
    CHECK(decision.determining_rules.empty());
    CHECK(decision.reason.find("broken") != std::string::npos);
}

TEST_CASE("loading verifies signatures and resolves version contests") {
    SignedFixture fx;
    const PolicyDocument v1 =
        document("store-a", {1, 0, 0}, {rule("r-old", Effect::Permit, "*", "*", "*")});
    const PolicyDocument v2 =
        document("store-a", {1, 1, 0}, {rule("r-new", Effect::Permit, "*", "*", "*")});
    const PolicyDocument other =
        document("store-b", {0, 1, 0}, {rule("r-b", Effect::Forbid, "x", "y", "z")});

    auto sd_v1 = policy::sign_policy(v1, fx.author);
    auto sd_v2 = policy::sign_policy(v2, fx.author);
    auto sd_other = policy::sign_policy(other, fx.author);
    auto sd_tampered = policy::sign_policy(other, fx.author);
    sd_tampered.document.policy_store_id = "store-evil";

    policy::LoadReport report;
    const PolicyStore store = policy::load_policy_store(
        {sd_v1, sd_v2, sd_other, sd_tampered}, fx.trust, &report);
    const std::vector<std::string> expected_loaded = {"store-a", "store-b"};
    CHECK(report.loaded == expected_loaded);
    REQUIRE(report.superseded.size() == 1);
    CHECK(report.superseded[0].policy_store_id == "store-a");
    REQUIRE(report.rejected.size() == 1);
    CHECK(report.rejected[0].policy_store_id == "store-evil");

    REQUIRE(store.documents().size() == 2);
    CHECK(store.documents()[0].version == SemVer{1, 1, 0});  // higher version won
    // order of presentation does not matter for the contest
    policy::LoadReport report2;
    const PolicyStore store2 =
        policy::load_policy_store({sd_v2, sd_v1, sd_other}, fx.trust, &report2);
    CHECK(store2.documents()[0].version == SemVer{1, 1, 0});
    CHECK(report2.superseded.size() == 1);
}

TEST_CASE("an empty load is an error, not a silently deny-everything store") {
    SignedFixture fx;
    CHECK_THROWS_AS(policy::load_policy_store({}, fx.trust, nullptr), EmptyStore);
    auto sd = policy::sign_policy(
        document("store-a", {1, 0, 0}, {rule("r", Effect::Permit, "*", "*", "*")}), fx.author);
    sd.document.version = {9, 9, 9};  // break the signature
    CHECK_THROWS_AS(policy::load_policy_store({sd}, fx.trust, nullptr), EmptyStore);
}

TEST_CASE("store-scoped evaluation ignores other documents") {
    SignedFixture fx;
    const PolicyStore store =
        fx.load({document("permits", {1, 0, 0}, {rule("p", Effect::Permit, "*", "*", "*")}),
                 document("forbids", {1, 0, 0}, {rule("f", Effect::Forbid, "*", "*", "*")})});
    const auto req = request("acme::tool.a@1.0.0", "Tool::Invoke", "Mail::Outbox");
    CHECK_FALSE(store.is_authorized(req).allowed);               // forbid dominates globally
    CHECK(store.is_authorized(req, std::string("permits")).allowed);
    CHECK_FALSE(store.is_authorized(req, std::string("forbids")).allowed);
    CHECK_FALSE(store.is_authorized(req, std::string("missing-store")).allowed);  // empty => deny
}
