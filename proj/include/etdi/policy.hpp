#pragma once

#include <optional>
#include <string>
#include <vector>

#include "etdi/crypto.hpp"

namespace etdi::policy {

// Expression tree over context attributes. Serialized as nested arrays:
//   ["and", ["eq","user.id","u1"], ["lt","request.time",1700000000]]
// Comparison literals keep their JSON value so signed documents round-trip
// byte-for-byte.
struct Condition {
    enum class Kind { And, Or, Not, Eq, Neq, Lt, Lte, Gt, Gte, In };

    Kind kind = Kind::Eq;
    std::vector<Condition> children;  // and/or/not
    std::string attribute;            // comparisons: dotted path, e.g. "user.department"
    Json literal;                     // comparisons: scalar; In: array of strings

    Json to_json() const;
    // Shape validation always; `strict` additionally rejects statically
    // detectable type errors (ordered comparison with a non-numeric literal,
    // "in" lists with non-string members). Throws InvalidPolicy.
    static Condition from_json(const Json& doc, bool strict);
};

// Total boolean evaluation: combinators evaluate every child (no
// short-circuit) so type errors dominate; a missing attribute makes the
// enclosing comparison false. Throws ConditionTypeError on a type mismatch.
bool eval_condition(const Condition& expr, const Json& context);

enum class Effect { Permit, Forbid };

const char* to_string(Effect e);

struct PolicyRule {
    std::string rule_id;
    Effect effect = Effect::Permit;
    std::string principal_matcher;  // exact string, or prefix pattern ending '*'
    std::string action_matcher;
    std::string resource_matcher;
    std::optional<Condition> condition;
};

struct PolicyDocument {
    std::string policy_store_id;
    SemVer version;
    std::string author_provider_id;
    std::vector<PolicyRule> rules;

    Json to_json() const;
    static PolicyDocument from_json(const Json& doc, bool strict);  // throws InvalidPolicy
};

// Policy document wrapped in the standard signature envelope.
struct SignedPolicyDocument {
    PolicyDocument document;
    std::string key_id;
    std::string algorithm = crypto::kAlgorithm;
    crypto::Signature signature{};
    ContentHash signed_bytes_hash;

    Json to_json() const;
    static SignedPolicyDocument from_json(const Json& doc, bool strict);
};

SignedPolicyDocument sign_policy(const PolicyDocument& doc, const crypto::KeyPair& pair);
crypto::VerificationResult verify_signed_policy(const SignedPolicyDocument& sd,
                                                const crypto::TrustStore& ts);

// True iff `value` matches `pattern` (exact, or char-level prefix when the
// pattern ends in '*'; "UserDocs::*" matches "UserDocs::Private::x").
bool pattern_matches(const std::string& pattern, const std::string& value);

struct AuthorizationRequest {
    std::string principal;
    std::string action;
    std::string resource;
    Json context = Json::object();  // nested attribute map, dotted-path lookup
};

struct Decision {
    bool allowed = false;
    std::vector<std::string> determining_rules;  // every matching rule, permit or forbid
    std::string reason;
};

struct LoadRejection {
    std::string policy_store_id;  // may be empty when the doc failed to parse
    std::string reason;
};

struct LoadReport {
    std::vector<std::string> loaded;          // store ids accepted, evaluation order
    std::vector<LoadRejection> rejected;      // signature/shape failures
    std::vector<LoadRejection> superseded;    // lost a same-id version contest
};

class PolicyStore {
public:
    const std::vector<PolicyDocument>& documents() const { return docs_; }

    // Evaluates every rule of every document: allowed iff at least one
    // PERMIT matches and no FORBID matches; default deny. A condition type
    // error makes its rule non-matching and is surfaced in the reason.
    Decision is_authorized(const AuthorizationRequest& req) const;

    // Same semantics restricted to the named policy store document; a store
    // id with no loaded document evaluates as empty (default deny).
    Decision is_authorized(const AuthorizationRequest& req,
                           const std::optional<std::string>& store_id) const;

    friend PolicyStore load_policy_store(const std::vector<SignedPolicyDocument>& docs,
                                         const crypto::TrustStore& ts, LoadReport* report);

private:
    std::vector<PolicyDocument> docs_;
};

// Keeps only documents whose envelope verifies under the author provider's
// key. When two surviving documents share a policy_store_id the higher
// version wins and the loser is reported superseded. Throws EmptyStore when
// nothing loads.
PolicyStore load_policy_store(const std::vector<SignedPolicyDocument>& docs,
                              const crypto::TrustStore& ts, LoadReport* report = nullptr);

}  // namespace etdi::policy
