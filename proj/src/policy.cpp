#include "etdi/policy.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "etdi/canonical.hpp"
#include "etdi/errors.hpp"

namespace etdi::policy {

namespace {

const std::map<std::string, Condition::Kind>& kind_by_name() {
    static const std::map<std::string, Condition::Kind> table = {
        {"and", Condition::Kind::And}, {"or", Condition::Kind::Or},
        {"not", Condition::Kind::Not}, {"eq", Condition::Kind::Eq},
        {"neq", Condition::Kind::Neq}, {"lt", Condition::Kind::Lt},
        {"lte", Condition::Kind::Lte}, {"gt", Condition::Kind::Gt},
        {"gte", Condition::Kind::Gte}, {"in", Condition::Kind::In},
    };
    return table;
}

const char* kind_name(Condition::Kind k) {
    for (const auto& [name, kind] : kind_by_name())
        if (kind == k) return name.c_str();
    return "?";
}

bool is_combinator(Condition::Kind k) {
    return k == Condition::Kind::And || k == Condition::Kind::Or || k == Condition::Kind::Not;
}

bool is_ordered(Condition::Kind k) {
    return k == Condition::Kind::Lt || k == Condition::Kind::Lte || k == Condition::Kind::Gt ||
           k == Condition::Kind::Gte;
}

bool is_scalar(const Json& v) { return v.is_string() || v.is_number() || v.is_boolean(); }

// Dotted-path attribute lookup. An exact top-level key wins over path
// descent so flat contexts with dotted keys also work.
const Json* lookup_attribute(const Json& context, const std::string& path) {
    if (!context.is_object()) return nullptr;
    if (auto it = context.find(path); it != context.end()) return &*it;
    const Json* node = &context;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (!node->is_object()) return nullptr;
        auto it = node->find(part);
        if (it == node->end()) return nullptr;
        node = &*it;
        if (dot == std::string::npos) return node;
        start = dot + 1;
    }
}

double as_number(const Json& v) { return v.get<double>(); }

std::string type_name(const Json& v) {
    if (v.is_string()) return "string";
    if (v.is_number()) return "number";
    if (v.is_boolean()) return "boolean";
    return v.type_name();
}

}  // namespace

Json Condition::to_json() const {
    Json arr = Json::array();
    arr.push_back(kind_name(kind));
    if (is_combinator(kind)) {
        for (const auto& child : children) arr.push_back(child.to_json());
    } else {
        arr.push_back(attribute);
        arr.push_back(literal);
    }
    return arr;
}

Condition Condition::from_json(const Json& doc, bool strict) {
    if (!doc.is_array() || doc.empty() || !doc[0].is_string())
        throw InvalidPolicy("condition must be an array starting with an operator name");
    const std::string op = doc[0].get<std::string>();
    auto it = kind_by_name().find(op);
    if (it == kind_by_name().end()) throw InvalidPolicy("unknown condition operator '" + op + "'");
    Condition cond;
    cond.kind = it->second;
    if (is_combinator(cond.kind)) {
        if (cond.kind == Condition::Kind::Not && doc.size() != 2)
            throw InvalidPolicy("'not' takes exactly one operand");
        if (cond.kind != Condition::Kind::Not && doc.size() < 2)
            throw InvalidPolicy("'" + op + "' needs at least one operand");
        for (std::size_t i = 1; i < doc.size(); ++i)
            cond.children.push_back(from_json(doc[i], strict));
        return cond;
    }
    if (doc.size() != 3 || !doc[1].is_string())
        throw InvalidPolicy("'" + op + "' must be [\"" + op + "\", attribute, value]");
    cond.attribute = doc[1].get<std::string>();
    if (cond.attribute.empty()) throw InvalidPolicy("condition attribute path must be non-empty");
    cond.literal = doc[2];
    if (cond.kind == Condition::Kind::In) {
        if (!cond.literal.is_array())
            throw InvalidPolicy("'in' value must be an array");
        if (strict) {
            for (const auto& item : cond.literal)
                if (!item.is_string())
                    throw InvalidPolicy("'in' members must be strings");
        }
        return cond;
    }
    if (!is_scalar(cond.literal))
        throw InvalidPolicy("'" + op + "' value must be a string, number, or boolean");
    if (strict && is_ordered(cond.kind) && !cond.literal.is_number())
        throw InvalidPolicy("'" + op + "' compares numbers; literal is " + type_name(cond.literal));
    return cond;
}

bool eval_condition(const Condition& expr, const Json& context) {
    switch (expr.kind) {
        case Condition::Kind::And: {
            bool all = true;
            for (const auto& child : expr.children)
                if (!eval_condition(child, context)) all = false;
            return all;
        }
        case Condition::Kind::Or: {
            bool any = false;
            for (const auto& child : expr.children)
                if (eval_condition(child, context)) any = true;
            return any;
        }
        case Condition::Kind::Not:
            return !eval_condition(expr.children.front(), context);
        default:
            break;
    }
    const Json* value = lookup_attribute(context, expr.attribute);
    if (value == nullptr || !is_scalar(*value)) return false;  // absence is not permission
    if (expr.kind == Condition::Kind::In) {
        if (!value->is_string())
            throw ConditionTypeError("'in' needs a string attribute; '" + expr.attribute +
                                     "' is " + type_name(*value));
        for (const auto& item : expr.literal) {
            if (!item.is_string())
                throw ConditionTypeError("'in' list for '" + expr.attribute +
                                         "' holds a non-string member");
            if (item.get<std::string>() == value->get<std::string>()) return true;
        }
        return false;
    }
    if (is_ordered(expr.kind)) {
        if (!value->is_number() || !expr.literal.is_number())
            throw ConditionTypeError(std::string("'") + kind_name(expr.kind) +
                                     "' compares numbers; got " + type_name(*value) + " vs " +
                                     type_name(expr.literal));
        const double a = as_number(*value);
        const double b = as_number(expr.literal);
        switch (expr.kind) {
            case Condition::Kind::Lt: return a < b;
            case Condition::Kind::Lte: return a <= b;
            case Condition::Kind::Gt: return a > b;
            case Condition::Kind::Gte: return a >= b;
            default: break;
        }
    }
    // eq / neq on same-type scalars; numbers compare numerically
    bool equal = false;
    if (value->is_string() && expr.literal.is_string()) {
        equal = value->get<std::string>() == expr.literal.get<std::string>();
    } else if (value->is_number() && expr.literal.is_number()) {
        equal = as_number(*value) == as_number(expr.literal);
    } else if (value->is_boolean() && expr.literal.is_boolean()) {
        equal = value->get<bool>() == expr.literal.get<bool>();
    } else {
        throw ConditionTypeError("'" + expr.attribute + "' is " + type_name(*value) +
                                 " but literal is " + type_name(expr.literal));
    }
    return expr.kind == Condition::Kind::Eq ? equal : !equal;
}

const char* to_string(Effect e) { return e == Effect::Permit ? "PERMIT" : "FORBID"; }

bool pattern_matches(const std::string& pattern, const std::string& value) {
    if (!pattern.empty() && pattern.back() == '*')
        return value.starts_with(std::string_view(pattern).substr(0, pattern.size() - 1));
    return pattern == value;
}

Json PolicyDocument::to_json() const {
    Json rules_arr = Json::array();
    for (const auto& rule : rules) {
        Json r;
        r["rule_id"] = rule.rule_id;
        r["effect"] = to_string(rule.effect);
        r["principal"] = rule.principal_matcher;
        r["action"] = rule.action_matcher;
        r["resource"] = rule.resource_matcher;
        if (rule.condition) r["condition"] = rule.condition->to_json();
        rules_arr.push_back(std::move(r));
    }
    Json doc;
    doc["policy_store_id"] = policy_store_id;
    doc["version"] = {{"major", version.major}, {"minor", version.minor}, {"patch", version.patch}};
    doc["author_provider_id"] = author_provider_id;
    doc["rules"] = std::move(rules_arr);
    return doc;
}

PolicyDocument PolicyDocument::from_json(const Json& doc, bool strict) {
    if (!doc.is_object()) throw InvalidPolicy("policy document must be a JSON object");
    static const std::set<std::string> known = {"policy_store_id", "version",
                                                "author_provider_id", "rules"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!known.count(key)) throw InvalidPolicy("unknown policy field '" + key + "'");
    }
    for (const auto& key : known)
        if (!doc.contains(key)) throw InvalidPolicy("policy document missing field '" + key + "'");
    PolicyDocument out;
    if (!doc["policy_store_id"].is_string() || doc["policy_store_id"].get<std::string>().empty())
        throw InvalidPolicy("'policy_store_id' must be a non-empty string");
    out.policy_store_id = doc["policy_store_id"].get<std::string>();
    const Json& ver = doc["version"];
    if (!ver.is_object() || !ver.contains("major") || !ver.contains("minor") ||
        !ver.contains("patch") || !ver["major"].is_number_integer() ||
        !ver["minor"].is_number_integer() || !ver["patch"].is_number_integer())
        throw InvalidPolicy("'version' must hold integer major/minor/patch");
    out.version = SemVer{ver["major"].get<std::int64_t>(), ver["minor"].get<std::int64_t>(),
                         ver["patch"].get<std::int64_t>()};
    if (out.version.major < 0 || out.version.minor < 0 || out.version.patch < 0)
        throw InvalidPolicy("'version' components must be non-negative");
    if (!doc["author_provider_id"].is_string() ||
        doc["author_provider_id"].get<std::string>().empty())
        throw InvalidPolicy("'author_provider_id' must be a non-empty string");
    out.author_provider_id = doc["author_provider_id"].get<std::string>();
    if (!doc["rules"].is_array()) throw InvalidPolicy("'rules' must be an array");
    std::set<std::string> seen_ids;
    for (const Json& r : doc["rules"]) {
        if (!r.is_object()) throw InvalidPolicy("each rule must be a JSON object");
        static const std::set<std::string> rule_known = {"rule_id", "effect",   "principal",
                                                         "action",  "resource", "condition"};
        for (const auto& [key, value] : r.items()) {
            (void)value;
            if (!rule_known.count(key)) throw InvalidPolicy("unknown rule field '" + key + "'");
        }
        for (const auto& key : {"rule_id", "effect", "principal", "action", "resource"})
            if (!r.contains(key) || !r[key].is_string())
                throw InvalidPolicy(std::string("rule field '") + key + "' must be a string");
        PolicyRule rule;
        rule.rule_id = r["rule_id"].get<std::string>();
        if (rule.rule_id.empty()) throw InvalidPolicy("'rule_id' must be non-empty");
        if (!seen_ids.insert(rule.rule_id).second)
            throw InvalidPolicy("duplicate rule_id '" + rule.rule_id + "'");
        const std::string effect = r["effect"].get<std::string>();
        if (effect == "PERMIT") rule.effect = Effect::Permit;
        else if (effect == "FORBID") rule.effect = Effect::Forbid;
        else throw InvalidPolicy("rule effect must be PERMIT or FORBID, got '" + effect + "'");
        rule.principal_matcher = r["principal"].get<std::string>();
        rule.action_matcher = r["action"].get<std::string>();
        rule.resource_matcher = r["resource"].get<std::string>();
        if (rule.principal_matcher.empty() || rule.action_matcher.empty() ||
            rule.resource_matcher.empty())
            throw InvalidPolicy("rule matchers must be non-empty");
        if (r.contains("condition")) rule.condition = Condition::from_json(r["condition"], strict);
        out.rules.push_back(std::move(rule));
    }
    return out;
}

Json SignedPolicyDocument::to_json() const {
    return Json{
        {"document", document.to_json()},
        {"key_id", key_id},
        {"algorithm", algorithm},
        {"signature", base64_encode(signature.data(), signature.size())},
        {"signed_bytes_hash", signed_bytes_hash.hex},
    };
}

SignedPolicyDocument SignedPolicyDocument::from_json(const Json& doc, bool strict) {
    if (!doc.is_object() || !doc.contains("document") || !doc.contains("key_id") ||
        !doc.contains("algorithm") || !doc.contains("signature") ||
        !doc.contains("signed_bytes_hash"))
        throw EncodingError(
            "signed policy needs document, key_id, algorithm, signature, signed_bytes_hash");
    SignedPolicyDocument sd;
    sd.document = PolicyDocument::from_json(doc["document"], strict);
    if (!doc["key_id"].is_string() || !doc["algorithm"].is_string() ||
        !doc["signature"].is_string() || !doc["signed_bytes_hash"].is_string())
        throw EncodingError("signed policy envelope fields must be strings");
    sd.key_id = doc["key_id"].get<std::string>();
    sd.algorithm = doc["algorithm"].get<std::string>();
    const auto sig_bytes = base64_decode(doc["signature"].get<std::string>());
    if (sig_bytes.size() != sd.signature.size())
        throw EncodingError("policy signature has wrong length");
    std::copy(sig_bytes.begin(), sig_bytes.end(), sd.signature.begin());
    sd.signed_bytes_hash.hex = doc["signed_bytes_hash"].get<std::string>();
    if (!sd.signed_bytes_hash.valid())
        throw EncodingError("signed_bytes_hash must be 64 lowercase hex characters");
    return sd;
}

SignedPolicyDocument sign_policy(const PolicyDocument& doc, const crypto::KeyPair& pair) {
    SignedPolicyDocument sd;
    sd.document = doc;
    sd.key_id = pair.key_id;
    sd.algorithm = pair.algorithm;
    const auto canonical = canonical_bytes(doc.to_json());
    sd.signature = crypto::sign_bytes(canonical, pair);
    sd.signed_bytes_hash.hex = sha256_hex(canonical);
    return sd;
}

crypto::VerificationResult verify_signed_policy(const SignedPolicyDocument& sd,
                                                const crypto::TrustStore& ts) {
    std::vector<std::uint8_t> canonical;
    try {
        canonical = canonical_bytes(sd.document.to_json());
    } catch (const EncodingError& e) {
        return crypto::VerificationResult::invalid(
            crypto::VerifyFailure::BadSignature,
            std::string("policy document not canonicalizable: ") + e.what());
    }
    return crypto::verify_envelope(canonical, sd.document.author_provider_id, sd.key_id,
                                   sd.algorithm, sd.signature, sd.signed_bytes_hash, ts,
                                   /*issuer_registry=*/false);
}

Decision PolicyStore::is_authorized(const AuthorizationRequest& req) const {
    return is_authorized(req, std::nullopt);
}

Decision PolicyStore::is_authorized(const AuthorizationRequest& req,
                                    const std::optional<std::string>& store_id) const {
    Decision decision;
    bool any_permit = false;
    bool any_forbid = false;
    std::string condition_notes;
    for (const auto& doc : docs_) {
        if (store_id && doc.policy_store_id != *store_id) continue;
        for (const auto& rule : doc.rules) {
            if (!pattern_matches(rule.principal_matcher, req.principal) ||
                !pattern_matches(rule.action_matcher, req.action) ||
                !pattern_matches(rule.resource_matcher, req.resource))
                continue;
            bool condition_holds = true;
            if (rule.condition) {
                try {
                    condition_holds = eval_condition(*rule.condition, req.context);
                } catch (const ConditionTypeError& e) {
                    condition_holds = false;  // lenient: rule does not match
                    condition_notes += " [rule " + rule.rule_id + ": " + e.what() + "]";
                }
            }
            if (!condition_holds) continue;
            decision.determining_rules.push_back(rule.rule_id);
            if (rule.effect == Effect::Permit) any_permit = true;
            else any_forbid = true;
        }
    }
    decision.allowed = any_permit && !any_forbid;
    if (any_forbid) decision.reason = "forbidden by matching FORBID rule";
    else if (any_permit) decision.reason = "permitted";
    else decision.reason = "no matching PERMIT rule (default deny)";
    decision.reason += condition_notes;
    return decision;
}

PolicyStore load_policy_store(const std::vector<SignedPolicyDocument>& docs,
                              const crypto::TrustStore& ts, LoadReport* report) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    // Accepted docs keyed by store id; version contests resolved as we go.
    std::vector<SignedPolicyDocument> accepted;
    for (const auto& sd : docs) {
        const std::string store_id = sd.document.policy_store_id;
        crypto::VerificationResult vr = verify_signed_policy(sd, ts);
        if (!vr.verified) {
            rep.rejected.push_back({store_id, vr.detail.empty()
                                                  ? std::string(crypto::to_string(vr.failure))
                                                  : vr.detail});
            continue;
        }
        auto prev = std::find_if(accepted.begin(), accepted.end(), [&](const auto& other) {
            return other.document.policy_store_id == store_id;
        });
        if (prev == accepted.end()) {
            accepted.push_back(sd);
            continue;
        }
        if (sd.document.version > prev->document.version) {
            rep.superseded.push_back(
                {store_id, "version " + prev->document.version.to_string() + " superseded by " +
                               sd.document.version.to_string()});
            *prev = sd;
        } else {
            rep.superseded.push_back(
                {store_id, "version " + sd.document.version.to_string() +
                               " superseded by already-loaded " +
                               prev->document.version.to_string()});
        }
    }
    if (accepted.empty())
        throw EmptyStore("no policy document survived signature verification");
    PolicyStore store;
    for (const auto& sd : accepted) {
        rep.loaded.push_back(sd.document.policy_store_id);
        store.docs_.push_back(sd.document);
    }
    return store;
}

}  // namespace etdi::policy
