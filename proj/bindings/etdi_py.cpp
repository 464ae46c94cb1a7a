// Python module. The API is JSON-first: stores, definitions, envelopes,
// claims, and decisions travel as JSON strings in the same shapes the CLI
// reads and writes, so material is interchangeable between the two.
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "etdi/approval.hpp"
#include "etdi/callstack.hpp"
#include "etdi/canonical.hpp"
#include "etdi/crypto.hpp"
#include "etdi/errors.hpp"
#include "etdi/model.hpp"
#include "etdi/policy.hpp"
#include "etdi/scenario.hpp"
#include "etdi/sim.hpp"
#include "etdi/token.hpp"

namespace py = pybind11;
using namespace etdi;

namespace {

Json parse(const std::string& text, const char* what) {
    Json doc = Json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw EncodingError(std::string(what) + " is not valid JSON");
    return doc;
}

std::string dump(const Json& doc) { return canonical_dump(doc); }

crypto::TrustStore trust_from(const std::string& text) {
    if (text.empty()) return {};
    return crypto::TrustStore::from_json(parse(text, "trust store"));
}

crypto::TrustedKey active_key_of(const std::string& keypair_json) {
    const auto pair = crypto::KeyPair::from_json(parse(keypair_json, "keypair"));
    return crypto::TrustedKey{pair.key_id, pair.algorithm, pair.public_key,
                              crypto::KeyStatus::Active};
}

approval::ApprovalStore store_from(const std::string& jsonl) {
    approval::ApprovalStore store;
    if (!jsonl.empty()) store = approval::ApprovalStore::parse_jsonl(jsonl);
    return store;
}

std::optional<token::Binding> binding_from(const std::string& tool_id,
                                           const std::string& tool_version) {
    if (tool_id.empty() && tool_version.empty()) return std::nullopt;
    if (tool_id.empty() || tool_version.empty())
        throw EncodingError("tool_id and tool_version must be given together");
    return token::Binding{tool_id, tool_version};
}

// Call-stack sessions are stateful, so they are exposed as a class rather
// than a function; verdicts and violation logs still come back as JSON.
class PySession {
public:
    PySession(const std::string& policy_json, const std::string& session_id)
        : session_(callstack::begin_session(
              callstack::CallStackPolicy::from_json(parse(policy_json, "call-stack policy")),
              session_id)) {}

    std::string call(const std::optional<std::string>& caller, const std::string& callee,
                     const std::set<std::string>& caller_scopes,
                     const std::set<std::string>& callee_scopes) {
        const auto verdict = session_.push_call(caller, callee, caller_scopes, callee_scopes);
        Json doc{{"allowed", verdict.allowed}};
        if (verdict.violation) doc["violation"] = callstack::to_string(*verdict.violation);
        if (!verdict.detail.empty()) doc["detail"] = verdict.detail;
        return dump(doc);
    }

    void ret(const std::string& tool) { session_.pop_call(tool); }
    void tick(std::int64_t n) { session_.advance_clock(n); }
    std::size_t depth() const { return session_.depth(); }
    std::int64_t now() const { return session_.now(); }
    std::string violations() const {
        return callstack::violations_to_jsonl(session_.violations());
    }

private:
    callstack::CallSession session_;
};

std::string run_scenario_py(const std::string& name_or_config, const std::string& mode,
                            std::optional<std::uint64_t> seed) {
    scenario::ScenarioConfig config;
    if (!name_or_config.empty() && name_or_config.front() == '{')
        config = scenario::ScenarioConfig::from_json(parse(name_or_config, "scenario config"));
    else
        config.name = name_or_config;
    if (mode == "etdi") config.mode = sim::Mode::Etdi;
    else if (mode == "standard") config.mode = sim::Mode::Standard;
    else throw EncodingError("mode must be 'etdi' or 'standard'");
    if (seed) config.seed = *seed;

    const auto result = scenario::run_scenario(config);
    Json doc{{"transcript", sim::transcript_to_jsonl(result.transcript)},
             {"invariant_ok", result.invariant.ok},
             {"problems", result.invariant.problems}};
    return dump(doc);
}

}  // namespace

PYBIND11_MODULE(etdi, m) {
    m.doc() =
        "Signed tool definitions, explicit approvals, version-bound tokens, "
        "policy decisions, and call-stack checks for tool-calling agents.";

    // Translators run newest-first, so the base class must be registered
    // before the subclasses that refine it.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<EncodingError>(m, "EncodingError", PyExc_ValueError);
    py::register_exception<InvalidPolicy>(m, "InvalidPolicy", PyExc_ValueError);
    py::register_exception<InvalidClaims>(m, "InvalidClaims", PyExc_ValueError);

    // --- keys and trust -------------------------------------------------
    m.def(
        "keygen",
        [](const std::string& key_id, const std::string& seed_phrase) {
            const auto pair = seed_phrase.empty()
                                  ? crypto::generate_keypair(key_id)
                                  : crypto::keypair_from_seed_phrase(key_id, seed_phrase);
            return dump(pair.to_json());
        },
        py::arg("key_id"), py::arg("seed_phrase") = "",
        "Create a signing keypair (deterministic when a seed phrase is given); "
        "returns keypair JSON including the private seed.");

    m.def(
        "trust_add_provider",
        [](const std::string& trust_json, const std::string& provider_id,
           const std::string& keypair_json) {
            return dump(trust_from(trust_json)
                            .with_provider_key(provider_id, active_key_of(keypair_json))
                            .to_json());
        },
        py::arg("trust_json"), py::arg("provider_id"), py::arg("keypair_json"),
        "Return a trust store with the keypair's public key registered for the "
        "provider. Pass '' to start from an empty store.");

    m.def(
        "trust_add_issuer",
        [](const std::string& trust_json, const std::string& issuer_id,
           const std::string& keypair_json) {
            return dump(trust_from(trust_json)
                            .with_issuer_key(issuer_id, active_key_of(keypair_json))
                            .to_json());
        },
        py::arg("trust_json"), py::arg("issuer_id"), py::arg("keypair_json"),
        "Return a trust store with the keypair's public key registered for the "
        "token issuer.");

    m.def(
        "trust_revoke_key",
        [](const std::string& trust_json, const std::string& owner_id,
           const std::string& key_id, bool issuer) {
            const auto ts = trust_from(trust_json);
            return dump((issuer ? ts.with_issuer_key_revoked(owner_id, key_id)
                                : ts.with_provider_key_revoked(owner_id, key_id))
                            .to_json());
        },
        py::arg("trust_json"), py::arg("owner_id"), py::arg("key_id"),
        py::arg("issuer") = false, "Return a trust store with the key marked revoked.");

    // --- definitions ----------------------------------------------------
    m.def(
        "sign_definition",
        [](const std::string& definition_json, const std::string& keypair_json) {
            const auto def = definition_from_json(parse(definition_json, "definition"));
            const auto pair = crypto::KeyPair::from_json(parse(keypair_json, "keypair"));
            return dump(crypto::sign_definition(def, pair).to_json());
        },
        py::arg("definition_json"), py::arg("keypair_json"),
        "Sign a tool definition; returns the envelope JSON.");

    m.def(
        "verify_definition",
        [](const std::string& envelope_json, const std::string& trust_json) {
            const auto sd =
                crypto::SignedToolDefinition::from_json(parse(envelope_json, "envelope"));
            const auto vr = crypto::verify_signed_definition(sd, trust_from(trust_json));
            Json doc{{"verified", vr.verified}, {"detail", vr.detail}};
            if (vr.verified) {
                doc["provider_id"] = vr.provider_id;
                doc["key_id"] = vr.key_id;
            } else {
                doc["failure"] = crypto::to_string(vr.failure);
            }
            return dump(doc);
        },
        py::arg("envelope_json"), py::arg("trust_json"),
        "Verify a signed definition envelope against a trust store.");

    m.def(
        "content_hash",
        [](const std::string& definition_json) {
            return content_hash(definition_from_json(parse(definition_json, "definition"))).hex;
        },
        py::arg("definition_json"),
        "SHA-256 of the definition's canonical encoding, as lowercase hex.");

    m.def(
        "canonical_json",
        [](const std::string& text) { return dump(parse(text, "document")); },
        py::arg("text"), "Re-serialize a JSON document in canonical form (sorted keys).");

    // --- approvals ------------------------------------------------------
    m.def(
        "evaluate_approval",
        [](const std::string& envelope_json, const std::string& trust_json,
           const std::string& store_jsonl) {
            const auto sd =
                crypto::SignedToolDefinition::from_json(parse(envelope_json, "envelope"));
            const auto store = store_from(store_jsonl);
            const auto outcome = approval::evaluate_tool(sd, trust_from(trust_json), store);
            Json doc{{"outcome", approval::to_string(outcome.outcome)},
                     {"detail", outcome.detail}};
            if (outcome.change_report) doc["changes"] = outcome.change_report->to_json();
            return dump(doc);
        },
        py::arg("envelope_json"), py::arg("trust_json"), py::arg("store_jsonl") = "",
        "Classify a presented envelope against the approval history: "
        "ALLOWED_EXISTING, NEEDS_APPROVAL_* , DOWNGRADE_WARNING, or "
        "REJECTED_SIGNATURE.");

    m.def(
        "record_approval",
        [](const std::string& envelope_json, const std::set<std::string>& granted,
           const std::string& store_jsonl, std::int64_t at) {
            const auto sd =
                crypto::SignedToolDefinition::from_json(parse(envelope_json, "envelope"));
            auto store = store_from(store_jsonl);
            const auto grant = granted.empty() ? sd.definition.permissions : granted;
            const auto record = approval::record_approval(sd, grant, store, at);
            return dump(Json{{"record", record.to_json()}, {"store", store.dump_jsonl()}});
        },
        py::arg("envelope_json"), py::arg("granted") = std::set<std::string>{},
        py::arg("store_jsonl") = "", py::arg("at") = 0,
        "Persist user consent for the envelope; empty `granted` grants every "
        "declared permission. Returns the record and the updated store JSONL.");

    m.def(
        "revoke_approval",
        [](const std::string& tool_id, const std::string& store_jsonl, std::int64_t at) {
            auto store = store_from(store_jsonl);
            approval::revoke_approval(tool_id, store, at);
            return store.dump_jsonl();
        },
        py::arg("tool_id"), py::arg("store_jsonl"), py::arg("at") = 0,
        "Append a revocation tombstone; returns the updated store JSONL.");

    // --- tokens -----------------------------------------------------------
    m.def(
        "issue_token",
        [](const std::string& keypair_json, const std::string& claims_json) {
            const auto pair = crypto::KeyPair::from_json(parse(keypair_json, "keypair"));
            const auto claims = token::Claims::from_json(parse(claims_json, "claims"));
            return token::issue_token(pair, claims).serialize();
        },
        py::arg("keypair_json"), py::arg("claims_json"),
        "Mint a signed tool token; returns the compact three-part form.");

    m.def(
        "validate_token",
        [](const std::string& compact, const std::string& trust_json, std::int64_t now,
           const std::string& tool_id, const std::string& tool_version,
           const std::vector<std::string>& revoked_jtis) {
            token::RevocationList rl;
            for (const auto& jti : revoked_jtis) rl.add(jti);
            const auto vr = token::validate_token(compact, trust_from(trust_json),
                                                  binding_from(tool_id, tool_version), now, rl);
            Json doc{{"valid", vr.valid}, {"detail", vr.detail}};
            if (vr.valid) doc["claims"] = vr.claims->to_json();
            else doc["error"] = token::to_string(vr.error);
            return dump(doc);
        },
        py::arg("compact"), py::arg("trust_json"), py::arg("now"), py::arg("tool_id") = "",
        py::arg("tool_version") = "", py::arg("revoked_jtis") = std::vector<std::string>{},
        "Validate issuer trust, signature, expiry, tool binding, and revocation "
        "in that order.");

    // --- policy ---------------------------------------------------------
    m.def(
        "sign_policy",
        [](const std::string& document_json, const std::string& keypair_json) {
            const auto doc =
                policy::PolicyDocument::from_json(parse(document_json, "policy document"), false);
            const auto pair = crypto::KeyPair::from_json(parse(keypair_json, "keypair"));
            return dump(policy::sign_policy(doc, pair).to_json());
        },
        py::arg("document_json"), py::arg("keypair_json"),
        "Sign a policy document; returns the signed envelope JSON.");

    m.def(
        "policy_check",
        [](const std::vector<std::string>& signed_docs, const std::string& trust_json,
           const std::string& request_json, const std::string& store_id) {
            std::vector<policy::SignedPolicyDocument> docs;
            for (const auto& text : signed_docs)
                docs.push_back(policy::SignedPolicyDocument::from_json(
                    parse(text, "signed policy document"), false));
            const Json req_doc = parse(request_json, "request");
            policy::AuthorizationRequest req;
            req.principal = req_doc.at("principal").get<std::string>();
            req.action = req_doc.at("action").get<std::string>();
            req.resource = req_doc.at("resource").get<std::string>();
            if (req_doc.contains("context")) req.context = req_doc.at("context");
            const auto store = policy::load_policy_store(docs, trust_from(trust_json));
            const auto decision = store.is_authorized(
                req, store_id.empty() ? std::nullopt
                                      : std::optional<std::string>{store_id});
            return dump(Json{{"allowed", decision.allowed},
                             {"determining_rules", decision.determining_rules},
                             {"reason", decision.reason}});
        },
        py::arg("signed_docs"), py::arg("trust_json"), py::arg("request_json"),
        py::arg("store_id") = "",
        "Evaluate an authorization request: default deny, any FORBID wins over "
        "any PERMIT.");

    // --- call stack -------------------------------------------------------
    py::class_<PySession>(m, "CallSession",
                          "Per-session call-stack verifier. Verdict JSON comes back "
                          "from call(); ret()/tick() maintain the stack and clock.")
        .def(py::init<const std::string&, const std::string&>(), py::arg("policy_json"),
             py::arg("session_id") = "session-1")
        .def("call", &PySession::call, py::arg("caller"), py::arg("callee"),
             py::arg("caller_scopes") = std::set<std::string>{},
             py::arg("callee_scopes") = std::set<std::string>{},
             "Check one call edge; pass caller=None for a root call.")
        .def("ret", &PySession::ret, py::arg("tool"), "Pop the named tool off the stack.")
        .def("tick", &PySession::tick, py::arg("n") = 1, "Advance the session clock.")
        .def("depth", &PySession::depth)
        .def("now", &PySession::now)
        .def("violations", &PySession::violations,
             "All recorded violations as JSONL, one record per line.");

    // --- simulation -------------------------------------------------------
    m.def("run_scenario", &run_scenario_py, py::arg("name_or_config"),
          py::arg("mode") = "etdi", py::arg("seed") = std::nullopt,
          "Run a canonical scenario name (TOOL_POISONING, RUG_PULL, TOKEN_REPLAY, "
          "CHAIN_ABUSE) or a CUSTOM config JSON; returns transcript JSONL plus the "
          "transcript-invariant verdict.");

    m.def(
        "check_transcript",
        [](const std::string& jsonl) {
            const auto check = sim::check_transcript(sim::transcript_from_jsonl(jsonl));
            return dump(Json{{"ok", check.ok}, {"problems", check.problems}});
        },
        py::arg("jsonl"),
        "Re-check the gate invariant: no INVOKED without preceding passing "
        "VERIFIED, TOKEN_CHECKED, POLICY_CHECKED, STACK_CHECKED events.");
}
