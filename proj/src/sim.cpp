#include "etdi/sim.hpp"

#include <algorithm>

#include "etdi/canonical.hpp"
#include "etdi/errors.hpp"

namespace etdi::sim {

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

std::string permissions_line(const std::set<std::string>& perms) {
    return join(std::vector<std::string>(perms.begin(), perms.end()), ", ");
}

}  // namespace

const char* to_string(EventType t) {
    switch (t) {
        case EventType::Discovered: return "DISCOVERED";
        case EventType::Verified: return "VERIFIED";
        case EventType::Rejected: return "REJECTED";
        case EventType::Prompted: return "PROMPTED";
        case EventType::Approved: return "APPROVED";
        case EventType::TokenChecked: return "TOKEN_CHECKED";
        case EventType::PolicyChecked: return "POLICY_CHECKED";
        case EventType::StackChecked: return "STACK_CHECKED";
        case EventType::Invoked: return "INVOKED";
        case EventType::Result: return "RESULT";
        case EventType::Denied: return "DENIED";
    }
    return "UNKNOWN";
}

EventType event_type_from_string(const std::string& name) {
    for (EventType t : {EventType::Discovered, EventType::Verified, EventType::Rejected,
                        EventType::Prompted, EventType::Approved, EventType::TokenChecked,
                        EventType::PolicyChecked, EventType::StackChecked, EventType::Invoked,
                        EventType::Result, EventType::Denied}) {
        if (name == to_string(t)) return t;
    }
    throw EncodingError("unknown event type '" + name + "'");
}

Json Event::to_json() const {
    Json doc;
    doc["seq"] = seq;
    doc["tick"] = tick;
    doc["request"] = request;
    doc["type"] = std::string(to_string(type));
    doc["tool"] = tool;
    doc["stage"] = stage;
    doc["reason"] = reason;
    doc["detail"] = detail;
    doc["ok"] = ok;
    return doc;
}

Event Event::from_json(const Json& doc) {
    if (!doc.is_object()) throw EncodingError("event must be a JSON object");
    for (const auto& key : {"seq", "tick", "request", "type", "tool", "stage", "reason",
                            "detail", "ok"})
        if (!doc.contains(key)) throw EncodingError(std::string("event missing field '") + key + "'");
    Event e;
    e.seq = doc["seq"].get<std::uint64_t>();
    e.tick = doc["tick"].get<std::int64_t>();
    e.request = doc["request"].get<std::string>();
    e.type = event_type_from_string(doc["type"].get<std::string>());
    e.tool = doc["tool"].get<std::string>();
    e.stage = doc["stage"].get<std::string>();
    e.reason = doc["reason"].get<std::string>();
    e.detail = doc["detail"].get<std::string>();
    e.ok = doc["ok"].get<bool>();
    return e;
}

std::string transcript_to_jsonl(const Transcript& transcript) {
    std::string out;
    for (const auto& event : transcript) {
        out += canonical_dump(event.to_json());
        out += '\n';
    }
    return out;
}

Transcript transcript_from_jsonl(const std::string& text) {
    Transcript out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        if (!line.empty()) {
            Json doc = Json::parse(line, nullptr, false);
            if (doc.is_discarded()) throw EncodingError("transcript line is not valid JSON");
            out.push_back(Event::from_json(doc));
        }
        start = end + 1;
    }
    return out;
}

TranscriptCheck check_transcript(const Transcript& transcript) {
    TranscriptCheck check;
    std::map<std::string, std::set<EventType>> passed;
    std::uint64_t expect_seq = 1;
    for (const auto& event : transcript) {
        if (event.seq != expect_seq) {
            check.ok = false;
            check.problems.push_back("seq " + std::to_string(event.seq) + " where " +
                                     std::to_string(expect_seq) + " expected");
        }
        ++expect_seq;
        if (event.ok && (event.type == EventType::Verified ||
                         event.type == EventType::TokenChecked ||
                         event.type == EventType::PolicyChecked ||
                         event.type == EventType::StackChecked))
            passed[event.request].insert(event.type);
        if (event.type == EventType::Invoked) {
            for (EventType needed : {EventType::Verified, EventType::TokenChecked,
                                     EventType::PolicyChecked, EventType::StackChecked}) {
                if (!passed[event.request].count(needed)) {
                    check.ok = false;
                    check.problems.push_back("request " + event.request + " INVOKED (seq " +
                                             std::to_string(event.seq) + ") without prior " +
                                             to_string(needed) + " pass");
                }
            }
        }
    }
    return check;
}

Json Behavior::to_json() const {
    Json doc;
    switch (kind) {
        case Kind::Result:
            doc["kind"] = "RESULT";
            doc["payload"] = payload;
            break;
        case Kind::Exfiltrate:
            doc["kind"] = "EXFILTRATE";
            doc["target"] = target;
            break;
        case Kind::Chain: {
            doc["kind"] = "CHAIN";
            Json arr = Json::array();
            for (const auto& c : calls) arr.push_back(c);
            doc["calls"] = arr;
            if (!payload.empty()) doc["payload"] = payload;
            break;
        }
    }
    return doc;
}

Behavior Behavior::from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
        throw EncodingError("behavior must be an object with a string 'kind'");
    Behavior b;
    const std::string kind = doc["kind"].get<std::string>();
    if (kind == "RESULT") {
        b.kind = Kind::Result;
        if (doc.contains("payload")) b.payload = doc["payload"].get<std::string>();
    } else if (kind == "EXFILTRATE") {
        b.kind = Kind::Exfiltrate;
        if (doc.contains("target")) b.target = doc["target"].get<std::string>();
    } else if (kind == "CHAIN") {
        b.kind = Kind::Chain;
        if (!doc.contains("calls") || !doc["calls"].is_array())
            throw EncodingError("CHAIN behavior needs a 'calls' array");
        for (const auto& c : doc["calls"]) {
            if (!c.is_string()) throw EncodingError("CHAIN 'calls' must contain tool ids");
            b.calls.push_back(c.get<std::string>());
        }
        if (doc.contains("payload")) b.payload = doc["payload"].get<std::string>();
    } else {
        throw EncodingError("unknown behavior kind '" + kind + "'");
    }
    return b;
}

const crypto::SignedToolDefinition* SimServer::find_tool(const std::string& tool_id) const {
    for (const auto& sd : tools)
        if (sd.definition.id == tool_id) return &sd;
    return nullptr;
}

void SimServer::replace_tool(crypto::SignedToolDefinition sd, Behavior behavior) {
    const std::string id = sd.definition.id;
    behaviors[id] = std::move(behavior);
    for (auto& existing : tools) {
        if (existing.definition.id == id) {
            existing = std::move(sd);
            return;
        }
    }
    tools.push_back(std::move(sd));
}

bool Consent::next() {
    switch (policy) {
        case Policy::Yes: return true;
        case Policy::No: return false;
        case Policy::Script: break;
    }
    if (script.empty()) return false;  // exhausted script denies
    const bool answer = script.front();
    script.pop_front();
    return answer;
}

SimClient::SimClient(ClientConfig config, crypto::TrustStore trust,
                     callstack::CallStackPolicy stack_policy, std::string session_id)
    : config_(std::move(config)),
      trust_(std::move(trust)),
      session_(std::move(stack_policy), std::move(session_id)) {}

void SimClient::set_policy_store(policy::PolicyStore store) { policies_ = std::move(store); }

void SimClient::set_revocations(token::RevocationList rl) { revocations_ = std::move(rl); }

void SimClient::set_tool_token(const std::string& tool_id, std::string compact) {
    tool_tokens_[tool_id] = std::move(compact);
}

const std::string* SimClient::tool_token(const std::string& tool_id) const {
    auto it = tool_tokens_.find(tool_id);
    return it == tool_tokens_.end() ? nullptr : &it->second;
}

void SimClient::advance_clock(std::int64_t ticks) {
    clock_ += ticks;
    if (config_.mode == Mode::Etdi) session_.advance_clock(ticks);
}

Event& SimClient::emit(EventType type, const std::string& request, const std::string& tool) {
    Event e;
    e.seq = transcript_.size() + 1;
    e.tick = clock_;
    e.request = request;
    e.type = type;
    e.tool = tool;
    transcript_.push_back(std::move(e));
    return transcript_.back();
}

DiscoveryReport SimClient::discover(std::vector<SimServer>& servers) {
    servers_ = &servers;
    const std::string request = "d" + std::to_string(++discovery_count_);
    DiscoveryReport report;
    for (std::size_t i = 0; i < servers.size(); ++i) {
        for (const auto& sd : servers[i].tools) {
            discover_one(i, sd, request, report);
        }
    }
    return report;
}

void SimClient::discover_one(std::size_t server_index, const crypto::SignedToolDefinition& sd,
                             const std::string& request, DiscoveryReport& report) {
    const std::string& id = sd.definition.id;
    {
        Event& e = emit(EventType::Discovered, request, id);
        e.detail = "advertised by " + (*servers_)[server_index].server_id;
    }

    if (config_.mode == Mode::Standard) {
        auto existing = catalog_.find(id);
        if (existing != catalog_.end()) {
            transcript_.back().detail += "; duplicate id, kept first-discovered";
            return;
        }
        catalog_[id] = CatalogEntry{server_index, sd.definition};
        report.verified.push_back(id);
        // Standard MCP prompts at most once per display name; a forged or
        // mutated tool under a known name rides the earlier consent.
        const std::string& name = sd.definition.name;
        if (!name_consent_.count(name)) {
            Event& p = emit(EventType::Prompted, request, id);
            p.detail = "first encounter of tool named '" + name + "'";
            const bool yes = consent_.next();
            name_consent_[name] = yes;
            if (yes) {
                Event& a = emit(EventType::Approved, request, id);
                a.detail = "consent granted for name '" + name + "'";
            } else {
                Event& r = emit(EventType::Rejected, request, id);
                r.reason = "USER_DECLINED";
                r.ok = false;
            }
        }
        return;
    }

    const approval::VerificationOutcome outcome =
        approval::evaluate_tool(sd, trust_, approvals_);
    if (outcome.outcome == approval::Outcome::RejectedSignature) {
        const std::string reason =
            outcome.crypto_failure ? crypto::to_string(*outcome.crypto_failure) : "BAD_SIGNATURE";
        Event& e = emit(EventType::Rejected, request, id);
        e.reason = reason;
        e.detail = outcome.detail;
        e.ok = false;
        report.rejected.emplace_back(id, reason);
        return;
    }

    auto existing = catalog_.find(id);
    if (existing != catalog_.end() && existing->second.server_index != server_index) {
        Event& e = emit(EventType::Rejected, request, id);
        e.reason = "DUPLICATE_TOOL_ID";
        e.detail = "already provided by " + (*servers_)[existing->second.server_index].server_id;
        e.ok = false;
        report.rejected.emplace_back(id, "DUPLICATE_TOOL_ID");
        return;
    }

    {
        Event& e = emit(EventType::Verified, request, id);
        e.detail = "signature by " + sd.definition.provider_id + " key " + sd.key_id + "; " +
                   approval::to_string(outcome.outcome);
    }
    catalog_[id] = CatalogEntry{server_index, sd.definition};
    report.verified.push_back(id);
    prompt_and_record(sd, outcome, request, report);
}

void SimClient::prompt_and_record(const crypto::SignedToolDefinition& sd,
                                  const approval::VerificationOutcome& outcome,
                                  const std::string& request, DiscoveryReport& report) {
    const std::string& id = sd.definition.id;
    std::string prompt_detail;
    switch (outcome.outcome) {
        case approval::Outcome::AllowedExisting:
            return;  // matches the standing approval, nothing to ask
        case approval::Outcome::NeedsApprovalNewTool:
            prompt_detail = "new tool requests permissions: " +
                            permissions_line(sd.definition.permissions);
            break;
        case approval::Outcome::NeedsApprovalNewVersion:
        case approval::Outcome::NeedsApprovalTampered:
        case approval::Outcome::DowngradeWarning:
            prompt_detail = outcome.change_report ? outcome.change_report->summary()
                                                  : outcome.detail;
            break;
        case approval::Outcome::RejectedSignature:
            return;  // handled by the caller
    }

    if (outcome.outcome == approval::Outcome::NeedsApprovalTampered &&
        config_.tamper_policy == TamperPolicy::Block) {
        Event& e = emit(EventType::Rejected, request, id);
        e.reason = "NEEDS_APPROVAL_TAMPERED";
        e.detail = "re-approval blocked by configuration; " + prompt_detail;
        e.ok = false;
        report.rejected.emplace_back(id, "NEEDS_APPROVAL_TAMPERED");
        return;
    }
    if (outcome.outcome == approval::Outcome::DowngradeWarning) {
        if (config_.downgrade_policy == DowngradePolicy::Block) {
            Event& e = emit(EventType::Rejected, request, id);
            e.reason = "DOWNGRADE_BLOCKED";
            e.detail = prompt_detail;
            e.ok = false;
            report.rejected.emplace_back(id, "DOWNGRADE_BLOCKED");
            return;
        }
        if (config_.downgrade_policy == DowngradePolicy::Allow) {
            approval::record_approval(sd, sd.definition.permissions, approvals_, clock_);
            Event& e = emit(EventType::Approved, request, id);
            e.detail = "downgrade auto-accepted; " + prompt_detail;
            return;
        }
    }

    {
        Event& e = emit(EventType::Prompted, request, id);
        e.reason = approval::to_string(outcome.outcome);
        e.detail = prompt_detail;
    }
    if (consent_.next()) {
        approval::record_approval(sd, sd.definition.permissions, approvals_, clock_);
        Event& e = emit(EventType::Approved, request, id);
        e.detail = "granted: " + permissions_line(sd.definition.permissions);
    } else {
        Event& e = emit(EventType::Rejected, request, id);
        e.reason = "USER_DECLINED";
        e.ok = false;
    }
}

Event SimClient::invoke(const InvokeSpec& spec) {
    InvokeSpec normalized = spec;
    if (normalized.resource.empty()) normalized.resource = normalized.tool_id;
    const std::string request = "r" + std::to_string(++request_count_);
    const std::size_t index = config_.mode == Mode::Standard
                                  ? invoke_standard(normalized, request, 0)
                                  : invoke_inner(normalized, request, 0);
    return transcript_[index];
}

std::size_t SimClient::invoke_inner(const InvokeSpec& spec, const std::string& request,
                                    int depth) {
    auto entry = catalog_.find(spec.tool_id);
    if (entry == catalog_.end())
        throw UnknownTool("tool '" + spec.tool_id + "' was never discovered");
    SimServer& server = (*servers_)[entry->second.server_index];
    const crypto::SignedToolDefinition* current = server.find_tool(spec.tool_id);
    if (current == nullptr)
        throw UnknownTool("tool '" + spec.tool_id + "' is no longer hosted by " +
                          server.server_id);

    // (1) Listing-1 verification against the envelope the server serves NOW
    const approval::VerificationOutcome outcome =
        approval::evaluate_tool(*current, trust_, approvals_);
    bool verified = false;
    std::string verified_detail;
    switch (outcome.outcome) {
        case approval::Outcome::AllowedExisting:
            verified = true;
            verified_detail = outcome.detail;
            break;
        case approval::Outcome::NeedsApprovalTampered:
            if (config_.diff_mode == DiffMode::Lenient) {
                const ChangeReport drift = diff_definitions(
                    entry->second.discovered, current->definition, DiffMode::Lenient);
                if (!drift.requires_reapproval) {
                    verified = true;
                    verified_detail = "cosmetic drift accepted (lenient): " + drift.summary();
                }
            }
            break;
        default:
            break;
    }
    if (!verified) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "approval";
        e.reason = outcome.outcome == approval::Outcome::RejectedSignature && outcome.crypto_failure
                       ? crypto::to_string(*outcome.crypto_failure)
                       : approval::to_string(outcome.outcome);
        e.detail = outcome.change_report ? outcome.change_report->summary() : outcome.detail;
        e.ok = false;
        return e.seq - 1;
    }
    {
        Event& e = emit(EventType::Verified, request, spec.tool_id);
        e.detail = verified_detail;
    }
    const ToolDefinition& def = current->definition;

    // (2) tool token: issuer trust, signature, expiry, binding, revocation
    const token::ValidationResult vr = token::validate_token(
        spec.tool_token, trust_, token::binding_for(def), clock_, revocations_);
    if (!vr.valid) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "token";
        e.reason = token::to_string(vr.error);
        e.detail = vr.detail;
        e.ok = false;
        return e.seq - 1;
    }

    // (3) scope adherence for the requested action
    const std::set<std::string> action_scopes =
        spec.action_scopes ? *spec.action_scopes : def.permissions;
    try {
        const token::AdherenceResult adherence =
            token::check_scope_adherence(action_scopes, vr.claims->scopes);
        if (!adherence.passed) {
            Event& e = emit(EventType::Denied, request, spec.tool_id);
            e.stage = "scope";
            e.reason = "SCOPE_MISSING";
            e.detail = adherence.detail;
            e.ok = false;
            return e.seq - 1;
        }
    } catch (const MalformedScope& ex) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "scope";
        e.reason = "MALFORMED_SCOPE";
        e.detail = ex.what();
        e.ok = false;
        return e.seq - 1;
    }

    // (4) caller entitlements, only when the definition demands them
    if (!def.required_caller_entitlements.empty()) {
        std::optional<token::Claims> user_claims;
        if (spec.user_token) {
            const token::ValidationResult uv = token::validate_token(
                *spec.user_token, trust_, std::nullopt, clock_, revocations_);
            if (!uv.valid) {
                Event& e = emit(EventType::Denied, request, spec.tool_id);
                e.stage = "entitlement";
                e.reason = token::to_string(uv.error);
                e.detail = "user token: " + uv.detail;
                e.ok = false;
                return e.seq - 1;
            }
            user_claims = uv.claims;
        }
        const token::AdherenceResult ent = token::check_caller_entitlements(def, user_claims);
        if (!ent.passed) {
            Event& e = emit(EventType::Denied, request, spec.tool_id);
            e.stage = "entitlement";
            e.reason = "ENTITLEMENT_MISSING";
            e.detail = ent.detail;
            e.ok = false;
            return e.seq - 1;
        }
    }
    {
        Event& e = emit(EventType::TokenChecked, request, spec.tool_id);
        e.detail = "token " + vr.claims->jti + " bound to " + def.id + "@" +
                   def.version.to_string();
    }

    // (5) policy decision over principal/action/resource/context
    policy::AuthorizationRequest preq;
    preq.principal = def.provider_id + "::" + def.id + "@" + def.version.to_string();
    preq.action = spec.action;
    preq.resource = spec.resource;
    preq.context = spec.user_context.is_object() ? spec.user_context : Json::object();
    if (!spec.user_id.empty()) {
        if (!preq.context.contains("user") || !preq.context["user"].is_object())
            preq.context["user"] = Json::object();
        if (!preq.context["user"].contains("id")) preq.context["user"]["id"] = spec.user_id;
    }
    if (!preq.context.contains("request") || !preq.context["request"].is_object())
        preq.context["request"] = Json::object();
    preq.context["request"]["time"] = clock_;

    if (!policies_) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "policy";
        e.reason = "DEFAULT_DENY";
        e.detail = "no policy store loaded";
        e.ok = false;
        return e.seq - 1;
    }
    std::optional<std::string> store_id;
    if (auto it = config_.user_policy_store.find(spec.user_id);
        it != config_.user_policy_store.end())
        store_id = it->second;
    const policy::Decision decision = policies_->is_authorized(preq, store_id);
    if (!decision.allowed) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "policy";
        e.reason = "POLICY_DENIED";
        e.detail = decision.reason +
                   (decision.determining_rules.empty()
                        ? ""
                        : "; rules: " + join(decision.determining_rules, ", "));
        e.ok = false;
        return e.seq - 1;
    }
    {
        Event& e = emit(EventType::PolicyChecked, request, spec.tool_id);
        e.detail = "rules: " + join(decision.determining_rules, ", ");
    }

    // (6) call-stack verification
    std::optional<std::string> caller;
    std::set<std::string> caller_scopes;
    if (session_.depth() > 0) {
        caller = session_.stack().back().tool_id;
        caller_scopes = session_.stack().back().granted_scopes;
    }
    const callstack::CallVerdict verdict =
        session_.push_call(caller, def.id, caller_scopes, def.permissions);
    if (!verdict.allowed) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "stack";
        e.reason = callstack::to_string(*verdict.violation);
        e.detail = verdict.detail;
        e.ok = false;
        return e.seq - 1;
    }
    {
        Event& e = emit(EventType::StackChecked, request, spec.tool_id);
        e.detail = "depth " + std::to_string(session_.depth()) +
                   (caller ? " caller " + *caller : " root call");
        if (!verdict.logged.empty()) {
            std::vector<std::string> names;
            for (auto v : verdict.logged) names.emplace_back(callstack::to_string(v));
            e.detail += "; logged: " + join(names, ", ");
        }
    }

    // (7) execution, (8) unwind
    emit(EventType::Invoked, request, spec.tool_id);
    const std::size_t final_index = run_behavior(spec, request, def.id, depth);
    session_.pop_call(def.id);
    return final_index;
}

std::size_t SimClient::invoke_standard(const InvokeSpec& spec, const std::string& request,
                                         int depth) {
    auto entry = catalog_.find(spec.tool_id);
    if (entry == catalog_.end())
        throw UnknownTool("tool '" + spec.tool_id + "' was never discovered");
    if (depth >= config_.recursion_guard) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "chain";
        e.reason = "RECURSION_GUARD";
        e.detail = "simulation stop at depth " + std::to_string(depth) +
                   "; standard mode has no call-stack verification";
        e.ok = false;
        return e.seq - 1;
    }
    auto consent = name_consent_.find(entry->second.discovered.name);
    if (consent != name_consent_.end() && !consent->second) {
        Event& e = emit(EventType::Denied, request, spec.tool_id);
        e.stage = "consent";
        e.reason = "USER_DECLINED";
        e.detail = "consent was declined at discovery";
        e.ok = false;
        return e.seq - 1;
    }
    emit(EventType::Invoked, request, spec.tool_id);
    return run_behavior(spec, request, spec.tool_id, depth);
}

std::size_t SimClient::run_behavior(const InvokeSpec& spec, const std::string& request,
                                    const std::string& tool_id, int depth) {
    auto entry = catalog_.find(tool_id);
    SimServer& server = (*servers_)[entry->second.server_index];
    Behavior behavior;  // default: RESULT "ok"
    behavior.payload = "ok";
    if (auto it = server.behaviors.find(tool_id); it != server.behaviors.end())
        behavior = it->second;

    switch (behavior.kind) {
        case Behavior::Kind::Result: {
            Event& e = emit(EventType::Result, request, tool_id);
            e.detail = behavior.payload;
            return e.seq - 1;
        }
        case Behavior::Kind::Exfiltrate: {
            Event& e = emit(EventType::Result, request, tool_id);
            e.detail = "EXFILTRATE(target=" + behavior.target + ")";
            return e.seq - 1;
        }
        case Behavior::Kind::Chain:
            break;
    }

    for (std::size_t k = 0; k < behavior.calls.size(); ++k) {
        const std::string& callee = behavior.calls[k];
        const std::string child_request = request + "." + std::to_string(k + 1);
        InvokeSpec child;
        child.tool_id = callee;
        child.resource = callee;
        child.user_token = spec.user_token;
        child.user_id = spec.user_id;
        child.user_context = spec.user_context;
        if (const std::string* tok = tool_token(callee)) child.tool_token = *tok;
        std::size_t child_index;
        try {
            child_index = config_.mode == Mode::Standard
                              ? invoke_standard(child, child_request, depth + 1)
                              : invoke_inner(child, child_request, depth + 1);
        } catch (const UnknownTool& ex) {
            Event& c = emit(EventType::Denied, child_request, callee);
            c.stage = "chain";
            c.reason = "UNKNOWN_TOOL";
            c.detail = ex.what();
            c.ok = false;
            child_index = c.seq - 1;
        }
        if (!transcript_[child_index].ok) {
            Event& e = emit(EventType::Denied, request, tool_id);
            e.stage = "chain";
            e.reason = "NESTED_CALL_DENIED";
            e.detail = "nested request " + child_request + " was denied";
            e.ok = false;
            return e.seq - 1;
        }
    }
    Event& e = emit(EventType::Result, request, tool_id);
    e.detail = behavior.payload.empty() ? "chain-complete" : behavior.payload;
    return e.seq - 1;
}

}  // namespace etdi::sim
