#include "etdi/callstack.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "etdi/errors.hpp"

namespace etdi::callstack {

namespace {

Json chains_to_json(const std::set<ChainPair>& chains) {
    Json arr = Json::array();
    for (const auto& [caller, callee] : chains) arr.push_back(Json::array({caller, callee}));
    return arr;
}

std::set<ChainPair> chains_from_json(const Json& arr, const std::string& field) {
    if (!arr.is_array()) throw InvalidPolicy("'" + field + "' must be an array of pairs");
    std::set<ChainPair> out;
    for (const auto& item : arr) {
        if (!item.is_array() || item.size() != 2 || !item[0].is_string() || !item[1].is_string())
            throw InvalidPolicy("'" + field + "' entries must be [caller, callee] string pairs");
        out.emplace(item[0].get<std::string>(), item[1].get<std::string>());
    }
    return out;
}

bool subset(const std::set<std::string>& inner, const std::set<std::string>& outer) {
    return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

}  // namespace

const char* to_string(Violation v) {
    switch (v) {
        case Violation::ChainBlocked: return "CHAIN_BLOCKED";
        case Violation::ChainNotAllowlisted: return "CHAIN_NOT_ALLOWLISTED";
        case Violation::DepthExceeded: return "DEPTH_EXCEEDED";
        case Violation::CircularCall: return "CIRCULAR_CALL";
        case Violation::PrivilegeEscalation: return "PRIVILEGE_ESCALATION";
        case Violation::RateLimited: return "RATE_LIMITED";
    }
    return "UNKNOWN";
}

Violation violation_from_string(const std::string& name) {
    for (Violation v : {Violation::ChainBlocked, Violation::ChainNotAllowlisted,
                        Violation::DepthExceeded, Violation::CircularCall,
                        Violation::PrivilegeEscalation, Violation::RateLimited}) {
        if (name == to_string(v)) return v;
    }
    throw InvalidPolicy("unknown violation class '" + name + "'");
}

Json CallStackPolicy::to_json() const {
    Json limits = Json::object();
    for (const auto& [tool, limit] : rate_limits)
        limits[tool] = Json{{"max_calls", limit.max_calls}, {"window", limit.window}};
    Json log = Json::array();
    for (Violation v : log_only) log.push_back(to_string(v));
    Json doc;
    doc["max_depth"] = max_depth;
    doc["allowed_chains"] = chains_to_json(allowed_chains);
    doc["blocked_chains"] = chains_to_json(blocked_chains);
    doc["allow_reentrancy"] = allow_reentrancy;
    doc["permitted_elevations"] = chains_to_json(permitted_elevations);
    doc["rate_limits"] = std::move(limits);
    doc["log_only"] = std::move(log);
    return doc;
}

CallStackPolicy CallStackPolicy::from_json(const Json& doc) {
    if (!doc.is_object()) throw InvalidPolicy("call-stack policy must be a JSON object");
    static const std::set<std::string> known = {
        "max_depth",      "allowed_chains", "blocked_chains", "allow_reentrancy",
        "permitted_elevations", "rate_limits",    "log_only"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!known.count(key)) throw InvalidPolicy("unknown call-stack policy field '" + key + "'");
    }
    for (const auto& key : {"max_depth", "allowed_chains", "blocked_chains", "allow_reentrancy",
                            "permitted_elevations", "rate_limits"})
        if (!doc.contains(key))
            throw InvalidPolicy(std::string("call-stack policy missing field '") + key + "'");
    CallStackPolicy p;
    if (!doc["max_depth"].is_number_integer())
        throw InvalidPolicy("'max_depth' must be an integer");
    p.max_depth = doc["max_depth"].get<std::int64_t>();
    p.allowed_chains = chains_from_json(doc["allowed_chains"], "allowed_chains");
    p.blocked_chains = chains_from_json(doc["blocked_chains"], "blocked_chains");
    if (!doc["allow_reentrancy"].is_boolean())
        throw InvalidPolicy("'allow_reentrancy' must be a boolean");
    p.allow_reentrancy = doc["allow_reentrancy"].get<bool>();
    p.permitted_elevations = chains_from_json(doc["permitted_elevations"], "permitted_elevations");
    if (!doc["rate_limits"].is_object())
        throw InvalidPolicy("'rate_limits' must be an object keyed by tool id");
    for (const auto& [tool, limit] : doc["rate_limits"].items()) {
        if (!limit.is_object() || !limit.contains("max_calls") || !limit.contains("window") ||
            !limit["max_calls"].is_number_integer() || !limit["window"].is_number_integer())
            throw InvalidPolicy("rate limit for '" + tool +
                                "' must hold integer max_calls and window");
        RateLimit rl{limit["max_calls"].get<std::int64_t>(), limit["window"].get<std::int64_t>()};
        if (rl.max_calls < 0) throw InvalidPolicy("rate limit max_calls must be >= 0");
        if (rl.window < 1) throw InvalidPolicy("rate limit window must be >= 1 tick");
        p.rate_limits[tool] = rl;
    }
    if (doc.contains("log_only")) {
        if (!doc["log_only"].is_array())
            throw InvalidPolicy("'log_only' must be an array of violation names");
        for (const auto& item : doc["log_only"]) {
            if (!item.is_string()) throw InvalidPolicy("'log_only' entries must be strings");
            p.log_only.insert(violation_from_string(item.get<std::string>()));
        }
    }
    return p;
}

CallStackPolicy CallStackPolicy::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreIOError("cannot open call-stack policy: " + path);
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw InvalidPolicy("call-stack policy file is not valid JSON: " + path);
    return from_json(doc);
}

CallVerdict CallVerdict::allow() {
    CallVerdict v;
    v.allowed = true;
    return v;
}

CallVerdict CallVerdict::block(Violation violation, std::string detail) {
    CallVerdict v;
    v.allowed = false;
    v.violation = violation;
    v.detail = std::move(detail);
    return v;
}

Json ViolationRecord::to_json() const {
    Json doc;
    doc["tick"] = tick;
    doc["session_id"] = session_id;
    doc["caller"] = caller;
    doc["callee"] = callee;
    doc["violation"] = std::string(to_string(violation));
    return doc;
}

CallSession::CallSession(CallStackPolicy policy, std::string session_id)
    : policy_(std::move(policy)), session_id_(std::move(session_id)) {
    if (policy_.max_depth < 1) throw InvalidPolicy("max_depth must be >= 1");
    std::vector<ChainPair> overlap;
    std::set_intersection(policy_.allowed_chains.begin(), policy_.allowed_chains.end(),
                          policy_.blocked_chains.begin(), policy_.blocked_chains.end(),
                          std::back_inserter(overlap));
    if (!overlap.empty())
        throw InvalidPolicy("chain (" + overlap.front().first + ", " + overlap.front().second +
                            ") is both allowed and blocked");
    for (const auto& [tool, rl] : policy_.rate_limits) {
        if (rl.max_calls < 0) throw InvalidPolicy("rate limit max_calls must be >= 0");
        if (rl.window < 1) throw InvalidPolicy("rate limit window for '" + tool + "' must be >= 1");
    }
}

CallSession begin_session(const CallStackPolicy& policy, std::string session_id) {
    return CallSession(policy, std::move(session_id));
}

CallVerdict CallSession::push_call(const std::optional<std::string>& caller_id,
                                   const std::string& callee_id,
                                   const std::set<std::string>& caller_scopes,
                                   const std::set<std::string>& callee_scopes) {
    if (caller_id) {
        if (stack_.empty())
            throw CallerMismatch("caller '" + *caller_id + "' claimed on an empty stack");
        if (stack_.back().tool_id != *caller_id)
            throw CallerMismatch("caller '" + *caller_id + "' is not the stack top '" +
                                 stack_.back().tool_id + "'");
    }

    CallVerdict verdict = CallVerdict::allow();
    auto fail = [&](Violation v, std::string detail) -> bool {
        violations_.push_back(ViolationRecord{clock_, session_id_, caller_id.value_or(""),
                                              callee_id, v, /*blocked=*/true});
        if (policy_.log_only.count(v)) {
            violations_.back().blocked = false;
            verdict.logged.push_back(v);
            return false;  // logged, keep checking
        }
        std::vector<Violation> logged = std::move(verdict.logged);
        verdict = CallVerdict::block(v, std::move(detail));
        verdict.logged = std::move(logged);
        return true;
    };

    // (1) rate limit over the sliding window (tick > now - window)
    if (auto it = policy_.rate_limits.find(callee_id); it != policy_.rate_limits.end()) {
        const RateLimit& rl = it->second;
        std::int64_t count = 0;
        for (const auto& [tool, tick] : call_log_)
            if (tool == callee_id && tick > clock_ - rl.window) ++count;
        if (count >= rl.max_calls &&
            fail(Violation::RateLimited,
                 "'" + callee_id + "' already called " + std::to_string(count) + " times in " +
                     std::to_string(rl.window) + " ticks (limit " + std::to_string(rl.max_calls) +
                     ")"))
            return verdict;
    }

    // (2) depth
    if (static_cast<std::int64_t>(stack_.size()) + 1 > policy_.max_depth &&
        fail(Violation::DepthExceeded,
             "call depth " + std::to_string(stack_.size() + 1) + " exceeds max " +
                 std::to_string(policy_.max_depth)))
        return verdict;

    // (3) circularity
    if (!policy_.allow_reentrancy) {
        const bool on_stack = std::any_of(stack_.begin(), stack_.end(), [&](const Frame& f) {
            return f.tool_id == callee_id;
        });
        if (on_stack &&
            fail(Violation::CircularCall, "'" + callee_id + "' is already on the call stack"))
            return verdict;
    }

    if (caller_id) {
        const ChainPair chain{*caller_id, callee_id};
        // (4) blocklist
        if (policy_.blocked_chains.count(chain) &&
            fail(Violation::ChainBlocked,
                 "chain " + *caller_id + " -> " + callee_id + " is blocked"))
            return verdict;
        // (5) allowlist, active only when non-empty
        if (!policy_.allowed_chains.empty() && !policy_.allowed_chains.count(chain) &&
            fail(Violation::ChainNotAllowlisted,
                 "chain " + *caller_id + " -> " + callee_id + " is not on the allowlist"))
            return verdict;
        // (6) privilege escalation by declared scopes
        if (!subset(callee_scopes, caller_scopes) && !policy_.permitted_elevations.count(chain)) {
            std::string extra;
            for (const auto& s : callee_scopes)
                if (!caller_scopes.count(s)) extra += (extra.empty() ? "" : ", ") + s;
            if (fail(Violation::PrivilegeEscalation,
                     "callee '" + callee_id + "' holds scopes the caller lacks: " + extra))
                return verdict;
        }
    }

    stack_.push_back(Frame{callee_id, callee_scopes, clock_});
    call_log_.emplace_back(callee_id, clock_);
    return verdict;
}

void CallSession::pop_call(const std::string& tool_id) {
    if (stack_.empty()) throw StackMismatch("pop '" + tool_id + "' on an empty stack");
    if (stack_.back().tool_id != tool_id)
        throw StackMismatch("pop '" + tool_id + "' but stack top is '" + stack_.back().tool_id +
                            "'");
    stack_.pop_back();
}

void CallSession::advance_clock(std::int64_t ticks) {
    if (ticks < 0) throw InvariantViolation("clock cannot move backwards");
    clock_ += ticks;
}

std::string violations_to_jsonl(const std::vector<ViolationRecord>& records) {
    std::string out;
    for (const auto& rec : records) {
        out += rec.to_json().dump();
        out += '\n';
    }
    return out;
}

}  // namespace etdi::callstack
