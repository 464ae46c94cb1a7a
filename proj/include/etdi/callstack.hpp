#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "etdi/canonical.hpp"

namespace etdi::callstack {

enum class Violation {
    ChainBlocked,
    ChainNotAllowlisted,
    DepthExceeded,
    CircularCall,
    PrivilegeEscalation,
    RateLimited,
};

const char* to_string(Violation v);
Violation violation_from_string(const std::string& name);  // throws InvalidPolicy

using ChainPair = std::pair<std::string, std::string>;  // (caller_id, callee_id)

struct RateLimit {
    std::int64_t max_calls = 0;
    std::int64_t window = 1;  // logical ticks
};

struct CallStackPolicy {
    std::int64_t max_depth = 1;
    std::set<ChainPair> allowed_chains;  // non-empty => acts as an allowlist
    std::set<ChainPair> blocked_chains;
    bool allow_reentrancy = false;
    std::set<ChainPair> permitted_elevations;
    std::map<std::string, RateLimit> rate_limits;  // callee tool_id -> limit
    std::set<Violation> log_only;  // violation classes logged instead of blocked

    Json to_json() const;
    static CallStackPolicy from_json(const Json& doc);  // throws InvalidPolicy
    static CallStackPolicy load_file(const std::string& path);
};

struct CallVerdict {
    bool allowed = false;
    std::optional<Violation> violation;   // the blocking violation
    std::vector<Violation> logged;        // log-only violations that fired
    std::string detail;

    static CallVerdict allow();
    static CallVerdict block(Violation v, std::string detail);
};

struct Frame {
    std::string tool_id;
    std::set<std::string> granted_scopes;
    std::int64_t entered_at_tick = 0;
};

struct ViolationRecord {
    std::int64_t tick = 0;
    std::string session_id;
    std::string caller;  // empty for root calls
    std::string callee;
    Violation violation = Violation::ChainBlocked;
    bool blocked = true;

    Json to_json() const;  // {tick, session_id, caller, callee, violation}
};

// Per-session call-stack verifier. Checks run in a fixed order so exactly
// one violation decides a BLOCK:
//   rate limit -> depth -> circularity -> blocked chains -> allowlist ->
//   privilege escalation
// Root calls (no caller) skip the chain and escalation checks. Violation
// classes listed in policy.log_only are recorded but do not block.
class CallSession {
public:
    CallSession(CallStackPolicy policy, std::string session_id);  // throws InvalidPolicy

    CallVerdict push_call(const std::optional<std::string>& caller_id,
                          const std::string& callee_id,
                          const std::set<std::string>& caller_scopes,
                          const std::set<std::string>& callee_scopes);  // throws CallerMismatch
    void pop_call(const std::string& tool_id);  // throws StackMismatch
    void advance_clock(std::int64_t ticks);     // throws InvariantViolation on negative

    std::int64_t now() const { return clock_; }
    std::size_t depth() const { return stack_.size(); }
    const std::vector<Frame>& stack() const { return stack_; }
    const std::vector<std::pair<std::string, std::int64_t>>& call_log() const { return call_log_; }
    const std::vector<ViolationRecord>& violations() const { return violations_; }
    const CallStackPolicy& policy() const { return policy_; }
    const std::string& session_id() const { return session_id_; }

private:
    CallStackPolicy policy_;
    std::string session_id_;
    std::vector<Frame> stack_;
    std::vector<std::pair<std::string, std::int64_t>> call_log_;  // allowed pushes only
    std::vector<ViolationRecord> violations_;
    std::int64_t clock_ = 0;
};

CallSession begin_session(const CallStackPolicy& policy, std::string session_id = "session-1");

// Serializes violation records as line-delimited JSON.
std::string violations_to_jsonl(const std::vector<ViolationRecord>& records);

}  // namespace etdi::callstack
