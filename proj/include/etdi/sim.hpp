#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "etdi/approval.hpp"
#include "etdi/callstack.hpp"
#include "etdi/policy.hpp"
#include "etdi/token.hpp"

namespace etdi::sim {

// -------------------------------------------------------------------------
// Transcript

enum class EventType {
    Discovered,
    Verified,
    Rejected,
    Prompted,
    Approved,
    TokenChecked,
    PolicyChecked,
    StackChecked,
    Invoked,
    Result,
    Denied,
};

const char* to_string(EventType t);
EventType event_type_from_string(const std::string& name);  // throws EncodingError

// One transcript line. Every field is always serialized (empty where not
// applicable) so transcripts are byte-stable and diffable.
struct Event {
    std::uint64_t seq = 0;  // 1-based position in the transcript
    std::int64_t tick = 0;
    std::string request;  // "d<n>" discovery pass, "r<n>" / "r<n>.<k>" invocations
    EventType type = EventType::Discovered;
    std::string tool;
    std::string stage;   // DENIED: approval|token|scope|entitlement|policy|stack|chain|consent
    std::string reason;  // outcome / error name, e.g. UNKNOWN_KEY, TOOL_BINDING_MISMATCH
    std::string detail;
    bool ok = true;

    Json to_json() const;
    static Event from_json(const Json& doc);
};

using Transcript = std::vector<Event>;

std::string transcript_to_jsonl(const Transcript& transcript);
Transcript transcript_from_jsonl(const std::string& text);

struct TranscriptCheck {
    bool ok = true;
    std::vector<std::string> problems;
};

// The transcript safety invariant: every INVOKED event is preceded, under
// the same request id, by passing VERIFIED, TOKEN_CHECKED, POLICY_CHECKED,
// and STACK_CHECKED events. Standard-mode (baseline) transcripts violate it
// by construction whenever anything is invoked.
TranscriptCheck check_transcript(const Transcript& transcript);

// -------------------------------------------------------------------------
// Servers

struct Behavior {
    enum class Kind { Result, Exfiltrate, Chain };

    Kind kind = Kind::Result;
    std::string payload;              // Result: scripted response
    std::string target;               // Exfiltrate: marker destination
    std::vector<std::string> calls;   // Chain: callee tool ids, in order

    Json to_json() const;
    static Behavior from_json(const Json& doc);  // throws EncodingError
};

struct SimServer {
    std::string server_id;
    std::vector<crypto::SignedToolDefinition> tools;
    std::map<std::string, Behavior> behaviors;

    const crypto::SignedToolDefinition* find_tool(const std::string& tool_id) const;
    // Swaps the hosted definition/behavior in place: the rug-pull hook.
    void replace_tool(crypto::SignedToolDefinition sd, Behavior behavior);
};

// -------------------------------------------------------------------------
// Client

enum class Mode { Etdi, Standard };

// Consent answers for approval prompts: fixed yes/no, or a scripted
// sequence (exhausted script answers "no").
struct Consent {
    enum class Policy { Yes, No, Script };

    Policy policy = Policy::Yes;
    std::deque<bool> script;

    bool next();
};

enum class TamperPolicy { Prompt, Block };          // same-version content change
enum class DowngradePolicy { Block, Warn, Allow };  // older-than-approved version

struct ClientConfig {
    Mode mode = Mode::Etdi;
    // Lenient accepts re-signed definitions whose only drift from the
    // discovery-time copy is cosmetic (name/description).
    DiffMode diff_mode = DiffMode::Strict;
    TamperPolicy tamper_policy = TamperPolicy::Prompt;
    DowngradePolicy downgrade_policy = DowngradePolicy::Block;
    std::map<std::string, std::string> user_policy_store;  // user id -> policy_store_id
    int recursion_guard = 8;  // standard-mode chain depth stop (sim guard, not a defense)
};

struct DiscoveryReport {
    std::vector<std::string> verified;                          // tool ids
    std::vector<std::pair<std::string, std::string>> rejected;  // (tool id, reason)
};

struct InvokeSpec {
    std::string tool_id;
    std::string action = "Tool::Invoke";
    std::string resource;  // defaults to the tool id
    Json params = Json::object();
    std::optional<std::set<std::string>> action_scopes;  // defaults to def.permissions
    std::string tool_token;                              // compact JWS
    std::optional<std::string> user_token;
    std::string user_id;
    Json user_context = Json::object();
};

// In-process MCP host+client. Owns the trust/approval/revocation/policy
// state and the call-stack session; servers are borrowed so scenario code
// can mutate them between calls.
class SimClient {
public:
    SimClient(ClientConfig config, crypto::TrustStore trust,
              callstack::CallStackPolicy stack_policy, std::string session_id = "session-1");

    void set_policy_store(policy::PolicyStore store);
    void set_revocations(token::RevocationList rl);
    void set_tool_token(const std::string& tool_id, std::string compact);
    const std::string* tool_token(const std::string& tool_id) const;

    // Runs discovery over every server. `servers` must outlive the client's
    // use; invocation re-fetches definitions from it.
    DiscoveryReport discover(std::vector<SimServer>& servers);

    // Full invocation pipeline (approval -> token -> scope -> entitlement ->
    // policy -> stack -> execution). Returns a copy of the request's final
    // event (RESULT or DENIED). Throws UnknownTool for ids never discovered.
    Event invoke(const InvokeSpec& spec);

    void advance_clock(std::int64_t ticks);
    std::int64_t now() const { return clock_; }

    const Transcript& transcript() const { return transcript_; }
    Consent& consent() { return consent_; }
    approval::ApprovalStore& approvals() { return approvals_; }
    const crypto::TrustStore& trust() const { return trust_; }
    callstack::CallSession& session() { return session_; }
    const ClientConfig& config() const { return config_; }

private:
    struct CatalogEntry {
        std::size_t server_index = 0;
        ToolDefinition discovered;  // definition as seen at discovery time
    };

    Event& emit(EventType type, const std::string& request, const std::string& tool);
    void discover_one(std::size_t server_index, const crypto::SignedToolDefinition& sd,
                      const std::string& request, DiscoveryReport& report);
    void prompt_and_record(const crypto::SignedToolDefinition& sd,
                           const approval::VerificationOutcome& outcome,
                           const std::string& request, DiscoveryReport& report);
    // These return the index of the request's final event in transcript_.
    std::size_t invoke_inner(const InvokeSpec& spec, const std::string& request, int depth);
    std::size_t invoke_standard(const InvokeSpec& spec, const std::string& request, int depth);
    std::size_t run_behavior(const InvokeSpec& spec, const std::string& request,
                             const std::string& tool_id, int depth);

    ClientConfig config_;
    crypto::TrustStore trust_;
    approval::ApprovalStore approvals_;
    token::RevocationList revocations_;
    std::optional<policy::PolicyStore> policies_;
    Consent consent_;
    callstack::CallSession session_;
    std::vector<SimServer>* servers_ = nullptr;
    std::map<std::string, CatalogEntry> catalog_;
    std::map<std::string, bool> name_consent_;  // standard mode: consent by display name
    std::map<std::string, std::string> tool_tokens_;
    Transcript transcript_;
    std::int64_t clock_ = 0;
    std::uint64_t discovery_count_ = 0;
    std::uint64_t request_count_ = 0;
};

}  // namespace etdi::sim
