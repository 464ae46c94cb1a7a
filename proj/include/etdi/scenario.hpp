#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "etdi/sim.hpp"

namespace etdi::scenario {

// Declarative tool hosting: the definition is signed at materialization time
// with a seed-derived key for `signer`; `trusted` controls whether that key
// is registered in the run's trust store (false models a forging attacker).
struct ToolSpec {
    ToolDefinition definition;
    std::string signer = "provider";
    bool trusted = true;
    sim::Behavior behavior;
};

struct ServerSpec {
    std::string server_id;
    std::vector<ToolSpec> tools;
};

// One scripted invocation. Token modes:
//   fresh    mint now, bound to the tool's currently hosted version
//   reuse    present the token previously minted under `label`
//   expired  mint with exp == iat (dead on arrival)
//   revoked  mint, then put its jti on the revocation list
//   none     present an empty token string
struct InvocationSpec {
    std::string tool_id;
    std::string token_mode = "fresh";
    std::string label;  // names a fresh token for later reuse
    std::string user_id;
    std::string action = "Tool::Invoke";
    std::string resource;  // defaults to the tool id
};

struct UserSpec {
    std::set<std::string> scopes;     // minted into the user token
    std::string policy_store_id;      // selects the policy store, may be empty
};

inline constexpr const char* kToolPoisoning = "TOOL_POISONING";
inline constexpr const char* kRugPull = "RUG_PULL";
inline constexpr const char* kTokenReplay = "TOKEN_REPLAY";
inline constexpr const char* kChainAbuse = "CHAIN_ABUSE";
inline constexpr const char* kCustom = "CUSTOM";

struct ScenarioConfig {
    std::string name;  // TOOL_POISONING | RUG_PULL | TOKEN_REPLAY | CHAIN_ABUSE | CUSTOM
    sim::Mode mode = sim::Mode::Etdi;
    std::uint64_t seed = 42;
    std::vector<bool> consent_script;          // empty -> scenario default
    std::vector<std::int64_t> clock_schedule;  // ticks before k-th invocation (default 1)
    std::vector<std::string> policy_files;     // signed docs replacing built-in permit-all
    std::optional<callstack::CallStackPolicy> stack_policy;
    std::optional<std::string> trust_file;     // extra trust entries merged in
    DiffMode diff_mode = DiffMode::Strict;
    std::vector<ServerSpec> servers;           // CUSTOM only
    std::vector<InvocationSpec> invocations;   // CUSTOM only
    std::map<std::string, UserSpec> users;

    Json to_json() const;
    static ScenarioConfig from_json(const Json& doc);   // throws EncodingError
    static ScenarioConfig load_file(const std::string& path);
};

struct ScenarioResult {
    sim::Transcript transcript;
    sim::TranscriptCheck invariant;
};

// Builds the named attack fixture (or the CUSTOM servers/invocations given
// in the config), runs discovery and the scripted invocations, and returns
// the transcript plus the transcript-invariant verdict. Deterministic:
// identical config => byte-identical transcript. Throws UnknownScenario for
// unrecognized names and EncodingError for CUSTOM overrides on canonical
// names.
ScenarioResult run_scenario(const ScenarioConfig& config);

}  // namespace etdi::scenario
