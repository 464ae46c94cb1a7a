// etdi — command-line front end for the tool-trust library.
//
// Exit codes, uniform across subcommands:
//   0  success / allow
//   1  security denial (invalid signature, invalid token, policy deny,
//      blocked call, declined consent, broken transcript invariant)
//   2  operational error (missing files, malformed input, bad usage)

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

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

namespace {

using etdi::Json;

// ---------------------------------------------------------------------
// Shared plumbing

struct Globals {
    std::string config_path;
    bool strict_flag = false;
    bool lenient_flag = false;
    std::string consent;  // prompt | yes | no
    std::string format;   // text | machine

    // store paths resolved from --config plus per-command flags
    std::string trust_path;
    std::string approvals_path;
    std::string revocations_path;
    std::string stack_policy_path;
    std::vector<std::string> policy_paths;

    bool machine() const { return format == "machine"; }
    etdi::DiffMode diff_mode() const {
        return lenient_flag ? etdi::DiffMode::Lenient : etdi::DiffMode::Strict;
    }
};

Json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw etdi::StoreIOError("cannot open file: " + path);
    Json doc = Json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw etdi::EncodingError("not valid JSON: " + path);
    return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw etdi::StoreIOError("cannot write file: " + path);
    out << text;
    if (!out.flush()) throw etdi::StoreIOError("failed writing file: " + path);
}

// Advisory lock held for the duration of a store write. Uses a .lock
// sidecar so the store file itself is only ever replaced wholesale.
class FileLock {
public:
    explicit FileLock(const std::string& path) {
        fd_ = ::open((path + ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ >= 0) ::flock(fd_, LOCK_EX);
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

bool file_exists(const std::string& path) {
    struct stat st {};
    return ::stat(path.c_str(), &st) == 0;
}

void apply_config_file(Globals& g) {
    if (g.config_path.empty()) return;
    const Json doc = read_json_file(g.config_path);
    auto take = [&](const char* key, std::string& slot) {
        if (slot.empty() && doc.contains(key)) slot = doc.at(key).get<std::string>();
    };
    take("trust_store", g.trust_path);
    take("approval_store", g.approvals_path);
    take("revocations", g.revocations_path);
    take("callstack_policy", g.stack_policy_path);
    if (g.policy_paths.empty() && doc.contains("policy_files"))
        for (const auto& item : doc.at("policy_files"))
            g.policy_paths.push_back(item.get<std::string>());
    take("consent", g.consent);
    take("format", g.format);
    if (!g.strict_flag && !g.lenient_flag && doc.contains("mode")) {
        const std::string mode = doc.at("mode").get<std::string>();
        if (mode == "lenient") g.lenient_flag = true;
        else if (mode == "strict") g.strict_flag = true;
        else throw etdi::EncodingError("config mode must be 'strict' or 'lenient'");
    }
}

void finish_defaults(Globals& g) {
    if (g.consent.empty()) g.consent = "prompt";
    if (g.format.empty()) g.format = "text";
    if (g.consent != "prompt" && g.consent != "yes" && g.consent != "no")
        throw etdi::EncodingError("--consent must be prompt, yes, or no");
    if (g.format != "text" && g.format != "machine")
        throw etdi::EncodingError("--format must be text or machine");
    if (g.strict_flag && g.lenient_flag)
        throw etdi::EncodingError("--strict and --lenient are mutually exclusive");
}

std::string require_path(const std::string& path, const char* what, const char* flag) {
    if (path.empty())
        throw etdi::StoreIOError(std::string("no ") + what + " configured (pass " + flag +
                                 " or set it in --config)");
    return path;
}

bool ask_consent(const Globals& g, const std::string& question) {
    if (g.consent == "yes") return true;
    if (g.consent == "no") return false;
    std::cout << question << " [y/N] " << std::flush;
    std::string line;
    std::getline(std::cin, line);
    return !line.empty() && (line[0] == 'y' || line[0] == 'Y');
}

void print_doc(const Globals& g, const Json& doc) {
    std::cout << (g.machine() ? etdi::canonical_dump(doc) : doc.dump(2)) << "\n";
}

etdi::crypto::TrustStore load_trust(const Globals& g) {
    return etdi::crypto::TrustStore::load_file(
        require_path(g.trust_path, "trust store", "--trust"));
}

etdi::token::RevocationList load_revocations_or_empty(const Globals& g) {
    if (g.revocations_path.empty()) return {};
    return etdi::token::RevocationList::load_file(g.revocations_path);
}

// ---------------------------------------------------------------------
// keygen

struct KeygenArgs {
    std::string key_id;
    std::string out;
    std::string seed_phrase;
    bool force = false;
};

int cmd_keygen(const Globals& g, const KeygenArgs& a) {
    if (file_exists(a.out) && !a.force) {
        std::cerr << "error: " << a.out << " exists (use --force to overwrite)\n";
        return 2;
    }
    const etdi::crypto::KeyPair pair =
        a.seed_phrase.empty() ? etdi::crypto::generate_keypair(a.key_id)
                              : etdi::crypto::keypair_from_seed_phrase(a.key_id, a.seed_phrase);
    write_text_file(a.out, etdi::canonical_dump(pair.to_json()) + "\n");
    ::chmod(a.out.c_str(), 0600);  // the file carries the private seed

    const std::string pub = etdi::base64_encode(pair.public_key.data(), pair.public_key.size());
    if (g.machine()) {
        print_doc(g, Json{{"key_id", pair.key_id},
                          {"algorithm", pair.algorithm},
                          {"public_key", pub}});
    } else {
        std::cout << "key_id: " << pair.key_id << "\n"
                  << "algorithm: " << pair.algorithm << "\n"
                  << "public_key: " << pub << "\n"
                  << "written: " << a.out << " (private seed inside; keep permissions 0600)\n";
    }
    return 0;
}

// ---------------------------------------------------------------------
// sign / verify

struct SignArgs {
    std::string definition;
    std::string key;
    std::string out;
};

int cmd_sign(const Globals& g, const SignArgs& a) {
    const etdi::ToolDefinition def = etdi::definition_from_json(read_json_file(a.definition));
    const auto pair = etdi::crypto::KeyPair::from_json(read_json_file(a.key));
    const auto envelope = etdi::crypto::sign_definition(def, pair);
    const std::string text = etdi::canonical_dump(envelope.to_json());
    if (a.out.empty() || a.out == "-") {
        std::cout << text << "\n";
    } else {
        write_text_file(a.out, text + "\n");
        if (!g.machine())
            std::cout << "signed " << def.id << "@" << def.version.to_string() << " key="
                      << pair.key_id << " -> " << a.out << "\n";
    }
    return 0;
}

struct VerifyArgs {
    std::string envelope;
    std::string trust;
};

int cmd_verify(const Globals& g, const VerifyArgs& a) {
    const auto sd = etdi::crypto::SignedToolDefinition::from_json(read_json_file(a.envelope));
    const auto ts = load_trust(g);
    const auto vr = etdi::crypto::verify_signed_definition(sd, ts);
    if (g.machine()) {
        Json doc{{"verified", vr.verified}, {"detail", vr.detail}};
        if (vr.verified) {
            doc["provider_id"] = vr.provider_id;
            doc["key_id"] = vr.key_id;
        } else {
            doc["failure"] = etdi::crypto::to_string(vr.failure);
        }
        print_doc(g, doc);
    } else if (vr.verified) {
        std::cout << "VERIFIED provider=" << vr.provider_id << " key=" << vr.key_id << "\n";
    } else {
        std::cout << "INVALID " << etdi::crypto::to_string(vr.failure) << ": " << vr.detail
                  << "\n";
    }
    return vr.verified ? 0 : 1;
}

// ---------------------------------------------------------------------
// approve / revoke-approval

struct ApproveArgs {
    std::string envelope;
    std::vector<std::string> grants;
    std::int64_t at = 0;
};

void print_change_report(const etdi::ChangeReport& report) {
    if (report.empty()) return;
    std::cout << "changes since approval:\n";
    const std::string summary = report.summary();
    std::size_t pos = 0;
    while (pos < summary.size()) {
        const std::size_t nl = summary.find('\n', pos);
        const std::string line = summary.substr(pos, nl == std::string::npos ? nl : nl - pos);
        if (!line.empty()) std::cout << "  " << line << "\n";
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
}

int cmd_approve(const Globals& g, const ApproveArgs& a) {
    const auto sd = etdi::crypto::SignedToolDefinition::from_json(read_json_file(a.envelope));
    const auto ts = load_trust(g);
    const std::string store_path =
        require_path(g.approvals_path, "approval store", "--approvals");
    etdi::approval::ApprovalStore store;
    if (file_exists(store_path)) store = etdi::approval::ApprovalStore::load_file(store_path);

    const auto outcome = etdi::approval::evaluate_tool(sd, ts, store);
    using Outcome = etdi::approval::Outcome;
    if (outcome.outcome == Outcome::RejectedSignature) {
        std::cerr << "error: envelope does not verify: " << outcome.detail << "\n";
        return 2;
    }
    const auto& def = sd.definition;
    if (outcome.outcome == Outcome::AllowedExisting) {
        if (g.machine())
            print_doc(g, Json{{"approved", true}, {"outcome", to_string(outcome.outcome)}});
        else
            std::cout << "already approved: " << def.id << "@" << def.version.to_string()
                      << " (unchanged)\n";
        return 0;
    }

    std::string question;
    switch (outcome.outcome) {
        case Outcome::NeedsApprovalNewTool:
            question = "Approve new tool " + def.id + "@" + def.version.to_string() + "?";
            break;
        case Outcome::NeedsApprovalNewVersion:
            question = "Tool " + def.id + " changed version. Re-approve " +
                       def.version.to_string() + "?";
            break;
        case Outcome::NeedsApprovalTampered:
            question = "Tool " + def.id + " content changed without a version change. Re-approve?";
            break;
        case Outcome::DowngradeWarning:
            question = "Tool " + def.id + " presents an OLDER version (" +
                       def.version.to_string() + "). Approve downgrade?";
            break;
        default:
            break;
    }
    if (!g.machine()) {
        std::cout << "tool: " << def.id << " (" << def.name << ") by " << def.provider_id << "\n"
                  << "version: " << def.version.to_string() << "\n"
                  << "permissions:";
        for (const auto& p : def.permissions) std::cout << " " << p;
        std::cout << "\n";
        if (outcome.change_report) print_change_report(*outcome.change_report);
    }
    if (!ask_consent(g, question)) {
        if (g.machine())
            print_doc(g, Json{{"approved", false}, {"outcome", to_string(outcome.outcome)}});
        else
            std::cout << "declined; approval store unchanged\n";
        return 1;
    }

    std::set<std::string> granted(a.grants.begin(), a.grants.end());
    if (granted.empty()) granted = def.permissions;
    FileLock lock(store_path);
    const auto record = etdi::approval::record_approval(sd, granted, store, a.at);
    store.save_file(store_path);
    if (g.machine()) {
        print_doc(g, Json{{"approved", true},
                          {"outcome", to_string(outcome.outcome)},
                          {"record", record.to_json()}});
    } else {
        std::cout << "approved " << def.id << "@" << def.version.to_string() << " at tick "
                  << a.at << "\n";
    }
    return 0;
}

struct RevokeApprovalArgs {
    std::string tool_id;
    std::int64_t at = 0;
};

int cmd_revoke_approval(const Globals& g, const RevokeApprovalArgs& a) {
    const std::string store_path =
        require_path(g.approvals_path, "approval store", "--approvals");
    auto store = etdi::approval::ApprovalStore::load_file(store_path);
    FileLock lock(store_path);
    etdi::approval::revoke_approval(a.tool_id, store, a.at);
    store.save_file(store_path);
    if (g.machine())
        print_doc(g, Json{{"revoked", a.tool_id}, {"at", a.at}});
    else
        std::cout << "revoked approval for " << a.tool_id << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// revoke-key

struct RevokeKeyArgs {
    std::string owner_id;
    std::string key_id;
    bool issuer = false;
};

int cmd_revoke_key(const Globals& g, const RevokeKeyArgs& a) {
    const std::string trust_path = require_path(g.trust_path, "trust store", "--trust");
    auto ts = etdi::crypto::TrustStore::load_file(trust_path);
    FileLock lock(trust_path);
    ts = a.issuer ? ts.with_issuer_key_revoked(a.owner_id, a.key_id)
                  : ts.with_provider_key_revoked(a.owner_id, a.key_id);
    ts.save_file(trust_path);
    if (g.machine())
        print_doc(g, Json{{"revoked_key", a.key_id},
                          {a.issuer ? "issuer_id" : "provider_id", a.owner_id}});
    else
        std::cout << "revoked key " << a.key_id << " of " << a.owner_id << "\n";
    return 0;
}

// ---------------------------------------------------------------------
// token-mint / token-check

struct TokenMintArgs {
    std::string key;
    std::string claims;
    std::string out;
};

int cmd_token_mint(const Globals& g, const TokenMintArgs& a) {
    (void)g;
    const auto pair = etdi::crypto::KeyPair::from_json(read_json_file(a.key));
    const auto claims = etdi::token::Claims::from_json(read_json_file(a.claims));
    const std::string compact = etdi::token::issue_token(pair, claims).serialize();
    if (a.out.empty() || a.out == "-")
        std::cout << compact << "\n";
    else
        write_text_file(a.out, compact + "\n");
    return 0;
}

struct TokenCheckArgs {
    std::string token;
    std::string token_file;
    std::string tool_id;
    std::string tool_version;
    std::int64_t now = 0;
};

int cmd_token_check(const Globals& g, const TokenCheckArgs& a) {
    std::string compact = a.token;
    if (compact.empty() && !a.token_file.empty()) {
        std::ifstream in(a.token_file, std::ios::binary);
        if (!in) throw etdi::StoreIOError("cannot open file: " + a.token_file);
        std::getline(in, compact);
    }
    if (compact.empty())
        throw etdi::EncodingError("pass the token via --token or --token-file");
    if (a.tool_id.empty() != a.tool_version.empty())
        throw etdi::EncodingError("--tool and --tool-version must be given together");

    const auto ts = load_trust(g);
    const auto rl = load_revocations_or_empty(g);
    std::optional<etdi::token::Binding> binding;
    if (!a.tool_id.empty()) binding = etdi::token::Binding{a.tool_id, a.tool_version};

    const auto vr = etdi::token::validate_token(compact, ts, binding, a.now, rl);
    if (g.machine()) {
        Json doc{{"valid", vr.valid}, {"detail", vr.detail}};
        if (vr.valid)
            doc["claims"] = vr.claims->to_json();
        else
            doc["error"] = etdi::token::to_string(vr.error);
        print_doc(g, doc);
    } else if (vr.valid) {
        std::cout << "VALID jti=" << vr.claims->jti << " tool=" << vr.claims->tool_id << "@"
                  << vr.claims->tool_version << " exp=" << vr.claims->exp << "\n";
    } else {
        std::cout << "INVALID " << etdi::token::to_string(vr.error) << ": " << vr.detail << "\n";
    }
    return vr.valid ? 0 : 1;
}

// ---------------------------------------------------------------------
// policy-check

struct PolicyCheckArgs {
    std::string request;
    std::optional<std::string> store_id;
};

int cmd_policy_check(const Globals& g, const PolicyCheckArgs& a) {
    if (g.policy_paths.empty())
        throw etdi::StoreIOError("no policy files configured (pass --policy)");
    const auto ts = load_trust(g);
    std::vector<etdi::policy::SignedPolicyDocument> docs;
    for (const auto& path : g.policy_paths)
        docs.push_back(etdi::policy::SignedPolicyDocument::from_json(
            read_json_file(path), g.diff_mode() == etdi::DiffMode::Strict));
    etdi::policy::LoadReport report;
    const auto store = etdi::policy::load_policy_store(docs, ts, &report);

    const Json req_doc = read_json_file(a.request);
    etdi::policy::AuthorizationRequest req;
    req.principal = req_doc.at("principal").get<std::string>();
    req.action = req_doc.at("action").get<std::string>();
    req.resource = req_doc.at("resource").get<std::string>();
    if (req_doc.contains("context")) req.context = req_doc.at("context");

    const auto decision = store.is_authorized(req, a.store_id);
    if (g.machine()) {
        print_doc(g, Json{{"allowed", decision.allowed},
                          {"determining_rules", decision.determining_rules},
                          {"reason", decision.reason}});
    } else {
        std::cout << (decision.allowed ? "ALLOW" : "DENY") << ": " << decision.reason << "\n";
        for (const auto& rule : decision.determining_rules)
            std::cout << "  rule: " << rule << "\n";
        for (const auto& rej : report.rejected)
            std::cout << "  note: rejected policy doc " << rej.policy_store_id << " ("
                      << rej.reason << ")\n";
    }
    return decision.allowed ? 0 : 1;
}

// ---------------------------------------------------------------------
// stack-check

struct StackCheckArgs {
    std::string calls;
    std::string violations_out;
};

int cmd_stack_check(const Globals& g, const StackCheckArgs& a) {
    const auto policy = etdi::callstack::CallStackPolicy::load_file(
        require_path(g.stack_policy_path, "call-stack policy", "--policy"));
    const Json script = read_json_file(a.calls);
    if (!script.is_array()) throw etdi::EncodingError("call script must be a JSON array");

    auto session = etdi::callstack::begin_session(policy, "cli-session");
    bool any_blocked = false;
    for (const auto& step : script) {
        const std::string op = step.at("op").get<std::string>();
        if (op == "call") {
            std::optional<std::string> caller;
            if (step.contains("caller") && !step.at("caller").get<std::string>().empty())
                caller = step.at("caller").get<std::string>();
            std::set<std::string> caller_scopes, callee_scopes;
            if (step.contains("caller_scopes"))
                for (const auto& s : step.at("caller_scopes"))
                    caller_scopes.insert(s.get<std::string>());
            if (step.contains("callee_scopes"))
                for (const auto& s : step.at("callee_scopes"))
                    callee_scopes.insert(s.get<std::string>());
            const std::string callee = step.at("callee").get<std::string>();
            const auto verdict = session.push_call(caller, callee, caller_scopes, callee_scopes);
            if (g.machine()) {
                Json doc{{"op", "call"}, {"callee", callee}, {"allowed", verdict.allowed}};
                if (verdict.violation)
                    doc["violation"] = etdi::callstack::to_string(*verdict.violation);
                if (!verdict.detail.empty()) doc["detail"] = verdict.detail;
                print_doc(g, doc);
            } else if (verdict.allowed) {
                std::cout << "ALLOW " << callee << " depth=" << session.depth() << "\n";
            } else {
                std::cout << "BLOCK " << callee << " "
                          << etdi::callstack::to_string(*verdict.violation) << ": "
                          << verdict.detail << "\n";
            }
            if (!verdict.allowed) any_blocked = true;
        } else if (op == "return") {
            session.pop_call(step.at("tool").get<std::string>());
            if (!g.machine()) std::cout << "RETURN " << step.at("tool").get<std::string>() << "\n";
        } else if (op == "tick") {
            session.advance_clock(step.value("n", std::int64_t{1}));
        } else {
            throw etdi::EncodingError("unknown call-script op '" + op + "'");
        }
    }
    if (!a.violations_out.empty())
        write_text_file(a.violations_out,
                        etdi::callstack::violations_to_jsonl(session.violations()));
    if (!g.machine())
        std::cout << (any_blocked ? "blocked calls present\n" : "all calls allowed\n");
    return any_blocked ? 1 : 0;
}

// ---------------------------------------------------------------------
// run-scenario

struct RunScenarioArgs {
    std::string scenario;  // canonical name or config file path
    std::string mode;      // "", "etdi", "standard"
    std::optional<std::uint64_t> seed;
    std::string out;
};

bool is_canonical_name(const std::string& s) {
    return s == etdi::scenario::kToolPoisoning || s == etdi::scenario::kRugPull ||
           s == etdi::scenario::kTokenReplay || s == etdi::scenario::kChainAbuse;
}

int cmd_run_scenario(const Globals& g, const RunScenarioArgs& a) {
    etdi::scenario::ScenarioConfig cfg;
    if (is_canonical_name(a.scenario))
        cfg.name = a.scenario;
    else
        cfg = etdi::scenario::ScenarioConfig::load_file(a.scenario);
    if (a.mode == "etdi") cfg.mode = etdi::sim::Mode::Etdi;
    else if (a.mode == "standard") cfg.mode = etdi::sim::Mode::Standard;
    else if (!a.mode.empty()) throw etdi::EncodingError("--mode must be etdi or standard");
    if (a.seed) cfg.seed = *a.seed;
    if (g.lenient_flag) cfg.diff_mode = etdi::DiffMode::Lenient;

    const auto result = etdi::scenario::run_scenario(cfg);
    const std::string jsonl = etdi::sim::transcript_to_jsonl(result.transcript);
    if (!a.out.empty()) write_text_file(a.out, jsonl);
    if (g.machine()) {
        std::cout << jsonl;
    } else {
        for (const auto& e : result.transcript) {
            std::cout << e.seq << "\t[" << e.tick << "]\t" << e.request << "\t"
                      << etdi::sim::to_string(e.type);
            if (!e.tool.empty()) std::cout << "\t" << e.tool;
            if (!e.stage.empty()) std::cout << "\tstage=" << e.stage;
            if (!e.reason.empty()) std::cout << "\treason=" << e.reason;
            if (!e.detail.empty()) std::cout << "\t(" << e.detail << ")";
            std::cout << "\n";
        }
    }
    if (result.invariant.ok) {
        if (!g.machine()) std::cout << "transcript invariant: ok\n";
        return 0;
    }
    for (const auto& problem : result.invariant.problems)
        std::cerr << "invariant violation: " << problem << "\n";
    return 1;
}

// ---------------------------------------------------------------------
// audit

struct AuditArgs {
    std::string violations_path;
};

int cmd_audit(const Globals& g, const AuditArgs& a) {
    Json report = Json::object();

    Json approvals = Json::array();
    Json current = Json::object();
    if (!g.approvals_path.empty() && file_exists(g.approvals_path)) {
        const auto store = etdi::approval::ApprovalStore::load_file(g.approvals_path);
        std::set<std::string> tool_ids;
        for (const auto& rec : store.history()) {
            approvals.push_back(rec.to_json());
            tool_ids.insert(rec.tool_id);
        }
        for (const auto& id : tool_ids)
            if (auto cur = store.current_approval(id)) current[id] = cur->to_json();
    }
    report["approvals"] = approvals;
    report["current_approvals"] = current;

    Json revoked = Json::array();
    if (!g.revocations_path.empty() && file_exists(g.revocations_path)) {
        const auto rl = etdi::token::RevocationList::load_file(g.revocations_path);
        for (const auto& jti : rl.jtis()) revoked.push_back(jti);
    }
    report["revoked_tokens"] = revoked;

    Json violations = Json::array();
    if (!a.violations_path.empty() && file_exists(a.violations_path)) {
        std::ifstream in(a.violations_path, std::ios::binary);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            Json doc = Json::parse(line, nullptr, false);
            if (doc.is_discarded())
                throw etdi::EncodingError("violation log line is not valid JSON");
            violations.push_back(std::move(doc));
        }
    }
    report["violations"] = violations;

    if (!g.trust_path.empty() && file_exists(g.trust_path))
        report["trust"] = etdi::crypto::TrustStore::load_file(g.trust_path).to_json();

    if (g.machine()) {
        print_doc(g, report);
        return 0;
    }
    const auto version_of = [](const Json& rec) {
        const Json& v = rec.at("version");
        return std::to_string(v.at("major").get<std::int64_t>()) + "." +
               std::to_string(v.at("minor").get<std::int64_t>()) + "." +
               std::to_string(v.at("patch").get<std::int64_t>());
    };
    std::cout << "approval history (" << approvals.size() << " records)\n";
    for (const auto& rec : approvals) {
        std::cout << "  " << rec.at("tool_id").get<std::string>() << "@" << version_of(rec)
                  << (rec.at("revoked").get<bool>() ? " [revoked]" : "") << " at tick "
                  << rec.at("approved_at").get<std::int64_t>() << "\n";
    }
    std::cout << "current approvals (" << current.size() << " tools)\n";
    for (const auto& [id, rec] : current.items())
        std::cout << "  " << id << " -> " << version_of(rec) << "\n";
    std::cout << "revoked tokens (" << revoked.size() << ")\n";
    for (const auto& jti : revoked) std::cout << "  " << jti.get<std::string>() << "\n";
    std::cout << "call violations (" << violations.size() << ")\n";
    for (const auto& v : violations)
        std::cout << "  tick " << v.at("tick").get<std::int64_t>() << " "
                  << v.at("caller").get<std::string>() << " -> "
                  << v.at("callee").get<std::string>() << " "
                  << v.at("violation").get<std::string>() << "\n";
    return 0;
}

}  // namespace

// ---------------------------------------------------------------------

int main(int argc, char** argv) {
    Globals g;
    CLI::App app{"etdi — signed tool definitions, approvals, tokens, policy, call stacks"};
    app.require_subcommand(1);
    app.add_option("--config", g.config_path, "CLI config file (store paths, defaults)");
    app.add_flag("--strict", g.strict_flag, "strict mode: any definition change requires re-approval");
    app.add_flag("--lenient", g.lenient_flag, "lenient mode: only security-relevant changes do");
    app.add_option("--consent", g.consent, "consent mode: prompt | yes | no");
    app.add_option("--format", g.format, "output format: text | machine");

    // store-path flags shared by several commands; registered per command so
    // `--help` stays honest about what each one reads
    auto add_trust = [&](CLI::App* sc) { sc->add_option("--trust", g.trust_path, "trust store file"); };
    auto add_approvals = [&](CLI::App* sc) {
        sc->add_option("--approvals", g.approvals_path, "approval store file (JSONL)");
    };
    auto add_revocations = [&](CLI::App* sc) {
        sc->add_option("--revocations", g.revocations_path, "token revocation list file");
    };

    KeygenArgs keygen;
    auto* sc_keygen = app.add_subcommand("keygen", "generate a signing keypair");
    sc_keygen->add_option("--key-id", keygen.key_id, "key identifier")->required();
    sc_keygen->add_option("--out", keygen.out, "keypair file to write")->required();
    sc_keygen->add_option("--seed-phrase", keygen.seed_phrase, "derive deterministically from a phrase");
    sc_keygen->add_flag("--force", keygen.force, "overwrite an existing file");

    SignArgs sign;
    auto* sc_sign = app.add_subcommand("sign", "sign a tool definition");
    sc_sign->add_option("--definition", sign.definition, "tool definition JSON")->required();
    sc_sign->add_option("--key", sign.key, "keypair file")->required();
    sc_sign->add_option("--out", sign.out, "envelope file to write (default stdout)");

    VerifyArgs verify;
    auto* sc_verify = app.add_subcommand("verify", "verify a signed definition");
    sc_verify->add_option("--envelope", verify.envelope, "signed definition JSON")->required();
    add_trust(sc_verify);

    ApproveArgs approve;
    auto* sc_approve = app.add_subcommand("approve", "review and approve a signed definition");
    sc_approve->add_option("--envelope", approve.envelope, "signed definition JSON")->required();
    sc_approve->add_option("--grant", approve.grants, "grant only these permissions (repeatable)");
    sc_approve->add_option("--at", approve.at, "logical approval timestamp");
    add_trust(sc_approve);
    add_approvals(sc_approve);

    RevokeApprovalArgs revoke_approval;
    auto* sc_revoke_approval = app.add_subcommand("revoke-approval", "withdraw consent for a tool");
    sc_revoke_approval->add_option("--tool", revoke_approval.tool_id, "tool id")->required();
    sc_revoke_approval->add_option("--at", revoke_approval.at, "logical timestamp");
    add_approvals(sc_revoke_approval);

    RevokeKeyArgs revoke_key;
    auto* sc_revoke_key = app.add_subcommand("revoke-key", "mark a trusted key revoked");
    sc_revoke_key->add_option("--owner", revoke_key.owner_id, "provider or issuer id")->required();
    sc_revoke_key->add_option("--key-id", revoke_key.key_id, "key id")->required();
    sc_revoke_key->add_flag("--issuer", revoke_key.issuer, "owner is a token issuer");
    add_trust(sc_revoke_key);

    TokenMintArgs token_mint;
    auto* sc_token_mint = app.add_subcommand("token-mint", "issue a signed token");
    sc_token_mint->add_option("--key", token_mint.key, "issuer keypair file")->required();
    sc_token_mint->add_option("--claims", token_mint.claims, "claims JSON file")->required();
    sc_token_mint->add_option("--out", token_mint.out, "token file to write (default stdout)");

    TokenCheckArgs token_check;
    auto* sc_token_check = app.add_subcommand("token-check", "validate a token");
    sc_token_check->add_option("--token", token_check.token, "compact token string");
    sc_token_check->add_option("--token-file", token_check.token_file, "file holding the token");
    sc_token_check->add_option("--tool", token_check.tool_id, "expected bound tool id");
    sc_token_check->add_option("--tool-version", token_check.tool_version, "expected bound version");
    sc_token_check->add_option("--now", token_check.now, "current logical time")->required();
    add_trust(sc_token_check);
    add_revocations(sc_token_check);

    PolicyCheckArgs policy_check;
    std::string policy_store_id;
    auto* sc_policy_check = app.add_subcommand("policy-check", "evaluate an authorization request");
    sc_policy_check->add_option("--request", policy_check.request, "request JSON file")->required();
    sc_policy_check->add_option("--policy", g.policy_paths, "signed policy document (repeatable)");
    sc_policy_check->add_option("--store", policy_store_id, "restrict to one policy store id");
    add_trust(sc_policy_check);

    StackCheckArgs stack_check;
    auto* sc_stack_check = app.add_subcommand("stack-check", "replay a call script against a policy");
    sc_stack_check->add_option("--policy", g.stack_policy_path, "call-stack policy JSON");
    sc_stack_check->add_option("--calls", stack_check.calls, "call script JSON file")->required();
    sc_stack_check->add_option("--violations-out", stack_check.violations_out,
                               "write the violation log here (JSONL)");

    RunScenarioArgs run_scenario;
    auto* sc_run = app.add_subcommand("run-scenario", "run an attack scenario");
    sc_run->add_option("scenario", run_scenario.scenario,
                       "TOOL_POISONING | RUG_PULL | TOKEN_REPLAY | CHAIN_ABUSE or a config file")
        ->required();
    sc_run->add_option("--mode", run_scenario.mode, "etdi | standard");
    std::uint64_t seed_value = 0;
    auto* seed_opt = sc_run->add_option("--seed", seed_value, "scenario seed");
    sc_run->add_option("--out", run_scenario.out, "write the transcript here (JSONL)");

    AuditArgs audit;
    auto* sc_audit = app.add_subcommand("audit", "print approval history, revocations, violations");
    sc_audit->add_option("--violations", audit.violations_path, "violation log file (JSONL)");
    add_trust(sc_audit);
    add_approvals(sc_audit);
    add_revocations(sc_audit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // operational error, never a security signal
    }

    try {
        apply_config_file(g);
        finish_defaults(g);
        if (seed_opt->count() > 0) run_scenario.seed = seed_value;
        if (sc_keygen->parsed()) return cmd_keygen(g, keygen);
        if (sc_sign->parsed()) return cmd_sign(g, sign);
        if (sc_verify->parsed()) return cmd_verify(g, verify);
        if (sc_approve->parsed()) return cmd_approve(g, approve);
        if (sc_revoke_approval->parsed()) return cmd_revoke_approval(g, revoke_approval);
        if (sc_revoke_key->parsed()) return cmd_revoke_key(g, revoke_key);
        if (sc_token_mint->parsed()) return cmd_token_mint(g, token_mint);
        if (sc_token_check->parsed()) return cmd_token_check(g, token_check);
        if (sc_policy_check->parsed()) {
            if (sc_policy_check->count("--store") > 0) policy_check.store_id = policy_store_id;
            return cmd_policy_check(g, policy_check);
        }
        if (sc_stack_check->parsed()) return cmd_stack_check(g, stack_check);
        if (sc_run->parsed()) return cmd_run_scenario(g, run_scenario);
        if (sc_audit->parsed()) return cmd_audit(g, audit);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const etdi::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
