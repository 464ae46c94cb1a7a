#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "etdi/crypto.hpp"

namespace etdi::approval {

// Persisted user consent: which tool, which version, which exact content,
// and which of the declared permissions were granted.
struct ApprovalRecord {
    std::string tool_id;
    SemVer version;
    ContentHash content_hash;
    std::set<std::string> granted_permissions;
    std::int64_t approved_at = 0;
    bool revoked = false;  // tombstone: voids all earlier records for tool_id

    Json to_json() const;
    static ApprovalRecord from_json(const Json& doc);
};

enum class Outcome {
    AllowedExisting,
    NeedsApprovalNewTool,
    NeedsApprovalNewVersion,
    NeedsApprovalTampered,
    RejectedSignature,
    DowngradeWarning,
};

const char* to_string(Outcome o);

struct VerificationOutcome {
    Outcome outcome = Outcome::RejectedSignature;
    // Populated when the presented definition differs from the approval
    // snapshot (tampered, new version, downgrade).
    std::optional<ChangeReport> change_report;
    std::string detail;
    // Snapshot the decision was made against, when one existed.
    std::optional<ApprovalRecord> approved;
    // Set for RejectedSignature: the specific crypto failure.
    std::optional<crypto::VerifyFailure> crypto_failure;
};

// Append-only approval log. The current approval for a tool is its
// highest-version record that postdates any revocation tombstone.
class ApprovalStore {
public:
    ApprovalStore() = default;

    const std::vector<ApprovalRecord>& history() const { return log_; }
    std::optional<ApprovalRecord> current_approval(const std::string& tool_id) const;
    void append(ApprovalRecord record);

    // Line-delimited JSON records, one per line, oldest first.
    std::string dump_jsonl() const;
    static ApprovalStore parse_jsonl(const std::string& text);
    static ApprovalStore load_file(const std::string& path);  // throws StoreIOError
    void save_file(const std::string& path) const;
    static void append_file(const std::string& path, const ApprovalRecord& record);

private:
    std::vector<ApprovalRecord> log_;
};

// The verification-and-approval decision tree, evaluated read-only against
// the store:
//   signature invalid                      -> RejectedSignature
//   no record for the tool                 -> NeedsApprovalNewTool
//   same version, same content hash        -> AllowedExisting
//   same version, different content hash   -> NeedsApprovalTampered
//   older version than approved            -> DowngradeWarning
//   newer version than approved            -> NeedsApprovalNewVersion
VerificationOutcome evaluate_tool(const crypto::SignedToolDefinition& sd,
                                  const crypto::TrustStore& ts,
                                  const ApprovalStore& store);

// Persists consent. Throws SubsetViolation when the granted set is not a
// subset of the definition's declared permissions.
ApprovalRecord record_approval(const crypto::SignedToolDefinition& sd,
                               const std::set<std::string>& granted_permissions,
                               ApprovalStore& store,
                               std::int64_t approved_at);

// Withdraws consent for a tool; the next evaluation sees a new tool.
// Throws NotFound when no current approval exists.
void revoke_approval(const std::string& tool_id, ApprovalStore& store, std::int64_t at);

}  // namespace etdi::approval
