#include "etdi/approval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "etdi/errors.hpp"

namespace etdi::approval {

namespace {

Json string_set_to_json(const std::set<std::string>& values) {
    Json arr = Json::array();
    for (const auto& v : values) arr.push_back(v);
    return arr;
}

std::set<std::string> string_set_from_json(const Json& arr, const std::string& field) {
    if (!arr.is_array()) throw EncodingError("approval field '" + field + "' must be an array");
    std::set<std::string> out;
    for (const auto& item : arr) {
        if (!item.is_string()) throw EncodingError("approval field '" + field + "' must contain strings");
        if (!out.insert(item.get<std::string>()).second)
            throw EncodingError("approval field '" + field + "' has duplicate entry");
    }
    return out;
}

// Diff between the approval snapshot (what the user consented to) and the
// definition now being presented. Only fields the snapshot retains are
// comparable; permission changes are measured against the granted set.
ChangeReport snapshot_diff(const ApprovalRecord& approved, const ToolDefinition& presented) {
    ChangeReport report;
    const ContentHash presented_hash = content_hash(presented);
    if (approved.version != presented.version) {
        FieldChange fc;
        fc.field = "version";
        fc.classification = ChangeClass::SecurityRelevant;
        fc.old_value = approved.version.to_string();
        fc.new_value = presented.version.to_string();
        report.changes.push_back(std::move(fc));
    }
    if (approved.content_hash.hex != presented_hash.hex) {
        FieldChange fc;
        fc.field = "content_hash";
        fc.classification = ChangeClass::SecurityRelevant;
        fc.old_value = approved.content_hash.hex;
        fc.new_value = presented_hash.hex;
        report.changes.push_back(std::move(fc));
    }
    std::vector<std::string> added;
    std::vector<std::string> removed;
    std::set_difference(presented.permissions.begin(), presented.permissions.end(),
                        approved.granted_permissions.begin(), approved.granted_permissions.end(),
                        std::back_inserter(added));
    std::set_difference(approved.granted_permissions.begin(), approved.granted_permissions.end(),
                        presented.permissions.begin(), presented.permissions.end(),
                        std::back_inserter(removed));
    if (!added.empty() || !removed.empty()) {
        FieldChange fc;
        fc.field = "permissions";
        fc.classification = ChangeClass::SecurityRelevant;
        fc.added = std::move(added);
        fc.removed = std::move(removed);
        report.changes.push_back(std::move(fc));
    }
    report.requires_reapproval = report.has_security_relevant();
    return report;
}

}  // namespace

Json ApprovalRecord::to_json() const {
    Json doc;
    doc["tool_id"] = tool_id;
    doc["version"] = {{"major", version.major}, {"minor", version.minor}, {"patch", version.patch}};
    doc["content_hash"] = content_hash.hex;
    doc["granted_permissions"] = string_set_to_json(granted_permissions);
    doc["approved_at"] = approved_at;
    doc["revoked"] = revoked;
    return doc;
}

ApprovalRecord ApprovalRecord::from_json(const Json& doc) {
    if (!doc.is_object()) throw EncodingError("approval record must be a JSON object");
    for (const auto& key : {"tool_id", "version", "content_hash", "granted_permissions",
                            "approved_at", "revoked"}) {
        if (!doc.contains(key)) throw EncodingError(std::string("approval record missing field '") + key + "'");
    }
    ApprovalRecord rec;
    if (!doc["tool_id"].is_string()) throw EncodingError("approval field 'tool_id' must be a string");
    rec.tool_id = doc["tool_id"].get<std::string>();
    const Json& ver = doc["version"];
    if (!ver.is_object() || !ver.contains("major") || !ver.contains("minor") || !ver.contains("patch") ||
        !ver["major"].is_number_integer() || !ver["minor"].is_number_integer() ||
        !ver["patch"].is_number_integer())
        throw EncodingError("approval field 'version' must hold integer major/minor/patch");
    rec.version = SemVer{ver["major"].get<std::int64_t>(), ver["minor"].get<std::int64_t>(),
                         ver["patch"].get<std::int64_t>()};
    if (!doc["content_hash"].is_string()) throw EncodingError("approval field 'content_hash' must be a string");
    rec.content_hash.hex = doc["content_hash"].get<std::string>();
    if (!rec.content_hash.valid())
        throw EncodingError("approval field 'content_hash' must be 64 lowercase hex chars");
    rec.granted_permissions = string_set_from_json(doc["granted_permissions"], "granted_permissions");
    if (!doc["approved_at"].is_number_integer())
        throw EncodingError("approval field 'approved_at' must be an integer");
    rec.approved_at = doc["approved_at"].get<std::int64_t>();
    if (!doc["revoked"].is_boolean()) throw EncodingError("approval field 'revoked' must be a boolean");
    rec.revoked = doc["revoked"].get<bool>();
    if (rec.tool_id.empty()) throw EncodingError("approval field 'tool_id' must be non-empty");
    return rec;
}

std::optional<ApprovalRecord> ApprovalStore::current_approval(const std::string& tool_id) const {
    std::optional<ApprovalRecord> best;
    for (const auto& rec : log_) {
        if (rec.tool_id != tool_id) continue;
        if (rec.revoked) {
            best.reset();  // tombstone voids everything before it
        } else if (!best || best->version < rec.version ||
                   (best->version == rec.version && best->approved_at <= rec.approved_at)) {
            best = rec;
        }
    }
    return best;
}

void ApprovalStore::append(ApprovalRecord record) { log_.push_back(std::move(record)); }

std::string ApprovalStore::dump_jsonl() const {
    std::string out;
    for (const auto& rec : log_) {
        out += rec.to_json().dump();
        out += '\n';
    }
    return out;
}

ApprovalStore ApprovalStore::parse_jsonl(const std::string& text) {
    ApprovalStore store;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json doc = Json::parse(line, nullptr, false);
        if (doc.is_discarded())
            throw EncodingError("approval log line " + std::to_string(lineno) + " is not valid JSON");
        store.append(ApprovalRecord::from_json(doc));
    }
    return store;
}

ApprovalStore ApprovalStore::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StoreIOError("cannot open approval log: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_jsonl(buf.str());
}

void ApprovalStore::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreIOError("cannot write approval log: " + path);
    out << dump_jsonl();
    if (!out) throw StoreIOError("failed writing approval log: " + path);
}

void ApprovalStore::append_file(const std::string& path, const ApprovalRecord& record) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw StoreIOError("cannot append to approval log: " + path);
    out << record.to_json().dump() << '\n';
    if (!out) throw StoreIOError("failed appending to approval log: " + path);
}

VerificationOutcome evaluate_tool(const crypto::SignedToolDefinition& sd,
                                  const crypto::TrustStore& ts,
                                  const ApprovalStore& store) {
    VerificationOutcome out;
    crypto::VerificationResult vr = crypto::verify_signed_definition(sd, ts);
    if (!vr.verified) {
        out.outcome = Outcome::RejectedSignature;
        out.crypto_failure = vr.failure;
        out.detail = vr.detail.empty() ? std::string(crypto::to_string(vr.failure)) : vr.detail;
        return out;
    }
    const ToolDefinition& def = sd.definition;
    std::optional<ApprovalRecord> approved = store.current_approval(def.id);
    if (!approved) {
        out.outcome = Outcome::NeedsApprovalNewTool;
        out.detail = "no prior approval for tool '" + def.id + "'";
        return out;
    }
    out.approved = approved;
    const ContentHash presented_hash = content_hash(def);
    if (def.version == approved->version) {
        if (presented_hash.hex == approved->content_hash.hex) {
            // Same bytes the user consented to; re-check that the stored
            // grant is still covered by the declared permission set.
            std::vector<std::string> stray;
            std::set_difference(approved->granted_permissions.begin(),
                                approved->granted_permissions.end(), def.permissions.begin(),
                                def.permissions.end(), std::back_inserter(stray));
            if (!stray.empty()) {
                out.outcome = Outcome::NeedsApprovalTampered;
                out.change_report = snapshot_diff(*approved, def);
                out.detail = "granted permission '" + stray.front() +
                             "' is no longer declared by the tool";
                return out;
            }
            out.outcome = Outcome::AllowedExisting;
            out.detail = "definition matches approval of " + def.version.to_string();
            return out;
        }
        out.outcome = Outcome::NeedsApprovalTampered;
        out.change_report = snapshot_diff(*approved, def);
        out.detail = "definition changed without a version change (approved " +
                     approved->content_hash.hex.substr(0, 12) + "..., presented " +
                     presented_hash.hex.substr(0, 12) + "...)";
        return out;
    }
    if (def.version < approved->version) {
        out.outcome = Outcome::DowngradeWarning;
        out.change_report = snapshot_diff(*approved, def);
        out.detail = "presented " + def.version.to_string() + " is older than approved " +
                     approved->version.to_string();
        return out;
    }
    out.outcome = Outcome::NeedsApprovalNewVersion;
    out.change_report = snapshot_diff(*approved, def);
    out.detail = "version changed from " + approved->version.to_string() + " to " +
                 def.version.to_string();
    return out;
}

ApprovalRecord record_approval(const crypto::SignedToolDefinition& sd,
                               const std::set<std::string>& granted_permissions,
                               ApprovalStore& store,
                               std::int64_t approved_at) {
    const ToolDefinition& def = sd.definition;
    for (const auto& perm : granted_permissions) {
        if (!def.permissions.count(perm))
            throw SubsetViolation("granted permission '" + perm + "' is not declared by tool '" +
                                  def.id + "'");
    }
    ApprovalRecord rec;
    rec.tool_id = def.id;
    rec.version = def.version;
    rec.content_hash = content_hash(def);
    rec.granted_permissions = granted_permissions;
    rec.approved_at = approved_at;
    rec.revoked = false;
    store.append(rec);
    return rec;
}

void revoke_approval(const std::string& tool_id, ApprovalStore& store, std::int64_t at) {
    if (!store.current_approval(tool_id))
        throw NotFound("no current approval for tool '" + tool_id + "'");
    ApprovalRecord tombstone;
    tombstone.tool_id = tool_id;
    tombstone.version = SemVer{0, 0, 0};
    tombstone.content_hash.hex = std::string(64, '0');
    tombstone.approved_at = at;
    tombstone.revoked = true;
    store.append(tombstone);
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::AllowedExisting: return "ALLOWED_EXISTING";
        case Outcome::NeedsApprovalNewTool: return "NEEDS_APPROVAL_NEW_TOOL";
        case Outcome::NeedsApprovalNewVersion: return "NEEDS_APPROVAL_NEW_VERSION";
        case Outcome::NeedsApprovalTampered: return "NEEDS_APPROVAL_TAMPERED";
        case Outcome::RejectedSignature: return "REJECTED_SIGNATURE";
        case Outcome::DowngradeWarning: return "DOWNGRADE_WARNING";
    }
    return "UNKNOWN";
}

}  // namespace etdi::approval
