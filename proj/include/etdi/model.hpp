#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "etdi/canonical.hpp"
#include "etdi/errors.hpp"

namespace etdi {

// -------------------------------------------------------------------------
// Versions

struct SemVer {
    std::int64_t major = 0;
    std::int64_t minor = 0;
    std::int64_t patch = 0;

    auto operator<=>(const SemVer&) const = default;

    std::string to_string() const;
    // Parses "M.m.p" with non-negative components. Throws EncodingError.
    static SemVer parse(const std::string& text);
};

enum class Ordering { Less, Equal, Greater };

Ordering compare_versions(const SemVer& a, const SemVer& b);

// -------------------------------------------------------------------------
// Content hashes

// 256-bit digest, lowercase hex. Produced by content_hash(); also used to
// pin backend API contracts inside a definition.
struct ContentHash {
    std::string hex;

    bool operator==(const ContentHash&) const = default;
    bool valid() const { return is_lower_hex(hex, 64); }
};

// -------------------------------------------------------------------------
// Tool definitions

struct ToolDefinition {
    std::string id;            // globally unique, no whitespace
    std::string name;
    std::string description;
    std::string provider_id;   // names the signing provider
    SemVer version;
    Json input_schema = Json::object();
    Json output_schema = Json::object();
    std::set<std::string> permissions;
    std::set<std::string> required_caller_entitlements;
    std::optional<std::string> api_contract_hash;  // 64 lowercase hex chars

    bool operator==(const ToolDefinition&) const = default;
};

// Checks the type invariants (id shape, hash shape, version sign).
// Throws InvariantViolation.
void validate(const ToolDefinition& def);

// Canonical JSON layout of a definition; field order is fixed by key sort,
// sets become sorted arrays, api_contract_hash is omitted when absent.
Json definition_to_json(const ToolDefinition& def);

// Strict parse: every required field present with the right type, no unknown
// fields, no duplicate entries in set-valued fields. Throws EncodingError.
ToolDefinition definition_from_json(const Json& doc);

// Deterministic byte encoding; the input to every signature and hash.
std::vector<std::uint8_t> canonical_encode(const ToolDefinition& def);

// SHA-256 over canonical_encode(def).
ContentHash content_hash(const ToolDefinition& def);

// -------------------------------------------------------------------------
// Definition diffs

enum class ChangeClass { Cosmetic, SecurityRelevant };

enum class DiffMode { Strict, Lenient };

struct FieldChange {
    std::string field;
    ChangeClass classification = ChangeClass::SecurityRelevant;
    std::string old_value;
    std::string new_value;
    // Populated for set-valued fields.
    std::vector<std::string> added;
    std::vector<std::string> removed;
};

struct ChangeReport {
    std::vector<FieldChange> changes;
    bool requires_reapproval = false;

    bool empty() const { return changes.empty(); }
    bool has_security_relevant() const;
    // One line per change, e.g. "permissions: +fs:read:documents".
    std::string summary() const;
    Json to_json() const;
};

const char* to_string(ChangeClass c);

// Field-by-field comparison of two definitions for the same tool id.
// Under Strict mode any change at all requires re-approval; under Lenient
// only security-relevant changes do. Throws IdMismatch when ids differ.
ChangeReport diff_definitions(const ToolDefinition& old_def,
                              const ToolDefinition& new_def,
                              DiffMode mode = DiffMode::Strict);

}  // namespace etdi
