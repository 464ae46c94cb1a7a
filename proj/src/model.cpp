#include "etdi/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace etdi {

// -------------------------------------------------------------------------
// SemVer

std::string SemVer::to_string() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

SemVer SemVer::parse(const std::string& text) {
    SemVer v;
    std::int64_t* parts[3] = {&v.major, &v.minor, &v.patch};
    const char* cur = text.data();
    const char* end = text.data() + text.size();
    for (int i = 0; i < 3; ++i) {
        auto [ptr, ec] = std::from_chars(cur, end, *parts[i]);
        if (ec != std::errc() || ptr == cur || *parts[i] < 0) {
            throw EncodingError("invalid version string: " + text);
        }
        cur = ptr;
        if (i < 2) {
            if (cur == end || *cur != '.') {
                throw EncodingError("invalid version string: " + text);
            }
            ++cur;
        }
    }
    if (cur != end) {
        throw EncodingError("invalid version string: " + text);
    }
    return v;
}

Ordering compare_versions(const SemVer& a, const SemVer& b) {
    const auto c = a <=> b;
    if (c < 0) return Ordering::Less;
    if (c > 0) return Ordering::Greater;
    return Ordering::Equal;
}

// -------------------------------------------------------------------------
// ToolDefinition

void validate(const ToolDefinition& def) {
    if (def.id.empty()) {
        throw InvariantViolation("tool id must be non-empty");
    }
    for (unsigned char c : def.id) {
        if (std::isspace(c)) {
            throw InvariantViolation("tool id must not contain whitespace: '" + def.id + "'");
        }
    }
    if (def.version.major < 0 || def.version.minor < 0 || def.version.patch < 0) {
        throw InvariantViolation("version components must be non-negative");
    }
    if (def.api_contract_hash && !is_lower_hex(*def.api_contract_hash, 64)) {
        throw InvariantViolation("api_contract_hash must be 64 lowercase hex characters");
    }
}

namespace {

Json string_set_to_json(const std::set<std::string>& values) {
    Json arr = Json::array();
    for (const auto& v : values) {
        arr.push_back(v);
    }
    return arr;
}

std::set<std::string> string_set_from_json(const Json& node, const std::string& field) {
    if (!node.is_array()) {
        throw EncodingError(field + " must be an array of strings");
    }
    std::set<std::string> out;
    for (const auto& item : node) {
        if (!item.is_string()) {
            throw EncodingError(field + " must contain only strings");
        }
        if (!out.insert(item.get<std::string>()).second) {
            throw EncodingError(field + " contains duplicate entry '" +
                                item.get<std::string>() + "'");
        }
    }
    return out;
}

std::string require_string(const Json& doc, const std::string& field) {
    if (!doc.contains(field) || !doc[field].is_string()) {
        throw EncodingError("missing or non-string field '" + field + "'");
    }
    return doc[field].get<std::string>();
}

std::int64_t require_nonneg_int(const Json& doc, const std::string& field) {
    if (!doc.contains(field) || !doc[field].is_number_integer()) {
        throw EncodingError("missing or non-integer field '" + field + "'");
    }
    const auto v = doc[field].get<std::int64_t>();
    if (v < 0) {
        throw EncodingError("field '" + field + "' must be non-negative");
    }
    return v;
}

Json version_to_json(const SemVer& v) {
    return Json{{"major", v.major}, {"minor", v.minor}, {"patch", v.patch}};
}

SemVer version_from_json(const Json& node) {
    if (!node.is_object() || node.size() != 3) {
        throw EncodingError("version must be an object with major/minor/patch");
    }
    SemVer v;
    v.major = require_nonneg_int(node, "major");
    v.minor = require_nonneg_int(node, "minor");
    v.patch = require_nonneg_int(node, "patch");
    return v;
}

const std::set<std::string> kDefinitionFields = {
    "id", "name", "description", "provider_id", "version",
    "input_schema", "output_schema", "permissions",
    "required_caller_entitlements", "api_contract_hash"};

}  // namespace

Json definition_to_json(const ToolDefinition& def) {
    Json doc{
        {"id", def.id},
        {"name", def.name},
        {"description", def.description},
        {"provider_id", def.provider_id},
        {"version", version_to_json(def.version)},
        {"input_schema", def.input_schema},
        {"output_schema", def.output_schema},
        {"permissions", string_set_to_json(def.permissions)},
        {"required_caller_entitlements", string_set_to_json(def.required_caller_entitlements)},
    };
    if (def.api_contract_hash) {
        doc["api_contract_hash"] = *def.api_contract_hash;
    }
    return doc;
}

ToolDefinition definition_from_json(const Json& doc) {
    if (!doc.is_object()) {
        throw EncodingError("tool definition must be an object");
    }
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (!kDefinitionFields.contains(key)) {
            throw EncodingError("unknown field '" + key + "' in tool definition");
        }
    }
    ToolDefinition def;
    def.id = require_string(doc, "id");
    def.name = require_string(doc, "name");
    def.description = require_string(doc, "description");
    def.provider_id = require_string(doc, "provider_id");
    if (!doc.contains("version")) {
        throw EncodingError("missing field 'version'");
    }
    def.version = version_from_json(doc["version"]);
    if (!doc.contains("input_schema") || !doc.contains("output_schema")) {
        throw EncodingError("missing input_schema or output_schema");
    }
    def.input_schema = doc["input_schema"];
    def.output_schema = doc["output_schema"];
    if (!doc.contains("permissions") || !doc.contains("required_caller_entitlements")) {
        throw EncodingError("missing permissions or required_caller_entitlements");
    }
    def.permissions = string_set_from_json(doc["permissions"], "permissions");
    def.required_caller_entitlements =
        string_set_from_json(doc["required_caller_entitlements"], "required_caller_entitlements");
    if (doc.contains("api_contract_hash")) {
        if (!doc["api_contract_hash"].is_string()) {
            throw EncodingError("api_contract_hash must be a string");
        }
        def.api_contract_hash = doc["api_contract_hash"].get<std::string>();
    }
    validate(def);
    return def;
}

std::vector<std::uint8_t> canonical_encode(const ToolDefinition& def) {
    validate(def);
    return canonical_bytes(definition_to_json(def));
}

ContentHash content_hash(const ToolDefinition& def) {
    return ContentHash{sha256_hex(canonical_encode(def))};
}

// -------------------------------------------------------------------------
// Diffs

const char* to_string(ChangeClass c) {
    return c == ChangeClass::Cosmetic ? "COSMETIC" : "SECURITY_RELEVANT";
}

bool ChangeReport::has_security_relevant() const {
    return std::any_of(changes.begin(), changes.end(), [](const FieldChange& c) {
        return c.classification == ChangeClass::SecurityRelevant;
    });
}

std::string ChangeReport::summary() const {
    std::ostringstream out;
    bool first = true;
    for (const auto& c : changes) {
        if (!first) out << "; ";
        first = false;
        out << c.field;
        if (!c.added.empty() || !c.removed.empty()) {
            for (const auto& a : c.added) out << " +" << a;
            for (const auto& r : c.removed) out << " -" << r;
        } else if (!c.old_value.empty() || !c.new_value.empty()) {
            out << " " << c.old_value << " -> " << c.new_value;
        }
        out << " [" << to_string(c.classification) << "]";
    }
    return out.str();
}

Json ChangeReport::to_json() const {
    Json arr = Json::array();
    for (const auto& c : changes) {
        Json item{
            {"field", c.field},
            {"classification", to_string(c.classification)},
        };
        if (!c.old_value.empty() || !c.new_value.empty()) {
            item["old"] = c.old_value;
            item["new"] = c.new_value;
        }
        if (!c.added.empty()) item["added"] = c.added;
        if (!c.removed.empty()) item["removed"] = c.removed;
        arr.push_back(item);
    }
    return Json{{"changes", arr}, {"requires_reapproval", requires_reapproval}};
}

namespace {

void diff_scalar(ChangeReport& report, const std::string& field, ChangeClass cls,
                 const std::string& old_value, const std::string& new_value) {
    if (old_value == new_value) return;
    FieldChange c;
    c.field = field;
    c.classification = cls;
    c.old_value = old_value;
    c.new_value = new_value;
    report.changes.push_back(std::move(c));
}

void diff_set(ChangeReport& report, const std::string& field,
              const std::set<std::string>& old_set, const std::set<std::string>& new_set) {
    if (old_set == new_set) return;
    FieldChange c;
    c.field = field;
    c.classification = ChangeClass::SecurityRelevant;
    std::set_difference(new_set.begin(), new_set.end(), old_set.begin(), old_set.end(),
                        std::back_inserter(c.added));
    std::set_difference(old_set.begin(), old_set.end(), new_set.begin(), new_set.end(),
                        std::back_inserter(c.removed));
    report.changes.push_back(std::move(c));
}

}  // namespace

ChangeReport diff_definitions(const ToolDefinition& old_def,
                              const ToolDefinition& new_def,
                              DiffMode mode) {
    if (old_def.id != new_def.id) {
        throw IdMismatch("cannot diff definitions with different ids: '" + old_def.id +
                         "' vs '" + new_def.id + "'");
    }
    ChangeReport report;
    diff_scalar(report, "name", ChangeClass::Cosmetic, old_def.name, new_def.name);
    diff_scalar(report, "description", ChangeClass::Cosmetic,
                old_def.description, new_def.description);
    diff_scalar(report, "provider_id", ChangeClass::SecurityRelevant,
                old_def.provider_id, new_def.provider_id);
    if (old_def.version != new_def.version) {
        diff_scalar(report, "version", ChangeClass::SecurityRelevant,
                    old_def.version.to_string(), new_def.version.to_string());
    }
    if (old_def.input_schema != new_def.input_schema) {
        diff_scalar(report, "input_schema", ChangeClass::SecurityRelevant,
                    canonical_dump(old_def.input_schema), canonical_dump(new_def.input_schema));
    }
    if (old_def.output_schema != new_def.output_schema) {
        diff_scalar(report, "output_schema", ChangeClass::SecurityRelevant,
                    canonical_dump(old_def.output_schema), canonical_dump(new_def.output_schema));
    }
    diff_set(report, "permissions", old_def.permissions, new_def.permissions);
    diff_set(report, "required_caller_entitlements",
             old_def.required_caller_entitlements, new_def.required_caller_entitlements);
    diff_scalar(report, "api_contract_hash", ChangeClass::SecurityRelevant,
                old_def.api_contract_hash.value_or(""),
                new_def.api_contract_hash.value_or(""));

    if (mode == DiffMode::Strict) {
        report.requires_reapproval = !report.changes.empty();
    } else {
        report.requires_reapproval = report.has_security_relevant();
    }
    return report;
}

}  // namespace etdi
