// Shared fixture builders for the test suites. Everything is seeded
// explicitly so failures reproduce byte-for-byte.
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "etdi/canonical.hpp"
#include "etdi/crypto.hpp"
#include "etdi/model.hpp"

namespace testutil {

using etdi::Json;
using Rng = std::mt19937_64;

inline std::int64_t rand_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
    return pool[static_cast<std::size_t>(rand_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1))];
}

inline std::string random_word(Rng& rng, std::size_t min_len = 3, std::size_t max_len = 8) {
    static const char alphabet[] = "abcdefghijklmnopqrstuvwxyz";
    std::string out;
    const std::size_t len = static_cast<std::size_t>(rand_int(rng, static_cast<std::int64_t>(min_len),
                                                              static_cast<std::int64_t>(max_len)));
    for (std::size_t i = 0; i < len; ++i) out += alphabet[rand_int(rng, 0, 25)];
    return out;
}

// Scope strings over a small segment alphabet; ~1/4 get a wildcard tail.
inline std::string random_scope(Rng& rng, bool allow_wildcard = true) {
    static const std::vector<std::string> segments = {"fs", "net", "read", "write",
                                                      "docs", "mail", "a", "b"};
    const std::int64_t depth = rand_int(rng, 1, 3);
    std::string out;
    for (std::int64_t i = 0; i < depth; ++i) {
        if (i) out += ':';
        out += pick(rng, segments);
    }
    if (allow_wildcard && coin(rng, 0.25)) out += ":*";
    return out;
}

inline etdi::ToolDefinition make_definition(const std::string& id = "demo.tool",
                                            const etdi::SemVer& version = {1, 0, 0}) {
    etdi::ToolDefinition def;
    def.id = id;
    def.name = "Demo Tool";
    def.description = "A tool used by the tests.";
    def.provider_id = "demo-provider";
    def.version = version;
    def.input_schema = Json{{"type", "object"}};
    def.output_schema = Json{{"type", "string"}};
    def.permissions = {"fs:read:documents"};
    def.required_caller_entitlements = {};
    def.api_contract_hash = etdi::sha256_hex(std::string("demo-api"));
    return def;
}

inline etdi::ToolDefinition random_definition(Rng& rng) {
    etdi::ToolDefinition def;
    def.id = random_word(rng) + "." + random_word(rng);
    def.name = random_word(rng, 4, 12);
    def.description = random_word(rng, 0, 24);
    def.provider_id = random_word(rng) + "-co";
    def.version = {rand_int(rng, 0, 9), rand_int(rng, 0, 9), rand_int(rng, 0, 9)};
    def.input_schema = Json{{"type", "object"}, {"title", random_word(rng)}};
    def.output_schema = coin(rng) ? Json{{"type", "string"}} : Json::object();
    const std::int64_t nperm = rand_int(rng, 0, 4);
    for (std::int64_t i = 0; i < nperm; ++i) def.permissions.insert(random_scope(rng));
    if (coin(rng, 0.3)) def.required_caller_entitlements.insert(random_scope(rng));
    if (coin(rng, 0.8)) def.api_contract_hash = etdi::sha256_hex(random_word(rng));
    return def;
}

// A scratch directory per test binary run, removed on destruction.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 1000; ++i) {
            auto candidate = base / ("etdi-test-" + std::to_string(::getpid()) + "-" +
                                     std::to_string(counter_++));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("cannot create temp directory");
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    static inline int counter_ = 0;
    std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs a shell command, capturing combined stdout and the exit code.
struct CommandResult {
    int exit_code = -1;
    std::string output;
};

inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
    if (!pipe) return result;
    char buffer[4096];
    std::size_t n = 0;
    while ((n = ::fread(buffer, 1, sizeof buffer, pipe)) > 0) result.output.append(buffer, n);
    const int status = ::pclose(pipe);
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    return result;
}

}  // namespace testutil
