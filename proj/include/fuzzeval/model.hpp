#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzeval/errors.hpp"

namespace fuzzeval {

// Canonical vulnerability-type taxonomy shared by every analysis stage.
enum class VulnClass {
    HeapBufferOverflow,
    StackBufferOverflow,
    GlobalBufferOverflow,
    StackOverflow,
    Segv,
    ExcessiveMemoryAllocation,
    MemoryLeak,
    FreeError,
    FloatPointException,
    AllocDeallocMismatch,
    MemcpyParamOverlap,
    UseAfterFree,
    Unknown,
};

const char* to_string(VulnClass c);

struct VulnType {
    VulnClass canonical = VulnClass::Unknown;
    std::string raw_label;  // original tool wording, kept verbatim

    std::string canonical_name() const { return to_string(canonical); }

    // Unknown types compare by their raw label so that distinct unrecognized
    // labels stay distinct under deduplication.
    friend bool operator==(const VulnType& a, const VulnType& b) {
        if (a.canonical != b.canonical) return false;
        if (a.canonical == VulnClass::Unknown) return a.raw_label == b.raw_label;
        return true;
    }
    friend std::strong_ordering operator<=>(const VulnType& a, const VulnType& b) {
        if (auto c = a.canonical <=> b.canonical; c != 0) return c;
        if (a.canonical == VulnClass::Unknown) return a.raw_label <=> b.raw_label;
        return std::strong_ordering::equal;
    }
};

// Maps raw tool labels (ASan error types, debugger signal names, ...) onto
// the canonical taxonomy. Shipped as a line-oriented data file
// `raw_label<TAB>canonical_name`; tool wording drifts across versions, so the
// table is data rather than code.
class VulnAliasTable {
  public:
    static const VulnAliasTable& builtin();
    static VulnAliasTable load(const std::filesystem::path& file);

    void add(std::string_view raw, VulnClass canonical);
    VulnType canonicalize(std::string_view raw_label) const;

    std::size_t size() const { return aliases_.size(); }

  private:
    std::map<std::string, VulnClass> aliases_;  // keys lowercased
};

// Total function: unrecognized labels map to Unknown with the raw label
// preserved. Idempotent on canonical names.
VulnType canonicalize_vuln_type(std::string_view raw_label);
std::optional<VulnClass> vuln_class_from_name(std::string_view canonical_name);

struct StackFrame {
    std::string function_name;
    std::string source_file;       // empty when unresolved
    std::optional<int> line;       // absent when unresolved
    int index = 0;                 // 0-based depth from the crash site

    friend bool operator==(const StackFrame&, const StackFrame&) = default;
};

// Ordered crash-site-outward function names used as the deduplication
// identity; at most TriageConfig::n_frames entries, fewer for shallow stacks.
struct StackTriple {
    std::vector<std::string> functions;

    friend bool operator==(const StackTriple&, const StackTriple&) = default;
    friend auto operator<=>(const StackTriple& a, const StackTriple& b) {
        return a.functions <=> b.functions;
    }
};

struct BugKey {
    StackTriple triple;
    VulnType vuln_type;

    // Stable printable identity, e.g. "f_a>f_b>f_c#heap-buffer-overflow".
    std::string to_string() const;

    friend bool operator==(const BugKey&, const BugKey&) = default;
    friend auto operator<=>(const BugKey& a, const BugKey& b) {
        if (auto c = a.triple <=> b.triple; c != 0) return c;
        return a.vuln_type <=> b.vuln_type;
    }
};

// Per-tool analysis outcome attached to a crash sample after its transcript
// has been parsed: whether the tool saw a crash, the raw type/signal label,
// and the extracted stack.
struct ToolOutcome {
    bool crashed = false;
    std::string raw_label;          // error type or fatal signal
    std::vector<StackFrame> frames;
};

enum class Exploitability {
    Exploitable,
    ProbablyExploitable,
    ProbablyNotExploitable,
    Unknown,
};

const char* to_string(Exploitability e);
std::optional<Exploitability> exploitability_from_name(std::string_view name);

struct ExploitabilityRecord {
    Exploitability category = Exploitability::Unknown;
    std::string hash;
    std::string description;
};

// One crash-inducing input plus its per-tool execution reports.
struct CrashSample {
    std::string id;
    std::filesystem::path input_path;
    std::string discovering_fuzzer;
    std::string trial_id;
    double discovery_time_s = 0.0;
    std::map<std::string, ToolOutcome> outcomes;  // keyed by tool id
    std::optional<ExploitabilityRecord> exploitability;
};

std::vector<std::string> default_frame_blocklist();

struct TriageConfig {
    int n_frames = 3;
    std::vector<std::string> frame_blocklist = default_frame_blocklist();
    std::string primary_tool = "asan";
    std::vector<std::string> supplement_tools = {"gdb"};

    // Throws ConfigError on n_frames < 1 or primary listed as supplement.
    void validate() const;
};

}  // namespace fuzzeval
