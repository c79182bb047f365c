#include "fuzzeval/model.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "fuzzeval/util.hpp"

namespace fuzzeval {

namespace {

struct VulnName {
    VulnClass cls;
    const char* name;
};

constexpr std::array<VulnName, 13> kVulnNames = {{
    {VulnClass::HeapBufferOverflow, "heap-buffer-overflow"},
    {VulnClass::StackBufferOverflow, "stack-buffer-overflow"},
    {VulnClass::GlobalBufferOverflow, "global-buffer-overflow"},
    {VulnClass::StackOverflow, "stack-overflow"},
    {VulnClass::Segv, "segv"},
    {VulnClass::ExcessiveMemoryAllocation, "excessive-memory-allocation"},
    {VulnClass::MemoryLeak, "memory-leak"},
    {VulnClass::FreeError, "free-error"},
    {VulnClass::FloatPointException, "float-point-exception"},
    {VulnClass::AllocDeallocMismatch, "alloc-dealloc-mismatch"},
    {VulnClass::MemcpyParamOverlap, "memcpy-param-overlap"},
    {VulnClass::UseAfterFree, "use-after-free"},
    {VulnClass::Unknown, "unknown"},
}};

// Raw labels observed from ASan, LSan and GDB output across tool versions.
// Mirrors data/vuln_aliases.tsv; the data file wins when a user passes one.
constexpr std::array<std::pair<const char*, VulnClass>, 34> kBuiltinAliases = {{
    {"heap-buffer-overflow", VulnClass::HeapBufferOverflow},
    {"stack-buffer-overflow", VulnClass::StackBufferOverflow},
    {"stack-buffer-underflow", VulnClass::StackBufferOverflow},
    {"global-buffer-overflow", VulnClass::GlobalBufferOverflow},
    {"dynamic-stack-buffer-overflow", VulnClass::StackBufferOverflow},
    {"stack-overflow", VulnClass::StackOverflow},
    {"segv", VulnClass::Segv},
    {"segv on unknown address", VulnClass::Segv},
    {"sigsegv", VulnClass::Segv},
    {"sigbus", VulnClass::Segv},
    {"bus", VulnClass::Segv},
    {"unknown-crash", VulnClass::Segv},
    {"allocation-size-too-big", VulnClass::ExcessiveMemoryAllocation},
    {"requested-allocation-size", VulnClass::ExcessiveMemoryAllocation},
    {"out-of-memory", VulnClass::ExcessiveMemoryAllocation},
    {"excessive-memory-allocation", VulnClass::ExcessiveMemoryAllocation},
    {"memory-leak", VulnClass::MemoryLeak},
    {"memory-leaks", VulnClass::MemoryLeak},
    {"detected memory leaks", VulnClass::MemoryLeak},
    {"leaksanitizer", VulnClass::MemoryLeak},
    {"free-error", VulnClass::FreeError},
    {"bad-free", VulnClass::FreeError},
    {"double-free", VulnClass::FreeError},
    {"invalid-free", VulnClass::FreeError},
    {"attempting free", VulnClass::FreeError},
    {"attempting double-free", VulnClass::FreeError},
    {"float-point-exception", VulnClass::FloatPointException},
    {"floating-point-exception", VulnClass::FloatPointException},
    {"fpe", VulnClass::FloatPointException},
    {"sigfpe", VulnClass::FloatPointException},
    {"alloc-dealloc-mismatch", VulnClass::AllocDeallocMismatch},
    {"memcpy-param-overlap", VulnClass::MemcpyParamOverlap},
    {"use-after-free", VulnClass::UseAfterFree},
    {"heap-use-after-free", VulnClass::UseAfterFree},
}};

}  // namespace

const char* to_string(VulnClass c) {
    for (const auto& v : kVulnNames) {
        if (v.cls == c) return v.name;
    }
    return "unknown";
}

std::optional<VulnClass> vuln_class_from_name(std::string_view canonical_name) {
    for (const auto& v : kVulnNames) {
        if (canonical_name == v.name) return v.cls;
    }
    return std::nullopt;
}

const VulnAliasTable& VulnAliasTable::builtin() {
    static const VulnAliasTable table = [] {
        VulnAliasTable t;
        for (const auto& [raw, cls] : kBuiltinAliases) t.add(raw, cls);
        return t;
    }();
    return table;
}

VulnAliasTable VulnAliasTable::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw SchemaError("alias table: cannot open " + file.string());
    }
    VulnAliasTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = util::trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto tab = t.find('\t');
        if (tab == std::string::npos) {
            throw SchemaError("alias table: missing tab separator at " + file.string() + ":" +
                              std::to_string(lineno));
        }
        std::string raw = util::trim(t.substr(0, tab));
        std::string canon = util::trim(t.substr(tab + 1));
        auto cls = vuln_class_from_name(canon);
        if (raw.empty() || !cls) {
            throw SchemaError("alias table: bad entry at " + file.string() + ":" +
                              std::to_string(lineno));
        }
        table.add(raw, *cls);
    }
    return table;
}

void VulnAliasTable::add(std::string_view raw, VulnClass canonical) {
    aliases_[util::to_lower(raw)] = canonical;
}

VulnType VulnAliasTable::canonicalize(std::string_view raw_label) const {
    std::string key = util::to_lower(util::trim(raw_label));
    if (auto it = aliases_.find(key); it != aliases_.end()) {
        return VulnType{it->second, std::string(raw_label)};
    }
    // Canonical names canonicalize to themselves even without an alias row.
    if (auto cls = vuln_class_from_name(key); cls && *cls != VulnClass::Unknown) {
        return VulnType{*cls, std::string(raw_label)};
    }
    return VulnType{VulnClass::Unknown, std::string(raw_label)};
}

VulnType canonicalize_vuln_type(std::string_view raw_label) {
    return VulnAliasTable::builtin().canonicalize(raw_label);
}

std::string BugKey::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < triple.functions.size(); ++i) {
        if (i) out += '>';
        out += triple.functions[i];
    }
    out += '#';
    if (vuln_type.canonical == VulnClass::Unknown && !vuln_type.raw_label.empty())
        out += vuln_type.raw_label;
    else
        out += vuln_type.canonical_name();
    return out;
}

const char* to_string(Exploitability e) {
    switch (e) {
        case Exploitability::Exploitable: return "EXPLOITABLE";
        case Exploitability::ProbablyExploitable: return "PROBABLY_EXPLOITABLE";
        case Exploitability::ProbablyNotExploitable: return "PROBABLY_NOT_EXPLOITABLE";
        case Exploitability::Unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

std::optional<Exploitability> exploitability_from_name(std::string_view name) {
    if (name == "EXPLOITABLE") return Exploitability::Exploitable;
    if (name == "PROBABLY_EXPLOITABLE") return Exploitability::ProbablyExploitable;
    if (name == "PROBABLY_NOT_EXPLOITABLE") return Exploitability::ProbablyNotExploitable;
    if (name == "UNKNOWN") return Exploitability::Unknown;
    return std::nullopt;
}

std::vector<std::string> default_frame_blocklist() {
    // Sanitizer runtime, interceptor and process-startup frames; stack
    // triples are over program functions.
    return {
        "__asan*", "__interceptor*", "__sanitizer*", "__lsan*", "__ubsan*",
        "__msan*", "asan_*",         "__libc_start*", "_start", "\\?\\?",
    };
}

void TriageConfig::validate() const {
    if (n_frames < 1) {
        throw ConfigError("triage: n_frames must be >= 1");
    }
    if (std::find(supplement_tools.begin(), supplement_tools.end(), primary_tool) !=
        supplement_tools.end()) {
        throw ConfigError("triage: primary tool '" + primary_tool +
                          "' must not appear in supplement_tools");
    }
}

}  // namespace fuzzeval
