#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fuzzeval/model.hpp"

namespace fuzzeval {

// One deduplicated bug: the set of crash samples sharing a BugKey.
struct BugRecord {
    BugKey key;
    std::string detecting_tool;
    std::string exemplar_crash;  // lexicographically smallest member id
    std::set<std::string> member_crashes;
};

struct TriageResult {
    std::vector<BugRecord> bugs;          // sorted by key
    std::vector<std::string> quarantine;  // crash ids nothing could validate, sorted
};

struct ValidationMatrix {
    std::size_t both = 0;
    std::size_t primary_only = 0;
    std::size_t supplement_only = 0;
    std::size_t neither = 0;
    std::size_t total = 0;

    double percent(std::size_t count) const {
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
    }
};

struct CrossValidationRecord {
    std::string crash_id;
    std::map<std::string, bool> outcomes;  // binary variant -> crashed

    // Differing outcomes across variants mean the crash depends on the
    // instrumentation, not the program alone.
    bool sensitive() const;
    bool validated() const;
};

// First n_frames function names after dropping blocklisted frames; shorter
// when fewer survive. Throws EmptyTrace when nothing survives.
StackTriple extract_stack_triple(const std::vector<StackFrame>& frames,
                                 const TriageConfig& config);

// Key plus tool provenance for one crash. The primary tool wins whenever it
// observed a crash; otherwise the first supplement (config order) that did.
// Throws NotValidated when no tool crashed, EmptyTrace when the winning
// tool's stack is all blocklisted.
std::pair<BugKey, std::string> derive_bug_key(const CrashSample& crash,
                                              const TriageConfig& config);

// Partitions the validated crashes by BugKey. Crashes that cannot be keyed
// (NotValidated or EmptyTrace) land in the quarantine list instead of being
// dropped. Output is sorted, so the partition is order-independent.
TriageResult triage_crashes(const std::vector<CrashSample>& crashes,
                            const TriageConfig& config);

// Four-cell primary/supplement validation outcome counts. The supplement
// bit is the OR over the configured supplement tools. Throws MissingOutcome
// when a crash lacks the primary outcome or every supplement outcome.
ValidationMatrix build_validation_matrix(const std::vector<CrashSample>& crashes,
                                         const TriageConfig& config);

// Records per-binary-variant re-execution outcomes for one crash sample.
// Throws ConfigError when fewer than two variants are given.
CrossValidationRecord cross_validate(const CrashSample& crash,
                                     const std::map<std::string, bool>& outcomes);

// Line-delimited bug table: bug_key, tool, member_count, exemplar.
std::string render_bug_table(const TriageResult& result);

}  // namespace fuzzeval
