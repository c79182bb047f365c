#include "fuzzeval/triage.hpp"

#include <algorithm>
#include <sstream>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/util.hpp"

namespace fuzzeval {

bool CrossValidationRecord::sensitive() const {
    bool any_true = false, any_false = false;
    for (const auto& [variant, crashed] : outcomes) (crashed ? any_true : any_false) = true;
    return any_true && any_false;
}

bool CrossValidationRecord::validated() const {
    for (const auto& [variant, crashed] : outcomes)
        if (crashed) return true;
    return false;
}

StackTriple extract_stack_triple(const std::vector<StackFrame>& frames,
                                 const TriageConfig& config) {
    StackTriple triple;
    for (const auto& frame : frames) {
        bool blocked = false;
        for (const auto& pattern : config.frame_blocklist) {
            if (util::glob_match(pattern, frame.function_name)) {
                blocked = true;
                break;
            }
        }
        if (blocked) continue;
        triple.functions.push_back(frame.function_name);
        if (triple.functions.size() == static_cast<std::size_t>(config.n_frames)) break;
    }
    if (triple.functions.empty())
        throw EmptyTrace("no stack frame survives the blocklist");
    return triple;
}

std::pair<BugKey, std::string> derive_bug_key(const CrashSample& crash,
                                              const TriageConfig& config) {
    auto key_from = [&](const ToolOutcome& outcome, const std::string& tool) {
        BugKey key{extract_stack_triple(outcome.frames, config),
                   canonicalize_vuln_type(outcome.raw_label)};
        return std::make_pair(std::move(key), tool);
    };

    if (auto it = crash.outcomes.find(config.primary_tool);
        it != crash.outcomes.end() && it->second.crashed)
        return key_from(it->second, config.primary_tool);

    for (const auto& tool : config.supplement_tools) {
        if (auto it = crash.outcomes.find(tool); it != crash.outcomes.end() && it->second.crashed)
            return key_from(it->second, tool);
    }
    throw NotValidated("no tool observed a crash for sample " + crash.id);
}

TriageResult triage_crashes(const std::vector<CrashSample>& crashes,
                            const TriageConfig& config) {
    config.validate();

    struct Provenance {
        std::set<std::string> members;
        std::set<std::string> tools;
    };
    std::map<BugKey, Provenance> partition;
    std::vector<std::string> quarantine;

    for (const auto& crash : crashes) {
        try {
            auto [key, tool] = derive_bug_key(crash, config);
            auto& slot = partition[key];
            slot.members.insert(crash.id);
            slot.tools.insert(tool);
        } catch (const NotValidated&) {
            quarantine.push_back(crash.id);
        } catch (const EmptyTrace&) {
            quarantine.push_back(crash.id);
        }
    }

    TriageResult result;
    for (auto& [key, slot] : partition) {
        BugRecord record;
        record.key = key;
        // primary provenance wins over any supplement
        if (slot.tools.count(config.primary_tool)) {
            record.detecting_tool = config.primary_tool;
        } else {
            for (const auto& tool : config.supplement_tools) {
                if (slot.tools.count(tool)) {
                    record.detecting_tool = tool;
                    break;
                }
            }
        }
        record.exemplar_crash = *slot.members.begin();
        record.member_crashes = std::move(slot.members);
        result.bugs.push_back(std::move(record));
    }
    std::sort(quarantine.begin(), quarantine.end());
    result.quarantine = std::move(quarantine);
    return result;
}

ValidationMatrix build_validation_matrix(const std::vector<CrashSample>& crashes,
                                         const TriageConfig& config) {
    ValidationMatrix matrix;
    for (const auto& crash : crashes) {
        auto primary = crash.outcomes.find(config.primary_tool);
        if (primary == crash.outcomes.end())
            throw MissingOutcome("crash " + crash.id + " lacks the " + config.primary_tool +
                                 " outcome");
        bool any_supplement_present = false;
        bool supplement_crashed = false;
        for (const auto& tool : config.supplement_tools) {
            if (auto it = crash.outcomes.find(tool); it != crash.outcomes.end()) {
                any_supplement_present = true;
                supplement_crashed = supplement_crashed || it->second.crashed;
            }
        }
        if (!any_supplement_present)
            throw MissingOutcome("crash " + crash.id + " lacks a supplement outcome");

        if (primary->second.crashed && supplement_crashed)
            ++matrix.both;
        else if (primary->second.crashed)
            ++matrix.primary_only;
        else if (supplement_crashed)
            ++matrix.supplement_only;
        else
            ++matrix.neither;
        ++matrix.total;
    }
    return matrix;
}

CrossValidationRecord cross_validate(const CrashSample& crash,
                                     const std::map<std::string, bool>& outcomes) {
    if (outcomes.size() < 2)
        throw ConfigError("cross validation needs at least two binary variants");
    return CrossValidationRecord{crash.id, outcomes};
}

std::string render_bug_table(const TriageResult& result) {
    std::ostringstream out;
    for (const auto& bug : result.bugs) {
        out << bug.key.to_string() << '\t' << bug.detecting_tool << '\t'
            << bug.member_crashes.size() << '\t' << bug.exemplar_crash << '\n';
    }
    return out.str();
}

}  // namespace fuzzeval
