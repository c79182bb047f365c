#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace fuzzeval {

// Replay recipe for a coverage-instrumented build: the template runs one
// input and leaves an lcov tracefile at the {covfile} placeholder path.
struct CoverageSpec {
    std::string replay_template;  // placeholders: {input}, {covfile}
    // Optional tracefile fixing the instrumented-line universe, so an empty
    // input set still has a denominator.
    std::filesystem::path baseline_info;
    double replay_timeout_s = 30.0;
};

using LineSet = std::map<std::string, std::set<int>>;

struct LineCoverage {
    LineSet covered;       // lines with a nonzero execution count
    LineSet instrumented;  // every line carrying coverage data
    std::size_t replay_failures = 0;

    std::size_t covered_count() const;
    std::size_t instrumented_count() const;
    double percent() const;  // 0 when nothing is instrumented
};

// Folds one lcov tracefile into `into`. SF:, DA:<line>,<count> and
// end_of_record are honored, other record kinds skipped. Throws SchemaError
// on DA records outside a file section or with unparseable numbers.
void merge_lcov_info(std::string_view text, LineCoverage& into);

// Replays every input through the template, accumulating the union of
// covered lines. A replay that exits nonzero, crashes, or leaves no
// readable tracefile is skipped and tallied in replay_failures.
LineCoverage compute_line_coverage(const std::vector<std::filesystem::path>& inputs,
                                   const CoverageSpec& spec,
                                   const std::filesystem::path& scratch_dir);

}  // namespace fuzzeval
