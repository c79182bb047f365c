#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fuzzeval/model.hpp"
#include "fuzzeval/resource.hpp"

namespace fuzzeval::metrics {

// Verdict row for one challenger measured against the baseline on a
// per-repetition series (unique-bug counts, coverage, ...).
struct ComparisonResult {
    std::string baseline;
    std::string challenger;
    double u_statistic = 0.0;  // U of the challenger sample
    double p_value = 1.0;      // two-sided
    double a12 = 0.5;          // chance a challenger rep beats a baseline rep
    bool significant = false;  // p < 0.05
    bool large_effect = false;  // a12 >= 0.71
    bool degenerate = false;
    bool small_sample = false;  // either side has fewer than 20 reps
};

ComparisonResult compare(const std::string& baseline_id,
                         const std::vector<double>& baseline_values,
                         const std::string& challenger_id,
                         const std::vector<double>& challenger_values);

// One sighting of a deduplicated bug inside a repetition's event log.
// Logs need not be time-ordered.
struct Discovery {
    BugKey key;
    double time_s = 0.0;
};

using TrialEvents = std::vector<Discovery>;

struct BugTiming {
    BugKey key;
    // One entry per repetition; absent = never found there (censored).
    std::vector<std::optional<double>> tte_s;
    int success_count = 0;

    // Mean over the uncensored repetitions only; absent when success_count
    // is zero.
    std::optional<double> mean_tte_s() const;
};

BugTiming bug_timings(const std::vector<TrialEvents>& reps, const BugKey& key);

// Mean over repetitions of the number of distinct bugs first seen at or
// before each grid point. Throws SchemaError unless the grid is strictly
// increasing; an empty rep list yields all zeros.
std::vector<double> cumulative_curve(const std::vector<TrialEvents>& reps,
                                     const std::vector<double>& grid);

// Credits each bug found by exactly one fuzzer to that fuzzer. Bugs seen by
// two or more fuzzers are dropped; fuzzers without such a bug do not appear.
std::map<std::string, std::set<BugKey>> rare_bugs(
    const std::map<BugKey, std::set<std::string>>& incidence);

// Mean over repetitions of the number of distinct classifier hashes rated
// EXPLOITABLE. Hashes repeat within a rep when several crashes hit the same
// bug; they count once. Zero when `reps` is empty.
double exploitable_summary(const std::vector<std::vector<ExploitabilityRecord>>& reps);

struct OverheadSummary {
    double cpu_util_avg = 0.0;  // percent
    double mem_avg_mb = 0.0;
    double mem_max_mb = 0.0;
    double disk_read_mb = 0.0;
    double disk_write_mb = 0.0;
};

// Averages are time-weighted (trapezoidal over the sample timestamps), so
// jittered sampling intervals do not skew them; a trace spanning no time
// degrades to the arithmetic mean. Throws EmptyTrace when there are no
// samples, SchemaError when timestamps go backwards.
OverheadSummary overhead_summary(const ResourceTrace& trace);

}  // namespace fuzzeval::metrics
