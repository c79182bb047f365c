#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fuzzeval/model.hpp"
#include "fuzzeval/resource.hpp"

namespace fuzzeval {

// One bug a mock fuzzer can find, with enough detail to write believable
// analysis transcripts for it.
struct MockBug {
    std::string name;                // stable id, used in crash filenames
    std::vector<std::string> stack;  // crash-site-outward function names
    // Sanitizer error label; empty when the sanitizer does not observe the
    // fault and only the debugger reports it (the arithmetic-exception
    // pattern).
    std::string sanitizer_label = "heap-buffer-overflow";
    std::string signal_name = "SIGSEGV";
    double hazard_per_hour = 0.0;  // expected first discoveries per hour
    Exploitability exploitability = Exploitability::Unknown;
};

struct MockFuzzerProfile {
    std::uint64_t rng_seed = 0;
    std::vector<MockBug> bugs;
    double repeat_crashes_per_hour = 0.0;  // re-hits of already-found bugs
    double coverage_per_hour = 60.0;       // queue growth
};

struct MockCrash {
    double time_s = 0.0;
    std::size_t bug_index = 0;
};

struct MockRun {
    std::vector<MockCrash> crashes;  // time-sorted
    std::vector<double> coverage_times_s;
    ResourceTrace trace;  // synthetic per-second samples
};

// Simulated trial. First discovery of each bug is drawn from its
// exponential hazard; repeat hits and queue growth come from Poisson
// counts. No wall-clock time passes; equal profiles give equal runs.
MockRun mock_fuzz(const MockFuzzerProfile& profile, double duration_s);

// Transcript synthesis in the concrete formats the parsers accept; `salt`
// varies fake addresses between crashes.
std::string synth_sanitizer_report(const MockBug& bug, std::uint64_t salt);
std::string synth_clean_sanitizer_run();
std::string synth_debugger_report(const MockBug& bug, std::uint64_t salt);
std::string synth_exploitable_report(const MockBug& bug);

// Stable classifier hash for a bug, in the two-part shape real classifier
// output uses.
std::string mock_exploitable_hash(const MockBug& bug);

}  // namespace fuzzeval
