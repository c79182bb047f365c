#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fuzzeval/mock_fuzzer.hpp"
#include "fuzzeval/report_parsers.hpp"
#include "fuzzeval/triage.hpp"

using namespace fuzzeval;

namespace {

MockBug overflow_bug() {
    MockBug bug;
    bug.name = "overflow_row";
    bug.stack = {"read_row", "decode_image", "process_file", "main"};
    bug.sanitizer_label = "heap-buffer-overflow";
    bug.signal_name = "SIGSEGV";
    bug.hazard_per_hour = 2.0;
    bug.exploitability = Exploitability::Exploitable;
    return bug;
}

MockBug fpe_bug() {
    MockBug bug;
    bug.name = "scale_div_zero";
    bug.stack = {"scale_factor", "decode_image", "main"};
    bug.sanitizer_label.clear();
    bug.signal_name = "SIGFPE";
    bug.hazard_per_hour = 1.0;
    bug.exploitability = Exploitability::ProbablyNotExploitable;
    return bug;
}

MockFuzzerProfile two_bug_profile(std::uint64_t seed) {
    MockFuzzerProfile p;
    p.rng_seed = seed;
    p.bugs = {overflow_bug(), fpe_bug()};
    p.repeat_crashes_per_hour = 6.0;
    p.coverage_per_hour = 90.0;
    return p;
}

bool runs_equal(const MockRun& a, const MockRun& b) {
    if (a.crashes.size() != b.crashes.size()) return false;
    for (std::size_t i = 0; i < a.crashes.size(); ++i)
        if (a.crashes[i].time_s != b.crashes[i].time_s ||
            a.crashes[i].bug_index != b.crashes[i].bug_index)
            return false;
    if (a.coverage_times_s != b.coverage_times_s) return false;
    if (a.trace.samples.size() != b.trace.samples.size()) return false;
    for (std::size_t i = 0; i < a.trace.samples.size(); ++i)
        if (a.trace.samples[i].t_s != b.trace.samples[i].t_s ||
            a.trace.samples[i].cpu_percent != b.trace.samples[i].cpu_percent ||
            a.trace.samples[i].rss_mb != b.trace.samples[i].rss_mb)
            return false;
    return a.trace.disk_read_mb == b.trace.disk_read_mb &&
           a.trace.disk_write_mb == b.trace.disk_write_mb;
}

}  // namespace

TEST_CASE("equal profiles give identical runs, different seeds diverge") {
    auto run1 = mock_fuzz(two_bug_profile(7), 3600.0);
    auto run2 = mock_fuzz(two_bug_profile(7), 3600.0);
    CHECK(runs_equal(run1, run2));

    auto run3 = mock_fuzz(two_bug_profile(8), 3600.0);
    CHECK_FALSE(runs_equal(run1, run3));
}

TEST_CASE("crash times are sorted and stay within the trial window") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto run = mock_fuzz(two_bug_profile(seed), 1800.0);
        double prev = 0.0;
        for (const auto& crash : run.crashes) {
            CHECK(crash.time_s >= prev);
            CHECK(crash.time_s <= 1800.0);
            CHECK(crash.bug_index < 2);
            prev = crash.time_s;
        }
        prev = 0.0;
        for (double t : run.coverage_times_s) {
            CHECK(t >= prev);
            CHECK(t <= 1800.0);
            prev = t;
        }
    }
}

TEST_CASE("a zero-hazard bug is never discovered") {
    MockFuzzerProfile p;
    p.bugs = {overflow_bug()};
    p.bugs[0].hazard_per_hour = 0.0;
    p.repeat_crashes_per_hour = 10.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        p.rng_seed = seed;
        CHECK(mock_fuzz(p, 86400.0).crashes.empty());
    }
}

TEST_CASE("discovery frequency follows the exponential hazard") {
    // P(found within T) = 1 - exp(-h * T / 3600). With h=1.0/h and T=1800s
    // that is 1 - exp(-0.5) ~ 0.3935.
    MockFuzzerProfile p;
    p.bugs = {overflow_bug()};
    p.bugs[0].hazard_per_hour = 1.0;
    const int reps = 2000;
    int found = 0;
    for (int seed = 0; seed < reps; ++seed) {
        p.rng_seed = static_cast<std::uint64_t>(seed);
        if (!mock_fuzz(p, 1800.0).crashes.empty()) ++found;
    }
    double expected = 1.0 - std::exp(-0.5);
    double sigma = std::sqrt(expected * (1.0 - expected) / reps);
    CHECK(std::abs(found / double(reps) - expected) < 5.0 * sigma);
}

TEST_CASE("repeats re-hit already discovered bugs only") {
    MockFuzzerProfile p;
    p.bugs = {overflow_bug(), fpe_bug()};
    p.bugs[0].hazard_per_hour = 50.0;
    p.bugs[1].hazard_per_hour = 0.0;
    p.repeat_crashes_per_hour = 30.0;
    p.rng_seed = 3;
    auto run = mock_fuzz(p, 3600.0);
    REQUIRE(run.crashes.size() > 1);
    for (const auto& crash : run.crashes) CHECK(crash.bug_index == 0);
}

TEST_CASE("queue growth tracks the coverage rate") {
    MockFuzzerProfile p;
    p.coverage_per_hour = 120.0;
    double total = 0.0;
    const int reps = 200;
    for (int seed = 0; seed < reps; ++seed) {
        p.rng_seed = static_cast<std::uint64_t>(seed);
        total += double(mock_fuzz(p, 1800.0).coverage_times_s.size());
    }
    double mean = total / reps;
    CHECK(mean > 50.0);
    CHECK(mean < 70.0);
}

TEST_CASE("synthetic trace covers the trial second by second") {
    auto run = mock_fuzz(two_bug_profile(11), 120.0);
    REQUIRE(run.trace.samples.size() == 120);
    for (const auto& s : run.trace.samples) {
        CHECK(s.cpu_percent >= 94.0);
        CHECK(s.cpu_percent <= 100.0);
        CHECK(s.rss_mb >= 150.0);
        CHECK(s.rss_mb <= 260.0);
    }
    CHECK(run.trace.disk_write_mb >= 40.0);
}

TEST_CASE("sanitizer transcripts round-trip through the parser") {
    auto bug = overflow_bug();
    auto report = parse_sanitizer_report(synth_sanitizer_report(bug, 99));
    REQUIRE(report.crashed);
    CHECK(report.vuln_raw == "heap-buffer-overflow");
    REQUIRE(report.frames.size() == bug.stack.size() + 2);
    for (std::size_t i = 0; i < bug.stack.size(); ++i)
        CHECK(report.frames[i].function_name == bug.stack[i]);

    auto triple = extract_stack_triple(report.frames, TriageConfig{});
    REQUIRE(triple.functions.size() == 3);
    CHECK(triple.functions[0] == "read_row");
    CHECK(triple.functions[1] == "decode_image");
    CHECK(triple.functions[2] == "process_file");
}

TEST_CASE("clean sanitizer runs parse as no crash") {
    auto report = parse_sanitizer_report(synth_clean_sanitizer_run());
    CHECK_FALSE(report.crashed);
}

TEST_CASE("debugger transcripts round-trip through the parser") {
    auto bug = fpe_bug();
    auto report = parse_debugger_report(synth_debugger_report(bug, 42));
    REQUIRE(report.crashed);
    CHECK(report.signal == "SIGFPE");
    REQUIRE(report.frames.size() == bug.stack.size());
    CHECK(report.frames[0].function_name == "scale_factor");
    CHECK(report.frames[1].function_name == "decode_image");
}

TEST_CASE("classifier transcripts round-trip through the parser") {
    auto bug = overflow_bug();
    auto record = parse_exploitability(synth_exploitable_report(bug));
    CHECK(record.category == Exploitability::Exploitable);
    CHECK(record.hash == mock_exploitable_hash(bug));

    auto fpe = fpe_bug();
    auto fpe_record = parse_exploitability(synth_exploitable_report(fpe));
    CHECK(fpe_record.category == Exploitability::ProbablyNotExploitable);
    CHECK(fpe_record.hash != record.hash);
}

TEST_CASE("a debugger-only bug triages with supplement provenance") {
    auto bug = fpe_bug();
    CrashSample sample;
    sample.id = "c0";
    sample.outcomes["asan"] = parse_sanitizer_report(synth_clean_sanitizer_run()).outcome();
    sample.outcomes["gdb"] = parse_debugger_report(synth_debugger_report(bug, 5)).outcome();

    auto [key, tool] = derive_bug_key(sample, TriageConfig{});
    CHECK(tool == "gdb");
    CHECK(key.vuln_type.raw_label == "SIGFPE");
    REQUIRE(key.triple.functions.size() == 3);
    CHECK(key.triple.functions[0] == "scale_factor");
}

TEST_CASE("fake addresses differ between salts but identity fields persist") {
    auto bug = overflow_bug();
    auto a = synth_sanitizer_report(bug, 1);
    auto b = synth_sanitizer_report(bug, 2);
    CHECK(a != b);
    auto pa = parse_sanitizer_report(a);
    auto pb = parse_sanitizer_report(b);
    CHECK(pa.vuln_raw == pb.vuln_raw);
    REQUIRE(pa.frames.size() == pb.frames.size());
    for (std::size_t i = 0; i < pa.frames.size(); ++i)
        CHECK(pa.frames[i].function_name == pb.frames[i].function_name);
}
