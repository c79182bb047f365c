#include "fuzzeval/mock_fuzzer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fuzzeval/util.hpp"

namespace fuzzeval {

namespace {

std::string hex_address(std::mt19937_64& rng) {
    return "0x" + util::to_hex(0x550000000000ULL + util::bounded_rand(rng, 0xffffffffULL));
}

// The planted functions are laid out in one fake translation unit, one line
// of separation per frame depth.
std::string source_loc(const MockBug& bug, std::size_t depth) {
    return "/src/" + bug.name + ".c:" + std::to_string(12 + 10 * depth);
}

const char* classifier_description(Exploitability e) {
    switch (e) {
        case Exploitability::Exploitable:
            return "Access violation on destination operand";
        case Exploitability::ProbablyExploitable:
            return "Access violation near NULL on destination operand";
        case Exploitability::ProbablyNotExploitable:
            return "Access violation on source operand";
        case Exploitability::Unknown:
            break;
    }
    return "Signal received";
}

}  // namespace

MockRun mock_fuzz(const MockFuzzerProfile& profile, double duration_s) {
    std::mt19937_64 rng(profile.rng_seed);
    MockRun run;

    for (std::size_t i = 0; i < profile.bugs.size(); ++i) {
        double hazard = profile.bugs[i].hazard_per_hour;
        if (hazard <= 0.0) continue;
        double first = util::exponential_sample(rng, hazard / 3600.0);
        if (first > duration_s) continue;
        run.crashes.push_back({first, i});

        double window_h = (duration_s - first) / 3600.0;
        unsigned repeats = util::poisson_sample(rng, profile.repeat_crashes_per_hour * window_h);
        for (unsigned r = 0; r < repeats; ++r) {
            double t = first + util::uniform01(rng) * (duration_s - first);
            run.crashes.push_back({t, i});
        }
    }
    std::stable_sort(run.crashes.begin(), run.crashes.end(),
                     [](const MockCrash& a, const MockCrash& b) { return a.time_s < b.time_s; });

    unsigned queue = util::poisson_sample(rng, profile.coverage_per_hour * duration_s / 3600.0);
    for (unsigned i = 0; i < queue; ++i)
        run.coverage_times_s.push_back(util::uniform01(rng) * duration_s);
    std::sort(run.coverage_times_s.begin(), run.coverage_times_s.end());

    // A busy, slowly growing process: near-full core, RSS ramping toward a
    // few hundred MB.
    for (double t = 1.0; t <= duration_s; t += 1.0) {
        double cpu = 94.0 + util::uniform01(rng) * 6.0;
        double rss = 150.0 + 100.0 * (t / duration_s) + util::uniform01(rng) * 8.0;
        run.trace.samples.push_back({t, cpu, rss});
    }
    run.trace.disk_read_mb = 2.0 + util::uniform01(rng) * 4.0;
    run.trace.disk_write_mb = 40.0 + util::uniform01(rng) * 20.0;
    return run;
}

std::string synth_sanitizer_report(const MockBug& bug, std::uint64_t salt) {
    std::mt19937_64 rng(salt);
    std::ostringstream out;
    std::string fault = hex_address(rng);
    out << "=================================================================\n";
    out << "==" << 1000 + util::bounded_rand(rng, 30000) << "==ERROR: AddressSanitizer: "
        << bug.sanitizer_label << " on address " << fault << " at pc " << hex_address(rng)
        << " bp " << hex_address(rng) << " sp " << hex_address(rng) << "\n";
    out << "WRITE of size 1 at " << fault << " thread T0\n";
    std::size_t depth = 0;
    for (const auto& fn : bug.stack) {
        out << "    #" << depth << " " << hex_address(rng) << " in " << fn << " "
            << source_loc(bug, depth) << "\n";
        ++depth;
    }
    out << "    #" << depth << " " << hex_address(rng)
        << " in __libc_start_call_main ../sysdeps/nptl/libc_start_call_main.h:58\n";
    ++depth;
    out << "    #" << depth << " " << hex_address(rng) << " in _start (/bin/" << bug.name
        << "+0x1164)\n";
    out << "\nSUMMARY: AddressSanitizer: " << bug.sanitizer_label << " " << source_loc(bug, 0)
        << " in " << bug.stack.front() << "\n";
    return out.str();
}

std::string synth_clean_sanitizer_run() {
    return "input parsed, 0 records\n";
}

std::string synth_debugger_report(const MockBug& bug, std::uint64_t salt) {
    std::mt19937_64 rng(salt);
    std::ostringstream out;
    out << "[Thread debugging using libthread_db enabled]\n";
    out << "Using host libthread_db library \"/lib/x86_64-linux-gnu/libthread_db.so.1\".\n\n";
    out << "Program received signal " << bug.signal_name << ", "
        << (bug.signal_name == "SIGFPE" ? "Arithmetic exception." : "Segmentation fault.")
        << "\n";
    std::size_t depth = 0;
    for (const auto& fn : bug.stack) {
        out << "#" << depth << "  " << hex_address(rng) << " in " << fn << " () at "
            << source_loc(bug, depth) << "\n";
        ++depth;
    }
    return out.str();
}

std::string mock_exploitable_hash(const MockBug& bug) {
    std::uint64_t a = util::fnv1a64(bug.name);
    std::uint64_t b = util::fnv1a64(bug.signal_name, a);
    return util::to_hex(a) + "." + util::to_hex(b);
}

std::string synth_exploitable_report(const MockBug& bug) {
    std::ostringstream out;
    out << "Description: " << classifier_description(bug.exploitability) << "\n";
    out << "Short description: DestAv (8/22)\n";
    out << "Hash: " << mock_exploitable_hash(bug) << "\n";
    out << "Exploitability Classification: " << to_string(bug.exploitability) << "\n";
    out << "Explanation: The target crashed. This is a synthesized classification.\n";
    out << "Other tags: AccessViolation (21/22)\n";
    return out.str();
}

}  // namespace fuzzeval
