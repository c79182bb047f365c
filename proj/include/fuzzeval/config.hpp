#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fuzzeval/coverage.hpp"
#include "fuzzeval/mock_fuzzer.hpp"

namespace fuzzeval {

enum class AdapterKind { Mock, Process };

// How to launch one fuzzer and where it leaves artifacts. Mock adapters
// simulate a trial from `profile`; process adapters run `launch_template`
// inside the trial directory ({target}, {seeds} and {out} substituted).
struct FuzzerAdapter {
    std::string id;
    AdapterKind kind = AdapterKind::Process;
    std::string launch_template;
    std::string crash_glob = "crashes/*";
    std::string queue_glob = "queue/*";
    std::map<std::string, std::string> env;
    std::string container_image;  // used when a container runtime is configured
    MockFuzzerProfile profile;
};

struct TargetSpec {
    std::string id;
    std::string command;  // fuzz target invocation, {input} placeholder
    std::filesystem::path seed_dir;  // empty: the campaign runs seedless
    // Crash validation templates, each taking {input}.
    std::string sanitizer_command;
    std::string debugger_command;
    std::string classifier_command;
    CoverageSpec coverage;  // replay_template empty: coverage disabled
};

struct CampaignConfig {
    std::vector<std::string> fuzzers;  // adapter ids
    std::vector<std::string> targets;  // program ids
    double duration_s = 86400.0;
    int repetitions = 30;
    int cpu_cores_per_trial = 1;
    std::int64_t mem_limit_mb = 2048;
    std::int64_t swap_limit_mb = 1024;
    std::int64_t mem_escalation_mb = 8192;
    int seed_count = 100;
    std::int64_t seed_max_bytes = 1048576;
    std::uint64_t rng_seed = 1;
    int jobs = 1;
    std::string container_runtime;  // e.g. "docker"; empty: bare processes

    std::vector<FuzzerAdapter> adapters;
    std::vector<TargetSpec> programs;

    static CampaignConfig load(const std::filesystem::path& file);
    static CampaignConfig parse(const std::string& json_text, const std::string& origin);

    // Throws ConfigError on broken invariants: empty fuzzer/target lists,
    // repetitions < 1, duration <= 0, escalation below the base limit,
    // duplicate ids, malformed mock bugs.
    void validate() const;

    const FuzzerAdapter* adapter(const std::string& id) const;
    const TargetSpec* program(const std::string& id) const;

    // Canonical serialization and its digest; equal digests mean an
    // equivalent campaign setup, which makes re-runs recognizable.
    std::string to_json() const;
    std::uint64_t digest() const;
};

}  // namespace fuzzeval
