#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "fuzzeval/config.hpp"
#include "fuzzeval/resource.hpp"

namespace fuzzeval {

struct SeedSelection {
    std::vector<std::filesystem::path> files;
    std::vector<std::string> digests;  // content digest per file, same order
    bool exhausted = false;            // fewer candidates than requested
};

// Filters the corpus to regular, nonempty files within the size cap, then
// samples `seed_count` of them without replacement, reproducibly from
// `rng_seed`. All survivors are taken (exhausted flag set) when fewer
// remain. Throws EmptyCorpus when nothing survives the filter.
SeedSelection select_seeds(const std::filesystem::path& corpus_dir, int seed_count,
                           std::int64_t seed_max_bytes, std::uint64_t rng_seed);

struct TrialPlan {
    std::string fuzzer;
    std::string target;
    int rep = 0;
    std::filesystem::path work_dir;
    std::uint64_t rng_seed = 0;
    double duration_s = 0.0;
    int cpu_cores = 1;
    std::int64_t mem_limit_mb = 0;
    std::int64_t swap_limit_mb = 0;
    std::int64_t mem_escalation_mb = 0;
    std::vector<std::filesystem::path> seeds;
};

struct CampaignPlan {
    std::vector<TrialPlan> trials;
    // Per target: the digests every trial of that target shares.
    std::map<std::string, std::vector<std::string>> seed_digests;
    std::vector<std::string> warnings;
};

// One plan per (fuzzer, target, repetition), in that nesting order. Work
// dirs follow <out>/<fuzzer>/<target>/rep<k>. Throws UnknownFuzzer or
// UnknownTarget for ids without a descriptor.
CampaignPlan plan_campaign(const CampaignConfig& config, const std::filesystem::path& out_dir);

struct CrashArtifact {
    std::string id;       // stable within the trial
    std::string input;    // path relative to the trial dir
    double discovery_time_s = 0.0;
};

struct TrialRecord {
    std::string fuzzer;
    std::string target;
    int rep = 0;
    std::int64_t started_unix = 0;
    std::int64_t ended_unix = 0;
    double duration_s = 0.0;
    std::vector<CrashArtifact> crashes;
    std::vector<std::string> coverage_inputs;  // relative paths
    ResourceTrace trace;
    int exit_status = 0;
    bool abnormal_exit = false;
    bool escalated = false;       // re-ran under the raised memory limit
    bool low_cpu_warning = false;

    std::string to_json() const;
    static TrialRecord from_json(const std::string& text, const std::string& origin);
};

// One JSON object per line, one line per sample. Disk counters live in the
// trial record, not the sample stream.
std::string trace_to_jsonl(const ResourceTrace& trace);
ResourceTrace trace_from_jsonl(const std::string& text, const std::string& origin);

// Memory-limit escalations stick for every later trial of the same
// (fuzzer, target) pair. Thread-safe.
class EscalationBoard {
  public:
    bool escalated(const std::string& fuzzer, const std::string& target) const;
    void record(const std::string& fuzzer, const std::string& target);

  private:
    mutable std::mutex mutex_;
    std::set<std::pair<std::string, std::string>> pairs_;
};

// Executes one trial (simulated for mock adapters, a real monitored process
// otherwise) and writes crashes/, queue/, trace.jsonl and trial.json under
// the plan's work dir. Throws LaunchFailure when the fuzzer cannot start;
// abnormal exits are recorded in the returned record instead.
TrialRecord run_trial(const TrialPlan& plan, const CampaignConfig& config,
                      EscalationBoard& escalations);

struct CampaignResult {
    std::vector<TrialRecord> trials;  // plan order
    std::map<std::string, std::vector<std::string>> seed_digests;
    std::vector<std::string> warnings;
};

// Plans and runs the whole campaign with up to `jobs` trials in flight.
CampaignResult run_campaign(const CampaignConfig& config, const std::filesystem::path& out_dir,
                            int jobs);

}  // namespace fuzzeval
