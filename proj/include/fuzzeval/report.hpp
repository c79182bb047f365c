#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fuzzeval/campaign.hpp"
#include "fuzzeval/config.hpp"
#include "fuzzeval/coverage.hpp"
#include "fuzzeval/cve.hpp"
#include "fuzzeval/metrics.hpp"
#include "fuzzeval/stats.hpp"
#include "fuzzeval/triage.hpp"

namespace fuzzeval {

inline constexpr const char* kToolVersion = "fuzzeval 0.1.0";

// A finished campaign read back from its output directory: the canonical
// config plus every trial record with its resource trace.
struct CampaignData {
    CampaignConfig config;
    std::filesystem::path dir;
    std::vector<TrialRecord> trials;
};

// Loads <dir>/campaign.json and every <fuzzer>/<target>/rep<k>/trial.json
// plus trace.jsonl the plan describes. Throws ConfigError when the config
// is missing, SchemaError on undecodable records.
CampaignData load_campaign(const std::filesystem::path& dir);

// Attaches tool outcomes to every stored crash input. Transcript files
// (<input>.asan.txt, .gdb.txt, .exploitable.txt) are read when present;
// otherwise the target's configured analysis commands are run once and
// their output cached as those files. Sample ids are
// "<fuzzer>/<target>/rep<k>/<crash id>", unique campaign-wide.
std::vector<CrashSample> analyze_crashes(const CampaignData& campaign);

// Round trips for the analysis artifacts stored under <dir>/analysis/.
std::string samples_to_json(const std::vector<CrashSample>& samples);
std::vector<CrashSample> samples_from_json(const std::string& text, const std::string& origin);
std::string triage_to_json(const TriageResult& result, const ValidationMatrix& matrix);
std::pair<TriageResult, ValidationMatrix> triage_from_json(const std::string& text,
                                                           const std::string& origin);

struct ComparisonRow {
    std::string target;
    double baseline_mean = 0.0;
    double challenger_mean = 0.0;
    metrics::ComparisonResult result;
};

struct StabilityRow {
    std::string fuzzer;
    std::string target;
    stats::SummaryStats stats;  // over unique bugs per repetition
};

struct RareRow {
    std::string fuzzer;
    std::vector<std::string> bug_keys;  // sorted printable keys
};

struct CurveSeries {
    std::string fuzzer;
    std::string target;
    std::vector<double> grid_s;
    std::vector<double> mean_unique_bugs;
};

struct ExploitableRow {
    std::string fuzzer;
    std::string target;
    double mean_exploitable = 0.0;
};

struct SeverityRow {
    std::string fuzzer;
    std::size_t high_severity_cves = 0;
};

struct OverheadRow {
    std::string fuzzer;
    metrics::OverheadSummary summary;  // aggregated over the fuzzer's trials
};

struct CoverageRow {
    std::string fuzzer;
    std::string target;
    std::size_t covered_lines = 0;
    std::size_t instrumented_lines = 0;
    double percent = 0.0;
    std::size_t replay_failures = 0;
};

struct Provenance {
    std::string tool_version = kToolVersion;
    std::string config_digest;  // hex
    std::uint64_t rng_seed = 0;
};

// Every table the analysis stage produces, computed once in memory; both
// renderings below read from the same instance so their numbers cannot
// drift apart.
struct ReportBundle {
    Provenance provenance;
    std::string baseline;
    std::vector<ComparisonRow> comparisons;
    std::vector<StabilityRow> stability;
    std::vector<RareRow> rare;
    std::vector<CurveSeries> curves;
    std::vector<ExploitableRow> exploitable;
    std::vector<SeverityRow> severity;
    std::vector<OverheadRow> overhead;
    std::vector<CoverageRow> coverage;
    std::optional<stats::CorrelationResult> coverage_bug_correlation;
    ValidationMatrix matrix;
    std::vector<std::string> notes;
};

// Builds the full bundle from stored artifacts. `baseline` must be one of
// the campaign's fuzzers (UnknownFuzzer otherwise). Coverage rows appear
// only for targets with a replay template; severity rows only when
// confirmed CVE matches are passed in. `curve_points` evenly spaced grid
// points span (0, duration].
ReportBundle build_bundle(const CampaignData& campaign, const TriageResult& triage,
                          const ValidationMatrix& matrix,
                          const std::vector<CrashSample>& samples, const std::string& baseline,
                          const std::vector<ConfirmedMatch>& confirmed_cves = {},
                          int curve_points = 12);

// Machine-readable rendering: full numeric precision, stable key order.
std::string bundle_to_json(const ReportBundle& bundle);

// Human-readable tables. p values below 0.01 render as "<0.01"; every
// other number matches the JSON rendering.
std::string render_report(const ReportBundle& bundle);

}  // namespace fuzzeval
