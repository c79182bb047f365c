#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzeval/model.hpp"
#include "fuzzeval/report_parsers.hpp"

namespace fuzzeval {

struct CveEntry {
    std::string cve_id;
    VulnType vuln_type;
    std::set<std::string> vulnerable_functions;
    std::set<std::string> vulnerable_files;
    std::optional<std::vector<std::string>> stack_trace;
    std::optional<std::string> trace_tool;
    std::optional<double> cvss_score;  // in [0.0, 10.0]
};

// Keyword tables per benchmark program, curated by hand in a line-oriented
// text file:
//
//   cvedb-version: 1
//   [program-id]
//   cve: CVE-2017-12345      <- starts a record, unique per program
//   type: heap-buffer-overflow
//   functions: parse_chunk, read_row
//   files: chunk.c
//   stack: parse_chunk > read_row > main
//   stack-tool: asan
//   cvss: 8.1
//
// '#' comments and blank lines are free; every field except cve: is
// optional. Malformed content raises SchemaError with the line number.
class CveDatabase {
  public:
    static CveDatabase load(const std::filesystem::path& file);

    const std::vector<CveEntry>* table(std::string_view program) const;
    const std::map<std::string, std::vector<CveEntry>>& tables() const { return tables_; }
    std::size_t entry_count() const;

  private:
    std::map<std::string, std::vector<CveEntry>> tables_;
};

struct MatchCandidate {
    std::string cve_id;
    std::set<std::string> matched_keywords;
    std::size_t score = 0;  // = matched_keywords.size()
    std::optional<bool> confirmed;
    std::string note;
};

// Lowercased keyword set from a crash report: canonical vulnerability type,
// frame function names (unresolved ?? frames excluded), and source file
// basenames. Throws NotValidated on a non-crash report.
std::set<std::string> extract_keywords(const SanitizerReport& report);
std::set<std::string> extract_keywords(const DebuggerReport& report);

// Candidates with at least one keyword hit, sorted by score descending and
// cve_id ascending. Matching is case-insensitive exact token comparison
// against the entry's type, functions, files, and stack-trace names.
std::vector<MatchCandidate> match_cves(const std::set<std::string>& keywords,
                                       const std::vector<CveEntry>& table);

// Append-only confirmation trail; one timestamped line per decision.
class AuditLog {
  public:
    explicit AuditLog(std::filesystem::path file);
    void append(std::string_view event);
    const std::filesystem::path& path() const { return file_; }

  private:
    std::filesystem::path file_;
    std::mutex mu_;
};

// Marks a candidate as manually confirmed or rejected and logs the verdict.
// Score and matched keywords are untouched. Throws AlreadyConfirmed when the
// candidate already carries a verdict.
MatchCandidate confirm_match(const MatchCandidate& candidate, bool verdict,
                             std::string_view note, AuditLog& log);

constexpr double kHighSeverityCvss = 7.0;  // severe when cvss >= 7.0

struct ConfirmedMatch {
    std::string fuzzer_id;
    BugKey bug;
    CveEntry entry;
};

struct HighSeverityResult {
    std::map<std::string, std::size_t> counts;  // fuzzer -> severe CVE count
    // pairs that carry no cvss score, excluded from the counts
    std::set<std::pair<std::string, std::string>> missing_scores;  // (fuzzer, cve_id)
};

// Counts distinct CVEs with cvss >= 7.0 per fuzzer; the same CVE matched by
// several bugs of one fuzzer counts once.
HighSeverityResult high_severity_count(const std::vector<ConfirmedMatch>& confirmed);

}  // namespace fuzzeval
