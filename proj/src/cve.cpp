#include "fuzzeval/cve.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <regex>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/util.hpp"

namespace fuzzeval {
namespace {

const std::regex kCveIdPattern(R"(CVE-[0-9]{4}-[0-9]{4,})");

[[noreturn]] void schema_fail(const std::filesystem::path& file, std::size_t line,
                              const std::string& what) {
    throw SchemaError(file.string() + ":" + std::to_string(line) + ": " + what);
}

std::set<std::string> split_list(std::string_view value, char sep) {
    std::set<std::string> out;
    for (const auto& item : util::split(value, sep)) {
        auto token = util::trim(item);
        if (!token.empty()) out.insert(util::to_lower(token));
    }
    return out;
}

std::string file_keyword(std::string_view path) {
    return util::to_lower(std::filesystem::path(path).filename().string());
}

// One lowercase token for the report's vulnerability type: the canonical
// name, or the raw label when it maps to nothing known.
std::string type_keyword(std::string_view raw_label) {
    auto type = canonicalize_vuln_type(raw_label);
    if (type.canonical == VulnClass::Unknown && !type.raw_label.empty())
        return util::to_lower(type.raw_label);
    return type.canonical_name();
}

std::set<std::string> keywords_from_frames(std::string_view raw_label,
                                           const std::vector<StackFrame>& frames) {
    std::set<std::string> keywords;
    keywords.insert(type_keyword(raw_label));
    for (const auto& frame : frames) {
        if (!frame.function_name.empty() && frame.function_name != "??")
            keywords.insert(util::to_lower(frame.function_name));
        if (!frame.source_file.empty()) keywords.insert(file_keyword(frame.source_file));
    }
    return keywords;
}

std::set<std::string> entry_keyword_pool(const CveEntry& entry) {
    std::set<std::string> pool;
    if (entry.vuln_type.canonical != VulnClass::Unknown || !entry.vuln_type.raw_label.empty()) {
        pool.insert(entry.vuln_type.canonical == VulnClass::Unknown
                        ? util::to_lower(entry.vuln_type.raw_label)
                        : std::string(entry.vuln_type.canonical_name()));
    }
    for (const auto& fn : entry.vulnerable_functions) pool.insert(util::to_lower(fn));
    for (const auto& file : entry.vulnerable_files) pool.insert(file_keyword(file));
    if (entry.stack_trace)
        for (const auto& fn : *entry.stack_trace) pool.insert(util::to_lower(fn));
    return pool;
}

}  // namespace

CveDatabase CveDatabase::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw SchemaError("cannot open CVE database: " + file.string());

    CveDatabase db;
    std::string program;
    std::optional<CveEntry> current;
    std::size_t current_line = 0;
    bool version_seen = false;

    auto flush = [&](std::size_t at_line) {
        if (!current) return;
        if (!std::regex_match(current->cve_id, kCveIdPattern))
            schema_fail(file, current_line, "malformed CVE id '" + current->cve_id + "'");
        auto& entries = db.tables_[program];
        for (const auto& existing : entries) {
            if (existing.cve_id == current->cve_id)
                schema_fail(file, at_line,
                            "duplicate " + current->cve_id + " in table [" + program + "]");
        }
        entries.push_back(std::move(*current));
        current.reset();
    };

    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto line = util::trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (!version_seen) {
            if (line != "cvedb-version: 1")
                schema_fail(file, lineno, "expected 'cvedb-version: 1' header");
            version_seen = true;
            continue;
        }
        if (line.front() == '[' && line.back() == ']') {
            flush(lineno);
            program = util::trim(line.substr(1, line.size() - 2));
            if (program.empty()) schema_fail(file, lineno, "empty program id");
            db.tables_[program];
            continue;
        }

        auto colon = line.find(':');
        if (colon == std::string::npos) schema_fail(file, lineno, "expected 'key: value'");
        auto key = util::trim(line.substr(0, colon));
        auto value = util::trim(line.substr(colon + 1));

        if (key == "cve") {
            if (program.empty()) schema_fail(file, lineno, "cve record outside a [program] table");
            flush(lineno);
            current = CveEntry{};
            current->cve_id = value;
            current_line = lineno;
            continue;
        }
        if (!current) schema_fail(file, lineno, "field '" + key + "' before any cve record");

        if (key == "type") {
            current->vuln_type = canonicalize_vuln_type(value);
        } else if (key == "functions") {
            current->vulnerable_functions = split_list(value, ',');
        } else if (key == "files") {
            current->vulnerable_files = split_list(value, ',');
        } else if (key == "stack") {
            std::vector<std::string> names;
            for (const auto& part : util::split(value, '>')) {
                auto token = util::trim(part);
                if (!token.empty()) names.push_back(token);
            }
            current->stack_trace = std::move(names);
        } else if (key == "stack-tool") {
            current->trace_tool = value;
        } else if (key == "cvss") {
            double score = 0.0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), score);
            if (ec != std::errc() || ptr != value.data() + value.size())
                schema_fail(file, lineno, "unparsable cvss '" + value + "'");
            if (score < 0.0 || score > 10.0)
                schema_fail(file, lineno, "cvss " + value + " outside [0, 10]");
            current->cvss_score = score;
        } else {
            schema_fail(file, lineno, "unknown field '" + key + "'");
        }
    }
    if (!version_seen) schema_fail(file, lineno, "empty database, missing version header");
    flush(lineno);
    return db;
}

const std::vector<CveEntry>* CveDatabase::table(std::string_view program) const {
    auto it = tables_.find(std::string(program));
    return it == tables_.end() ? nullptr : &it->second;
}

std::size_t CveDatabase::entry_count() const {
    std::size_t n = 0;
    for (const auto& [program, entries] : tables_) n += entries.size();
    return n;
}

std::set<std::string> extract_keywords(const SanitizerReport& report) {
    if (!report.crashed) throw NotValidated("keyword extraction needs a crash report");
    return keywords_from_frames(report.vuln_raw, report.frames);
}

std::set<std::string> extract_keywords(const DebuggerReport& report) {
    if (!report.crashed) throw NotValidated("keyword extraction needs a crash report");
    return keywords_from_frames(report.signal, report.frames);
}

std::vector<MatchCandidate> match_cves(const std::set<std::string>& keywords,
                                       const std::vector<CveEntry>& table) {
    std::vector<MatchCandidate> out;
    for (const auto& entry : table) {
        MatchCandidate candidate;
        candidate.cve_id = entry.cve_id;
        for (const auto& token : entry_keyword_pool(entry))
            if (keywords.count(token)) candidate.matched_keywords.insert(token);
        candidate.score = candidate.matched_keywords.size();
        if (candidate.score > 0) out.push_back(std::move(candidate));
    }
    std::sort(out.begin(), out.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.cve_id < b.cve_id;
    });
    return out;
}

AuditLog::AuditLog(std::filesystem::path file) : file_(std::move(file)) {}

void AuditLog::append(std::string_view event) {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(file_, std::ios::app);
    if (!out) throw std::runtime_error("cannot append to audit log: " + file_.string());
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch());
    out << secs.count() << '\t' << event << '\n';
}

MatchCandidate confirm_match(const MatchCandidate& candidate, bool verdict,
                             std::string_view note, AuditLog& log) {
    if (candidate.confirmed.has_value())
        throw AlreadyConfirmed(candidate.cve_id + " already has a verdict");
    MatchCandidate out = candidate;
    out.confirmed = verdict;
    out.note = std::string(note);
    log.append(out.cve_id + (verdict ? "\tconfirmed\t" : "\trejected\t") + out.note);
    return out;
}

HighSeverityResult high_severity_count(const std::vector<ConfirmedMatch>& confirmed) {
    HighSeverityResult result;
    std::map<std::string, std::set<std::string>> severe_ids;
    for (const auto& match : confirmed) {
        if (!match.entry.cvss_score.has_value()) {
            result.missing_scores.insert({match.fuzzer_id, match.entry.cve_id});
            continue;
        }
        if (*match.entry.cvss_score >= kHighSeverityCvss)
            severe_ids[match.fuzzer_id].insert(match.entry.cve_id);
        else
            result.counts.try_emplace(match.fuzzer_id, 0);
    }
    for (const auto& [fuzzer, ids] : severe_ids) result.counts[fuzzer] = ids.size();
    return result;
}

}  // namespace fuzzeval
