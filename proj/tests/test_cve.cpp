#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "fuzzeval/cve.hpp"
#include "fuzzeval/util.hpp"

using namespace fuzzeval;

namespace {

std::filesystem::path fixture_db() {
    return std::filesystem::path(FUZZEVAL_GOLDEN_DIR).parent_path() / "cve_fixture.txt";
}

std::filesystem::path write_temp_db(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    util::write_file(path, content);
    return path;
}

CveEntry entry_with(std::string id, std::string type, std::set<std::string> functions,
                    std::set<std::string> files, std::optional<double> cvss) {
    CveEntry e;
    e.cve_id = std::move(id);
    e.vuln_type = canonicalize_vuln_type(type);
    e.vulnerable_functions = std::move(functions);
    e.vulnerable_files = std::move(files);
    e.cvss_score = cvss;
    return e;
}

}  // namespace

TEST_CASE("fixture database loads three program tables") {
    auto db = CveDatabase::load(fixture_db());
    CHECK(db.tables().size() == 3);
    CHECK(db.entry_count() == 6);
    REQUIRE(db.table("mp42aac") != nullptr);
    CHECK(db.table("mp42aac")->size() == 3);
    CHECK(db.table("nosuch") == nullptr);

    const auto& first = db.table("mp42aac")->front();
    CHECK(first.cve_id == "CVE-2018-10100");
    CHECK(first.vuln_type.canonical == VulnClass::HeapBufferOverflow);
    CHECK(first.vulnerable_functions.count("ap4_databuffer_setdatasize") == 1);
    REQUIRE(first.stack_trace.has_value());
    CHECK(first.stack_trace->size() == 3);
    CHECK(first.trace_tool == "asan");
    CHECK(first.cvss_score == 8.8);

    CHECK_FALSE(db.table("exiv2")->at(1).cvss_score.has_value());
}

TEST_CASE("duplicate ids within a table are rejected") {
    auto path = write_temp_db("cvedb_dup.txt",
                              "cvedb-version: 1\n[p]\ncve: CVE-2020-0001\ncve: CVE-2020-0001\n");
    CHECK_THROWS_AS(CveDatabase::load(path), SchemaError);
    std::filesystem::remove(path);
}

TEST_CASE("same id in different tables is fine") {
    auto path = write_temp_db(
        "cvedb_twotables.txt",
        "cvedb-version: 1\n[p]\ncve: CVE-2020-0001\n[q]\ncve: CVE-2020-0001\n");
    CHECK(CveDatabase::load(path).entry_count() == 2);
    std::filesystem::remove(path);
}

TEST_CASE("schema violations carry line context") {
    auto checks = {
        std::make_pair(std::string("cvedb_range.txt"),
                       std::string("cvedb-version: 1\n[p]\ncve: CVE-2020-0001\ncvss: 11.0\n")),
        std::make_pair(std::string("cvedb_badid.txt"),
                       std::string("cvedb-version: 1\n[p]\ncve: CVE-20-1\n")),
        std::make_pair(std::string("cvedb_nover.txt"), std::string("[p]\ncve: CVE-2020-0001\n")),
        std::make_pair(std::string("cvedb_orphan.txt"),
                       std::string("cvedb-version: 1\ncve: CVE-2020-0001\n")),
        std::make_pair(std::string("cvedb_braces.txt"),
                       std::string("cvedb-version: 1\n[p]\nfunctions: f\n")),
        std::make_pair(std::string("cvedb_unknown.txt"),
                       std::string("cvedb-version: 1\n[p]\ncve: CVE-2020-0001\nseverity: 9\n")),
    };
    for (const auto& [name, content] : checks) {
        auto path = write_temp_db(name, content);
        CHECK_THROWS_AS(CveDatabase::load(path), SchemaError);
        std::filesystem::remove(path);
    }
    auto ok = write_temp_db("cvedb_ok.txt",
                            "# comment\n\ncvedb-version: 1\n[p]\ncve: CVE-2020-0001\ncvss: 0\n");
    CHECK(CveDatabase::load(ok).entry_count() == 1);
    std::filesystem::remove(ok);
}

TEST_CASE("keywords from a synthetic sanitizer report") {
    SanitizerReport rep;
    rep.crashed = true;
    rep.vuln_raw = "heap-buffer-overflow";
    rep.frames = {StackFrame{"F_A", "/build/src/x.c", 10, 0},
                  StackFrame{"f_b", "/build/src/y.c", 20, 1}};
    auto kws = extract_keywords(rep);
    CHECK(kws == std::set<std::string>{"heap-buffer-overflow", "f_a", "f_b", "x.c", "y.c"});
}

TEST_CASE("unresolved frames contribute nothing but the type") {
    SanitizerReport rep;
    rep.crashed = true;
    rep.vuln_raw = "SEGV";
    rep.frames = {StackFrame{"??", "", std::nullopt, 0}};
    CHECK(extract_keywords(rep) == std::set<std::string>{"segv"});
}

TEST_CASE("keywords from the golden debugger transcript") {
    auto rep = parse_debugger_report(
        util::read_file(std::filesystem::path(FUZZEVAL_GOLDEN_DIR) / "gdb_div_zero.txt"));
    auto kws = extract_keywords(rep);
    CHECK(kws.count("float-point-exception") == 1);
    CHECK(kws.count("divide") == 1);
    CHECK(kws.count("main") == 1);
    CHECK(kws.count("div_zero.c") == 1);
    CHECK(kws.size() == 4);
}

TEST_CASE("non-crash reports cannot produce keywords") {
    SanitizerReport rep;
    CHECK_THROWS_AS(extract_keywords(rep), NotValidated);
    DebuggerReport drep;
    CHECK_THROWS_AS(extract_keywords(drep), NotValidated);
}

TEST_CASE("candidates are ranked by matched keyword count") {
    auto db = CveDatabase::load(fixture_db());
    std::set<std::string> keywords = {"heap-buffer-overflow", "ap4_databuffer_setdatasize",
                                      "ap4databuffer.cpp", "main"};
    auto ranked = match_cves(keywords, *db.table("mp42aac"));
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].cve_id == "CVE-2018-10100");
    CHECK(ranked[0].score == 4);
    CHECK(ranked[0].matched_keywords ==
          std::set<std::string>{"heap-buffer-overflow", "ap4_databuffer_setdatasize",
                                "ap4databuffer.cpp", "main"});
    CHECK(ranked[1].cve_id == "CVE-2018-10102");
    CHECK(ranked[1].score == 1);  // type only
}

TEST_CASE("zero-score entries are omitted and empty overlap gives empty output") {
    auto db = CveDatabase::load(fixture_db());
    CHECK(match_cves({"no", "overlap", "at-all"}, *db.table("mp42aac")).empty());
}

TEST_CASE("score ties break by ascending cve id") {
    std::vector<CveEntry> table = {
        entry_with("CVE-2020-0002", "segv", {"shared_fn"}, {}, 5.0),
        entry_with("CVE-2020-0001", "segv", {"shared_fn"}, {}, 5.0),
    };
    auto ranked = match_cves({"segv", "shared_fn"}, table);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].cve_id == "CVE-2020-0001");
    CHECK(ranked[1].cve_id == "CVE-2020-0002");
    CHECK(ranked[0].score == ranked[1].score);
}

TEST_CASE("ranking is stable under table permutation") {
    auto db = CveDatabase::load(fixture_db());
    auto table = *db.table("mp42aac");
    std::set<std::string> keywords = {"heap-buffer-overflow", "main",
                                      "ap4_mp4audiodsiparser_readbits"};
    auto before = match_cves(keywords, table);
    std::mt19937_64 rng(3);
    std::shuffle(table.begin(), table.end(), rng);
    auto after = match_cves(keywords, table);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i].cve_id == after[i].cve_id);
        CHECK(before[i].score == after[i].score);
    }
}

TEST_CASE("score equals brute-force intersection cardinality") {
    std::mt19937_64 rng(41);
    const std::vector<std::string> universe = {"alpha", "beta",  "gamma", "delta", "segv",
                                               "f1",    "f2",    "x.c",   "y.c",   "main",
                                               "parse", "token", "read",  "write", "close"};
    for (int trial = 0; trial < 200; ++trial) {
        std::set<std::string> functions, files, keywords;
        for (const auto& token : universe) {
            if (util::bounded_rand(rng, 3) == 0) functions.insert(token);
            if (util::bounded_rand(rng, 4) == 0) files.insert(token);
            if (util::bounded_rand(rng, 2) == 0) keywords.insert(token);
        }
        auto entry = entry_with("CVE-2021-1234", "segv", functions, files, 5.0);

        std::set<std::string> pool = functions;
        pool.insert(files.begin(), files.end());
        pool.insert("segv");
        std::size_t expected = 0;
        for (const auto& token : pool) expected += keywords.count(token);

        auto ranked = match_cves(keywords, {entry});
        if (expected == 0) {
            CHECK(ranked.empty());
        } else {
            REQUIRE(ranked.size() == 1);
            CHECK(ranked[0].score == expected);
        }
    }
}

TEST_CASE("confirmation records a verdict exactly once") {
    auto log_path = std::filesystem::temp_directory_path() / "fuzzeval_audit.log";
    std::filesystem::remove(log_path);
    AuditLog log(log_path);

    MatchCandidate candidate;
    candidate.cve_id = "CVE-2018-10100";
    candidate.matched_keywords = {"heap-buffer-overflow", "main"};
    candidate.score = 2;

    auto confirmed = confirm_match(candidate, true, "report matches advisory stack", log);
    CHECK(confirmed.confirmed == true);
    CHECK(confirmed.note == "report matches advisory stack");
    CHECK(confirmed.score == candidate.score);
    CHECK(confirmed.matched_keywords == candidate.matched_keywords);
    CHECK_FALSE(candidate.confirmed.has_value());

    auto rejected = confirm_match(candidate, false, "overlapped CVE", log);
    CHECK(rejected.confirmed == false);
    CHECK(rejected.note == "overlapped CVE");

    CHECK_THROWS_AS(confirm_match(confirmed, false, "flip", log), AlreadyConfirmed);

    auto lines = util::split_lines(util::read_file(log_path));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].ends_with("CVE-2018-10100\tconfirmed\treport matches advisory stack"));
    CHECK(lines[1].ends_with("CVE-2018-10100\trejected\toverlapped CVE"));
    std::filesystem::remove(log_path);
}

TEST_CASE("high severity counts use the 7.0 boundary") {
    BugKey bug{StackTriple{{"f"}}, canonicalize_vuln_type("segv")};
    std::vector<ConfirmedMatch> matches = {
        {"afl", bug, entry_with("CVE-2020-0001", "segv", {}, {}, 7.0)},
        {"afl", bug, entry_with("CVE-2020-0002", "segv", {}, {}, 6.9)},
        {"afl", bug, entry_with("CVE-2020-0003", "segv", {}, {}, 9.8)},
    };
    auto result = high_severity_count(matches);
    CHECK(result.counts.at("afl") == 2);
    CHECK(result.missing_scores.empty());
}

TEST_CASE("high severity dedups by cve id per fuzzer") {
    BugKey bug1{StackTriple{{"f"}}, canonicalize_vuln_type("segv")};
    BugKey bug2{StackTriple{{"g"}}, canonicalize_vuln_type("segv")};
    auto severe = entry_with("CVE-2020-0009", "segv", {}, {}, 9.0);
    std::vector<ConfirmedMatch> matches = {
        {"afl", bug1, severe},
        {"afl", bug2, severe},
        {"honggfuzz", bug1, severe},
    };
    auto result = high_severity_count(matches);
    CHECK(result.counts.at("afl") == 1);
    CHECK(result.counts.at("honggfuzz") == 1);
}

TEST_CASE("missing scores are listed and excluded") {
    BugKey bug{StackTriple{{"f"}}, canonicalize_vuln_type("segv")};
    std::vector<ConfirmedMatch> matches = {
        {"afl", bug, entry_with("CVE-2020-0001", "segv", {}, {}, std::nullopt)},
        {"afl", bug, entry_with("CVE-2020-0002", "segv", {}, {}, 3.0)},
    };
    auto result = high_severity_count(matches);
    CHECK(result.counts.at("afl") == 0);
    REQUIRE(result.missing_scores.size() == 1);
    CHECK(result.missing_scores.begin()->second == "CVE-2020-0001");

    CHECK(high_severity_count({}).counts.empty());
}
