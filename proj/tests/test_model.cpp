#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "fuzzeval/model.hpp"
#include "fuzzeval/util.hpp"

using namespace fuzzeval;

TEST_CASE("canonical names round trip") {
    for (auto cls : {
             VulnClass::HeapBufferOverflow, VulnClass::StackBufferOverflow,
             VulnClass::GlobalBufferOverflow, VulnClass::StackOverflow, VulnClass::Segv,
             VulnClass::ExcessiveMemoryAllocation, VulnClass::MemoryLeak, VulnClass::FreeError,
             VulnClass::FloatPointException, VulnClass::AllocDeallocMismatch,
             VulnClass::MemcpyParamOverlap, VulnClass::UseAfterFree, VulnClass::Unknown,
         }) {
        auto name = to_string(cls);
        auto back = vuln_class_from_name(name);
        REQUIRE(back.has_value());
        CHECK(*back == cls);
    }
    CHECK_FALSE(vuln_class_from_name("not-a-class").has_value());
}

TEST_CASE("canonicalize_vuln_type maps tool labels") {
    CHECK(canonicalize_vuln_type("heap-buffer-overflow").canonical ==
          VulnClass::HeapBufferOverflow);
    CHECK(canonicalize_vuln_type("SEGV").canonical == VulnClass::Segv);
    CHECK(canonicalize_vuln_type("SIGSEGV").canonical == VulnClass::Segv);
    CHECK(canonicalize_vuln_type("SIGFPE").canonical == VulnClass::FloatPointException);
    CHECK(canonicalize_vuln_type("heap-use-after-free").canonical == VulnClass::UseAfterFree);
    CHECK(canonicalize_vuln_type("detected memory leaks").canonical == VulnClass::MemoryLeak);
    CHECK(canonicalize_vuln_type("double-free").canonical == VulnClass::FreeError);
    CHECK(canonicalize_vuln_type("attempting double-free").canonical == VulnClass::FreeError);
    CHECK(canonicalize_vuln_type("stack-overflow").canonical == VulnClass::StackOverflow);
    CHECK(canonicalize_vuln_type("allocation-size-too-big").canonical ==
          VulnClass::ExcessiveMemoryAllocation);
}

TEST_CASE("canonicalize is idempotent on canonical names") {
    for (const char* name : {"heap-buffer-overflow", "segv", "memory-leak", "free-error",
                             "float-point-exception", "use-after-free"}) {
        auto once = canonicalize_vuln_type(name);
        auto twice = canonicalize_vuln_type(once.canonical_name());
        CHECK(once.canonical == twice.canonical);
    }
}

TEST_CASE("unrecognized labels become Unknown and keep the raw label") {
    auto t = canonicalize_vuln_type("mystery-fault-77");
    CHECK(t.canonical == VulnClass::Unknown);
    CHECK(t.raw_label == "mystery-fault-77");
}

TEST_CASE("unknown types compare by raw label, known types by class") {
    auto a = canonicalize_vuln_type("mystery-a");
    auto b = canonicalize_vuln_type("mystery-b");
    CHECK(a != b);

    auto c = canonicalize_vuln_type("SEGV");
    auto d = canonicalize_vuln_type("SIGSEGV");
    CHECK(c == d);
}

TEST_CASE("alias lookup is case insensitive") {
    CHECK(canonicalize_vuln_type("Heap-Buffer-Overflow").canonical ==
          VulnClass::HeapBufferOverflow);
    CHECK(canonicalize_vuln_type("segv").canonical == VulnClass::Segv);
}

TEST_CASE("alias table loads from a data file") {
    auto table = VulnAliasTable::load(std::filesystem::path(FUZZEVAL_DATA_DIR) /
                                      "vuln_aliases.tsv");
    CHECK(table.size() >= 30);
    CHECK(table.canonicalize("heap-use-after-free").canonical == VulnClass::UseAfterFree);
    CHECK(table.canonicalize("SIGBUS").canonical == VulnClass::Segv);
}

TEST_CASE("alias table rejects malformed rows") {
    auto tmp = std::filesystem::temp_directory_path() / "fuzzeval_bad_aliases.tsv";
    util::write_file(tmp, "# header\nonly-one-column\n");
    CHECK_THROWS_AS(VulnAliasTable::load(tmp), SchemaError);
    util::write_file(tmp, "raw\tno-such-canonical\n");
    CHECK_THROWS_AS(VulnAliasTable::load(tmp), SchemaError);
    std::filesystem::remove(tmp);
}

TEST_CASE("BugKey renders triple and type") {
    BugKey key{StackTriple{{"png_read", "png_decode", "main"}},
               canonicalize_vuln_type("heap-buffer-overflow")};
    CHECK(key.to_string() == "png_read>png_decode>main#heap-buffer-overflow");
}

TEST_CASE("BugKey for an unknown type renders the raw label") {
    BugKey key{StackTriple{{"f"}}, canonicalize_vuln_type("mystery-fault")};
    CHECK(key.to_string() == "f#mystery-fault");
}

TEST_CASE("BugKey ordering and equality follow triple then type") {
    BugKey a{StackTriple{{"a"}}, canonicalize_vuln_type("segv")};
    BugKey b{StackTriple{{"a"}}, canonicalize_vuln_type("segv")};
    BugKey c{StackTriple{{"a"}}, canonicalize_vuln_type("memory-leak")};
    BugKey d{StackTriple{{"b"}}, canonicalize_vuln_type("segv")};
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a < d);
}

TEST_CASE("TriageConfig validation") {
    TriageConfig ok;
    CHECK_NOTHROW(ok.validate());
    CHECK(ok.n_frames == 3);
    CHECK(ok.primary_tool == "asan");
    CHECK(ok.supplement_tools == std::vector<std::string>{"gdb"});

    TriageConfig bad_frames;
    bad_frames.n_frames = 0;
    CHECK_THROWS_AS(bad_frames.validate(), ConfigError);

    TriageConfig overlap;
    overlap.supplement_tools = {"asan"};
    CHECK_THROWS_AS(overlap.validate(), ConfigError);
}

TEST_CASE("default frame blocklist screens runtime frames") {
    auto block = default_frame_blocklist();
    auto blocked = [&](std::string_view name) {
        for (const auto& pat : block)
            if (util::glob_match(pat, name)) return true;
        return false;
    };
    CHECK(blocked("__asan_report_store1"));
    CHECK(blocked("__interceptor_strcpy"));
    CHECK(blocked("__libc_start_call_main"));
    CHECK(blocked("_start"));
    CHECK(blocked("??"));
    CHECK_FALSE(blocked("t1"));
    CHECK_FALSE(blocked("main"));
    CHECK_FALSE(blocked("png_read_row"));
}
