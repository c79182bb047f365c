#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "fuzzeval/config.hpp"
#include "fuzzeval/errors.hpp"
#include "fuzzeval/util.hpp"

using namespace fuzzeval;
namespace fs = std::filesystem;

namespace {

const char* kFullConfig = R"({
  "campaign": {
    "fuzzers": ["alpha", "beta"],
    "targets": ["libpng"],
    "duration_s": 3600,
    "repetitions": 5,
    "cpu_cores_per_trial": 2,
    "mem_limit_mb": 512,
    "swap_limit_mb": 256,
    "mem_escalation_mb": 1024,
    "seed_count": 10,
    "seed_max_bytes": 4096,
    "rng_seed": 42,
    "jobs": 4,
    "container_runtime": "docker"
  },
  "adapters": [
    {
      "id": "alpha",
      "kind": "mock",
      "coverage_per_hour": 120,
      "repeat_crashes_per_hour": 3,
      "bugs": [
        {
          "name": "overflow_png",
          "stack": ["png_read_row", "png_decode", "main"],
          "sanitizer_label": "heap-buffer-overflow",
          "signal": "SIGSEGV",
          "hazard_per_hour": 0.5,
          "exploitability": "EXPLOITABLE"
        },
        {
          "name": "div_zero_scale",
          "stack": ["scale_factor", "png_decode", "main"],
          "sanitizer_label": null,
          "signal": "SIGFPE",
          "hazard_per_hour": 0.2,
          "exploitability": "PROBABLY_NOT_EXPLOITABLE"
        }
      ]
    },
    {
      "id": "beta",
      "kind": "process",
      "launch": "beta-fuzz -i {seeds} -o {out} -- {target}",
      "crash_glob": "out/default/crashes/*",
      "queue_glob": "out/default/queue/*",
      "env": {"AFL_SKIP_CPUFREQ": "1"},
      "container_image": "beta:latest"
    }
  ],
  "programs": [
    {
      "id": "libpng",
      "command": "/bin/pngread {input}",
      "seed_dir": "/corpus/png",
      "sanitizer_command": "/bin/pngread_asan {input}",
      "debugger_command": "gdb --batch /bin/pngread {input}",
      "classifier_command": "triage.sh {input}",
      "coverage_replay": "/bin/pngread_cov {input} {covfile}",
      "coverage_baseline": "/corpus/base.info",
      "coverage_timeout_s": 15
    }
  ]
})";

}  // namespace

TEST_CASE("full config parses with every field") {
    auto cfg = CampaignConfig::parse(kFullConfig, "test");
    CHECK(cfg.fuzzers == std::vector<std::string>{"alpha", "beta"});
    CHECK(cfg.targets == std::vector<std::string>{"libpng"});
    CHECK(cfg.duration_s == 3600.0);
    CHECK(cfg.repetitions == 5);
    CHECK(cfg.cpu_cores_per_trial == 2);
    CHECK(cfg.mem_limit_mb == 512);
    CHECK(cfg.swap_limit_mb == 256);
    CHECK(cfg.mem_escalation_mb == 1024);
    CHECK(cfg.seed_count == 10);
    CHECK(cfg.seed_max_bytes == 4096);
    CHECK(cfg.rng_seed == 42);
    CHECK(cfg.jobs == 4);
    CHECK(cfg.container_runtime == "docker");
    REQUIRE(cfg.adapters.size() == 2);
    REQUIRE(cfg.programs.size() == 1);
    cfg.validate();

    const auto* alpha = cfg.adapter("alpha");
    REQUIRE(alpha != nullptr);
    CHECK(alpha->kind == AdapterKind::Mock);
    CHECK(alpha->profile.coverage_per_hour == 120.0);
    CHECK(alpha->profile.repeat_crashes_per_hour == 3.0);
    REQUIRE(alpha->profile.bugs.size() == 2);
    CHECK(alpha->profile.bugs[0].name == "overflow_png");
    CHECK(alpha->profile.bugs[0].exploitability == Exploitability::Exploitable);
    CHECK(alpha->profile.bugs[1].sanitizer_label.empty());
    CHECK(alpha->profile.bugs[1].signal_name == "SIGFPE");

    const auto* beta = cfg.adapter("beta");
    REQUIRE(beta != nullptr);
    CHECK(beta->kind == AdapterKind::Process);
    CHECK(beta->launch_template == "beta-fuzz -i {seeds} -o {out} -- {target}");
    CHECK(beta->crash_glob == "out/default/crashes/*");
    CHECK(beta->env.at("AFL_SKIP_CPUFREQ") == "1");
    CHECK(beta->container_image == "beta:latest");

    const auto* png = cfg.program("libpng");
    REQUIRE(png != nullptr);
    CHECK(png->seed_dir == fs::path("/corpus/png"));
    CHECK(png->coverage.replay_template == "/bin/pngread_cov {input} {covfile}");
    CHECK(png->coverage.replay_timeout_s == 15.0);
}

TEST_CASE("omitted campaign fields take documented defaults") {
    auto cfg = CampaignConfig::parse(R"({"campaign": {"fuzzers": ["a"], "targets": ["t"]}})",
                                     "test");
    CHECK(cfg.duration_s == 86400.0);
    CHECK(cfg.repetitions == 30);
    CHECK(cfg.cpu_cores_per_trial == 1);
    CHECK(cfg.mem_limit_mb == 2048);
    CHECK(cfg.swap_limit_mb == 1024);
    CHECK(cfg.mem_escalation_mb == 8192);
    CHECK(cfg.seed_count == 100);
    CHECK(cfg.seed_max_bytes == 1048576);
    CHECK(cfg.rng_seed == 1);
    CHECK(cfg.jobs == 1);
    CHECK(cfg.container_runtime.empty());
}

TEST_CASE("unknown or mistyped keys are rejected") {
    CHECK_THROWS_AS(CampaignConfig::parse("not json", "test"), ConfigError);
    CHECK_THROWS_AS(CampaignConfig::parse("[1,2]", "test"), ConfigError);
    CHECK_THROWS_AS(CampaignConfig::parse(R"({"adapters": []})", "test"), ConfigError);
    CHECK_THROWS_AS(
        CampaignConfig::parse(R"({"campaign": {"fuzzers": ["a"], "durations": 3}})", "test"),
        ConfigError);
    CHECK_THROWS_AS(
        CampaignConfig::parse(R"({"campaign": {"fuzzers": "a"}})", "test"), ConfigError);
    CHECK_THROWS_AS(
        CampaignConfig::parse(R"({"campaign": {"duration_s": "long"}})", "test"), ConfigError);
    CHECK_THROWS_AS(
        CampaignConfig::parse(R"({"campaign": {}, "adapters": [{"id": "a", "oops": 1}]})",
                              "test"),
        ConfigError);
}

TEST_CASE("validate enforces numeric and identity invariants") {
    auto base = CampaignConfig::parse(kFullConfig, "test");

    auto broken = base;
    broken.fuzzers.clear();
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.repetitions = 0;
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.duration_s = 0.0;
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.mem_escalation_mb = broken.mem_limit_mb - 1;
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.targets = {"libpng", "libpng"};
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.adapters[1].launch_template.clear();
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.adapters[0].profile.bugs[0].stack.clear();
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.adapters[0].profile.bugs[0].hazard_per_hour = -1.0;
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.adapters[0].profile.bugs[1].signal_name.clear();
    CHECK_THROWS_AS(broken.validate(), ConfigError);

    broken = base;
    broken.adapters[0].profile.bugs[0].exploitability = Exploitability::Unknown;
    broken.validate();
}

TEST_CASE("lookup by id returns null for strangers") {
    auto cfg = CampaignConfig::parse(kFullConfig, "test");
    CHECK(cfg.adapter("alpha") != nullptr);
    CHECK(cfg.adapter("gamma") == nullptr);
    CHECK(cfg.program("libpng") != nullptr);
    CHECK(cfg.program("libxml") == nullptr);
}

TEST_CASE("serialization round-trips and digests detect change") {
    auto cfg = CampaignConfig::parse(kFullConfig, "test");
    auto text = cfg.to_json();
    auto again = CampaignConfig::parse(text, "roundtrip");
    CHECK(again.to_json() == text);
    CHECK(again.digest() == cfg.digest());

    again.rng_seed += 1;
    CHECK(again.digest() != cfg.digest());

    auto relabeled = CampaignConfig::parse(kFullConfig, "test");
    relabeled.adapters[0].profile.bugs[0].sanitizer_label = "use-after-free";
    CHECK(relabeled.digest() != cfg.digest());
}

TEST_CASE("load reads a file and reports missing ones") {
    auto dir = fs::temp_directory_path() / "fuzzeval_config_load";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto file = dir / "campaign.json";
    util::write_file(file, kFullConfig);

    auto cfg = CampaignConfig::load(file);
    CHECK(cfg.rng_seed == 42);
    CHECK_THROWS_AS(CampaignConfig::load(dir / "absent.json"), ConfigError);
}
