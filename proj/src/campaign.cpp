#include "fuzzeval/campaign.hpp"

#include <sys/stat.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <ctime>
#include <random>
#include <thread>

#include <json.hpp>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/mock_fuzzer.hpp"
#include "fuzzeval/proc.hpp"
#include "fuzzeval/util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace fuzzeval {

namespace {

std::uint64_t chain_seed(std::uint64_t base, const std::string& token) {
    return util::fnv1a64(token, base);
}

std::uint64_t trial_seed(const CampaignConfig& config, const std::string& fuzzer,
                         const std::string& target, int rep) {
    auto s = util::fnv1a64(util::to_hex(config.rng_seed));
    s = chain_seed(s, fuzzer);
    s = chain_seed(s, target);
    return chain_seed(s, "rep" + std::to_string(rep));
}

std::string crash_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "c%04zu", index);
    return buf;
}

std::string queue_id(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "q%04zu", index);
    return buf;
}

std::string substitute(std::string text, std::string_view token, const std::string& value) {
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos))
        text.replace(pos, token.size(), value);
    return text;
}

double file_mtime_unix(const fs::path& path) {
    struct stat st{};
    if (::stat(path.c_str(), &st) != 0) return 0.0;
    return static_cast<double>(st.st_mtim.tv_sec) +
           static_cast<double>(st.st_mtim.tv_nsec) / 1e9;
}

// Relative paths under `root` matching the glob, sorted for determinism.
std::vector<std::string> glob_under(const fs::path& root, const std::string& glob) {
    std::vector<std::string> out;
    if (!fs::exists(root)) return out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        auto rel = fs::relative(entry.path(), root).generic_string();
        if (util::glob_match(glob, rel)) out.push_back(rel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void reset_dir(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
}

json sample_to_json(const ResourceSample& s) {
    json obj;
    obj["t_s"] = s.t_s;
    obj["cpu"] = s.cpu_percent;
    obj["rss_mb"] = s.rss_mb;
    return obj;
}

TrialRecord run_mock_trial(const TrialPlan& plan, const FuzzerAdapter& adapter) {
    auto profile = adapter.profile;
    profile.rng_seed = plan.rng_seed;
    auto run = mock_fuzz(profile, plan.duration_s);

    reset_dir(plan.work_dir / "crashes");
    reset_dir(plan.work_dir / "queue");

    TrialRecord record;
    record.fuzzer = plan.fuzzer;
    record.target = plan.target;
    record.rep = plan.rep;
    // A simulated clock: no wall time passes in a mock trial.
    record.started_unix = 0;
    record.ended_unix = static_cast<std::int64_t>(plan.duration_s);
    record.duration_s = plan.duration_s;
    record.trace = run.trace;

    for (std::size_t i = 0; i < run.crashes.size(); ++i) {
        const auto& crash = run.crashes[i];
        const auto& bug = profile.bugs[crash.bug_index];
        auto id = crash_id(i);
        auto rel = "crashes/" + id;
        std::uint64_t salt = chain_seed(plan.rng_seed, "crash" + std::to_string(i));

        util::write_file(plan.work_dir / rel,
                         bug.name + " trigger " + util::to_hex(salt) + "\n");
        util::write_file(plan.work_dir / (rel + ".asan.txt"),
                         bug.sanitizer_label.empty() ? synth_clean_sanitizer_run()
                                                     : synth_sanitizer_report(bug, salt));
        util::write_file(plan.work_dir / (rel + ".gdb.txt"), synth_debugger_report(bug, salt));
        util::write_file(plan.work_dir / (rel + ".exploitable.txt"),
                         synth_exploitable_report(bug));
        record.crashes.push_back({id, rel, crash.time_s});
    }
    for (std::size_t i = 0; i < run.coverage_times_s.size(); ++i) {
        auto rel = "queue/" + queue_id(i);
        util::write_file(plan.work_dir / rel,
                         "queue entry at " + std::to_string(run.coverage_times_s[i]) + "\n");
        record.coverage_inputs.push_back(rel);
    }
    return record;
}

struct ProcessAttempt {
    ExecResult exec;
    MonitorResult monitor;
    bool oom = false;
};

ProcessAttempt attempt_process_trial(const TrialPlan& plan, const FuzzerAdapter& adapter,
                                     const TargetSpec& target,
                                     const CampaignConfig& config, std::int64_t mem_limit_mb) {
    reset_dir(plan.work_dir / "out");
    auto seeds_dir = plan.work_dir / "seeds";
    reset_dir(seeds_dir);
    for (const auto& seed : plan.seeds)
        fs::copy_file(seed, seeds_dir / seed.filename(), fs::copy_options::overwrite_existing);

    auto command = substitute(adapter.launch_template, "{target}", target.command);
    command = substitute(command, "{seeds}", seeds_dir.string());
    command = substitute(command, "{out}", (plan.work_dir / "out").string());

    ExecSpec spec;
    spec.cwd = plan.work_dir;
    spec.env = adapter.env;
    spec.stdout_path = plan.work_dir / "fuzzer.log";
    spec.stderr_path = plan.work_dir / "fuzzer.err";
    if (!config.container_runtime.empty() && !adapter.container_image.empty()) {
        spec.argv = {config.container_runtime,
                     "run",
                     "--rm",
                     "--cpus=" + std::to_string(plan.cpu_cores),
                     "--memory=" + std::to_string(mem_limit_mb) + "m",
                     "--memory-swap=" + std::to_string(mem_limit_mb + plan.swap_limit_mb) + "m",
                     "-v",
                     plan.work_dir.string() + ":" + plan.work_dir.string(),
                     "-w",
                     plan.work_dir.string(),
                     adapter.container_image,
                     "/bin/sh",
                     "-c",
                     command};
    } else {
        spec.shell_command = command;
        // The bare-process stand-in for RAM plus swap is one address-space
        // cap over both.
        spec.address_space_mb = mem_limit_mb + plan.swap_limit_mb;
    }

    ProcessAttempt attempt;
    auto child = ChildProcess::spawn(spec);
    MonitorOptions mon_opts;
    mon_opts.interval_s = std::clamp(plan.duration_s / 10.0, 0.2, 1.0);
    mon_opts.max_duration_s = plan.duration_s;
    attempt.monitor = monitor_process(child, mon_opts);
    bool we_stopped_it = child.running();
    if (we_stopped_it) child.kill_tree();
    attempt.exec = child.finish(plan.duration_s + 30.0);
    attempt.exec.timed_out = we_stopped_it;

    std::string err_text;
    try {
        err_text = util::read_file(plan.work_dir / "fuzzer.err");
    } catch (const std::exception&) {
    }
    double rss_peak = attempt.exec.max_rss_mb;
    for (const auto& s : attempt.monitor.trace.samples)
        rss_peak = std::max(rss_peak, s.rss_mb);
    bool killed_by_kernel = !we_stopped_it && attempt.exec.term_signal == SIGKILL;
    bool alloc_failed = err_text.find("out of memory") != std::string::npos ||
                        err_text.find("bad_alloc") != std::string::npos ||
                        err_text.find("Cannot allocate memory") != std::string::npos;
    attempt.oom = killed_by_kernel || alloc_failed ||
                  rss_peak >= 0.9 * static_cast<double>(mem_limit_mb);
    return attempt;
}

TrialRecord run_process_trial(const TrialPlan& plan, const FuzzerAdapter& adapter,
                              const CampaignConfig& config, EscalationBoard& escalations) {
    const TargetSpec* target = config.program(plan.target);
    if (!target) throw UnknownTarget("no program descriptor for '" + plan.target + "'");

    bool escalate = escalations.escalated(plan.fuzzer, plan.target);
    double started_wall = static_cast<double>(std::time(nullptr));
    std::int64_t started_unix = static_cast<std::int64_t>(started_wall);

    auto attempt = attempt_process_trial(plan, adapter, *target, config,
                                         escalate ? plan.mem_escalation_mb : plan.mem_limit_mb);
    if (attempt.oom && !escalate) {
        escalations.record(plan.fuzzer, plan.target);
        escalate = true;
        started_wall = static_cast<double>(std::time(nullptr));
        attempt = attempt_process_trial(plan, adapter, *target, config, plan.mem_escalation_mb);
    }
    if (attempt.exec.exit_code == 127)
        throw LaunchFailure("fuzzer '" + plan.fuzzer + "' failed to launch: " +
                            util::trim(attempt.exec.err));

    TrialRecord record;
    record.fuzzer = plan.fuzzer;
    record.target = plan.target;
    record.rep = plan.rep;
    record.started_unix = started_unix;
    record.ended_unix = static_cast<std::int64_t>(std::time(nullptr));
    record.duration_s = plan.duration_s;
    record.escalated = escalate;
    record.trace = attempt.monitor.trace;
    record.trace.disk_read_mb = attempt.exec.disk_read_mb;
    record.trace.disk_write_mb = attempt.exec.disk_write_mb;
    record.low_cpu_warning = attempt.monitor.low_cpu_warning;
    record.exit_status = attempt.exec.term_signal != 0 ? 128 + attempt.exec.term_signal
                                                       : attempt.exec.exit_code;
    record.abnormal_exit = !attempt.exec.timed_out &&
                           (attempt.exec.term_signal != 0 || attempt.exec.exit_code != 0);

    for (const auto& rel : glob_under(plan.work_dir, adapter.crash_glob)) {
        CrashArtifact crash;
        crash.input = rel;
        crash.id = fs::path(rel).filename().string();
        // Discovery attribution by file mtime, the closest thing available
        // when the fuzzer itself does not log timestamps.
        double t = file_mtime_unix(plan.work_dir / rel) - started_wall;
        crash.discovery_time_s = std::clamp(t, 0.0, plan.duration_s);
        record.crashes.push_back(crash);
    }
    std::stable_sort(record.crashes.begin(), record.crashes.end(),
                     [](const CrashArtifact& a, const CrashArtifact& b) {
                         if (a.discovery_time_s != b.discovery_time_s)
                             return a.discovery_time_s < b.discovery_time_s;
                         return a.id < b.id;
                     });
    record.coverage_inputs = glob_under(plan.work_dir, adapter.queue_glob);
    return record;
}

}  // namespace

SeedSelection select_seeds(const std::filesystem::path& corpus_dir, int seed_count,
                           std::int64_t seed_max_bytes, std::uint64_t rng_seed) {
    std::vector<fs::path> candidates;
    if (fs::exists(corpus_dir)) {
        for (const auto& entry : fs::directory_iterator(corpus_dir)) {
            if (!entry.is_regular_file()) continue;
            auto size = static_cast<std::int64_t>(entry.file_size());
            if (size < 1 || size > seed_max_bytes) continue;
            candidates.push_back(entry.path());
        }
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.empty())
        throw EmptyCorpus("no usable seeds in " + corpus_dir.string() + " (cap " +
                          std::to_string(seed_max_bytes) + " bytes)");

    SeedSelection sel;
    std::size_t want = static_cast<std::size_t>(seed_count);
    if (candidates.size() <= want) {
        sel.files = candidates;
        sel.exhausted = candidates.size() < want;
    } else {
        std::mt19937_64 rng(rng_seed);
        for (std::size_t i = 0; i < want; ++i) {
            auto j = i + util::bounded_rand(rng, candidates.size() - i);
            std::swap(candidates[i], candidates[j]);
        }
        sel.files.assign(candidates.begin(), candidates.begin() + static_cast<long>(want));
        std::sort(sel.files.begin(), sel.files.end());
    }
    for (const auto& file : sel.files)
        sel.digests.push_back(util::to_hex(util::fnv1a64_file(file)));
    return sel;
}

CampaignPlan plan_campaign(const CampaignConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    for (const auto& id : config.fuzzers)
        if (!config.adapter(id)) throw UnknownFuzzer("no adapter registered for '" + id + "'");

    CampaignPlan plan;
    std::map<std::string, std::vector<fs::path>> target_seeds;
    for (const auto& id : config.targets) {
        const TargetSpec* spec = config.program(id);
        if (!spec) throw UnknownTarget("no program descriptor for '" + id + "'");
        if (spec->seed_dir.empty()) continue;
        auto sel = select_seeds(spec->seed_dir, config.seed_count, config.seed_max_bytes,
                                chain_seed(util::fnv1a64(util::to_hex(config.rng_seed)),
                                           "seeds:" + id));
        if (sel.exhausted)
            plan.warnings.push_back("target '" + id + "': corpus exhausted, using " +
                                    std::to_string(sel.files.size()) + " of " +
                                    std::to_string(config.seed_count) + " requested seeds");
        target_seeds[id] = sel.files;
        plan.seed_digests[id] = sel.digests;
    }

    for (const auto& fuzzer : config.fuzzers) {
        for (const auto& target : config.targets) {
            for (int rep = 0; rep < config.repetitions; ++rep) {
                TrialPlan t;
                t.fuzzer = fuzzer;
                t.target = target;
                t.rep = rep;
                t.work_dir = out_dir / fuzzer / target / ("rep" + std::to_string(rep));
                t.rng_seed = trial_seed(config, fuzzer, target, rep);
                t.duration_s = config.duration_s;
                t.cpu_cores = config.cpu_cores_per_trial;
                t.mem_limit_mb = config.mem_limit_mb;
                t.swap_limit_mb = config.swap_limit_mb;
                t.mem_escalation_mb = config.mem_escalation_mb;
                t.seeds = target_seeds[target];
                plan.trials.push_back(std::move(t));
            }
        }
    }
    return plan;
}

std::string TrialRecord::to_json() const {
    json obj;
    obj["fuzzer"] = fuzzer;
    obj["target"] = target;
    obj["rep"] = rep;
    obj["started_unix"] = started_unix;
    obj["ended_unix"] = ended_unix;
    obj["duration_s"] = duration_s;
    obj["exit_status"] = exit_status;
    obj["abnormal_exit"] = abnormal_exit;
    obj["escalated"] = escalated;
    obj["low_cpu_warning"] = low_cpu_warning;
    obj["crashes"] = json::array();
    for (const auto& crash : crashes) {
        json c;
        c["id"] = crash.id;
        c["input"] = crash.input;
        c["time_s"] = crash.discovery_time_s;
        obj["crashes"].push_back(c);
    }
    obj["coverage_inputs"] = coverage_inputs;
    obj["disk_read_mb"] = trace.disk_read_mb;
    obj["disk_write_mb"] = trace.disk_write_mb;
    return obj.dump(2) + "\n";
}

TrialRecord TrialRecord::from_json(const std::string& text, const std::string& origin) {
    json obj = json::parse(text, nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
        throw SchemaError(origin + ": not a JSON trial record");
    TrialRecord record;
    try {
        record.fuzzer = obj.at("fuzzer").get<std::string>();
        record.target = obj.at("target").get<std::string>();
        record.rep = obj.at("rep").get<int>();
        record.started_unix = obj.at("started_unix").get<std::int64_t>();
        record.ended_unix = obj.at("ended_unix").get<std::int64_t>();
        record.duration_s = obj.at("duration_s").get<double>();
        record.exit_status = obj.at("exit_status").get<int>();
        record.abnormal_exit = obj.at("abnormal_exit").get<bool>();
        record.escalated = obj.at("escalated").get<bool>();
        record.low_cpu_warning = obj.value("low_cpu_warning", false);
        for (const auto& c : obj.at("crashes")) {
            record.crashes.push_back({c.at("id").get<std::string>(),
                                      c.at("input").get<std::string>(),
                                      c.at("time_s").get<double>()});
        }
        for (const auto& q : obj.at("coverage_inputs"))
            record.coverage_inputs.push_back(q.get<std::string>());
        record.trace.disk_read_mb = obj.value("disk_read_mb", 0.0);
        record.trace.disk_write_mb = obj.value("disk_write_mb", 0.0);
    } catch (const json::exception& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    return record;
}

std::string trace_to_jsonl(const ResourceTrace& trace) {
    std::string out;
    for (const auto& s : trace.samples) out += sample_to_json(s).dump() + "\n";
    return out;
}

ResourceTrace trace_from_jsonl(const std::string& text, const std::string& origin) {
    ResourceTrace trace;
    std::size_t line_no = 0;
    for (const auto& line : util::split_lines(text)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object())
            throw SchemaError(origin + " line " + std::to_string(line_no) +
                              ": not a JSON sample");
        try {
            trace.samples.push_back({obj.at("t_s").get<double>(), obj.at("cpu").get<double>(),
                                     obj.at("rss_mb").get<double>()});
        } catch (const json::exception& e) {
            throw SchemaError(origin + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

bool EscalationBoard::escalated(const std::string& fuzzer, const std::string& target) const {
    std::lock_guard lock(mutex_);
    return pairs_.contains({fuzzer, target});
}

void EscalationBoard::record(const std::string& fuzzer, const std::string& target) {
    std::lock_guard lock(mutex_);
    pairs_.insert({fuzzer, target});
}

TrialRecord run_trial(const TrialPlan& plan, const CampaignConfig& config,
                      EscalationBoard& escalations) {
    const FuzzerAdapter* adapter = config.adapter(plan.fuzzer);
    if (!adapter) throw UnknownFuzzer("no adapter registered for '" + plan.fuzzer + "'");
    fs::create_directories(plan.work_dir);

    TrialRecord record = adapter->kind == AdapterKind::Mock
                             ? run_mock_trial(plan, *adapter)
                             : run_process_trial(plan, *adapter, config, escalations);

    util::write_file(plan.work_dir / "trace.jsonl", trace_to_jsonl(record.trace));
    util::write_file(plan.work_dir / "trial.json", record.to_json());
    return record;
}

CampaignResult run_campaign(const CampaignConfig& config, const std::filesystem::path& out_dir,
                            int jobs) {
    auto plan = plan_campaign(config, out_dir);
    CampaignResult result;
    result.seed_digests = plan.seed_digests;
    result.warnings = plan.warnings;
    result.trials.resize(plan.trials.size());

    std::atomic<std::size_t> next{0};
    std::mutex warn_mutex;
    EscalationBoard escalations;

    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= plan.trials.size()) return;
            const auto& t = plan.trials[i];
            try {
                result.trials[i] = run_trial(t, config, escalations);
            } catch (const std::exception& e) {
                std::lock_guard lock(warn_mutex);
                result.warnings.push_back("trial " + t.fuzzer + "/" + t.target + "/rep" +
                                          std::to_string(t.rep) + " failed: " + e.what());
                auto& record = result.trials[i];
                record.fuzzer = t.fuzzer;
                record.target = t.target;
                record.rep = t.rep;
                record.duration_s = t.duration_s;
                record.exit_status = -1;
                record.abnormal_exit = true;
                try {
                    fs::create_directories(t.work_dir);
                    util::write_file(t.work_dir / "trace.jsonl", "");
                    util::write_file(t.work_dir / "trial.json", record.to_json());
                } catch (const std::exception&) {
                }
            }
        }
    };

    unsigned n_workers = static_cast<unsigned>(
        std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(plan.trials.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    for (const auto& record : result.trials)
        if (record.low_cpu_warning)
            result.warnings.push_back("trial " + record.fuzzer + "/" + record.target + "/rep" +
                                      std::to_string(record.rep) +
                                      ": sustained CPU below 80%, check the setup");
    return result;
}

}  // namespace fuzzeval
