#include "fuzzeval/config.hpp"

#include <set>

#include <json.hpp>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/util.hpp"

using nlohmann::json;

namespace fuzzeval {

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& msg) {
    throw ConfigError(origin + ": " + msg);
}

void expect_keys(const json& obj, std::initializer_list<const char*> allowed,
                 const std::string& origin, const std::string& what) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) known = true;
        if (!known) fail(origin, "unknown key '" + it.key() + "' in " + what);
    }
}

double get_number(const json& obj, const char* key, double dflt, const std::string& origin) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_number()) fail(origin, std::string(key) + " must be a number");
    return obj[key].get<double>();
}

std::string get_string(const json& obj, const char* key, const std::string& dflt,
                       const std::string& origin) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_string()) fail(origin, std::string(key) + " must be a string");
    return obj[key].get<std::string>();
}

std::vector<std::string> get_string_list(const json& obj, const char* key,
                                         const std::string& origin) {
    std::vector<std::string> out;
    if (!obj.contains(key)) return out;
    if (!obj[key].is_array()) fail(origin, std::string(key) + " must be an array");
    for (const auto& item : obj[key]) {
        if (!item.is_string()) fail(origin, std::string(key) + " entries must be strings");
        out.push_back(item.get<std::string>());
    }
    return out;
}

MockBug parse_bug(const json& obj, const std::string& origin) {
    expect_keys(obj,
                {"name", "stack", "sanitizer_label", "signal", "hazard_per_hour",
                 "exploitability"},
                origin, "mock bug");
    MockBug bug;
    bug.name = get_string(obj, "name", "", origin);
    bug.stack = get_string_list(obj, "stack", origin);
    if (obj.contains("sanitizer_label") && obj["sanitizer_label"].is_null())
        bug.sanitizer_label.clear();
    else
        bug.sanitizer_label = get_string(obj, "sanitizer_label", bug.sanitizer_label, origin);
    bug.signal_name = get_string(obj, "signal", bug.signal_name, origin);
    bug.hazard_per_hour = get_number(obj, "hazard_per_hour", 0.0, origin);
    auto expl = get_string(obj, "exploitability", "UNKNOWN", origin);
    auto parsed = exploitability_from_name(expl);
    if (!parsed) fail(origin, "unknown exploitability '" + expl + "'");
    bug.exploitability = *parsed;
    return bug;
}

FuzzerAdapter parse_adapter(const json& obj, const std::string& origin) {
    expect_keys(obj,
                {"id", "kind", "launch", "crash_glob", "queue_glob", "env", "container_image",
                 "repeat_crashes_per_hour", "coverage_per_hour", "bugs"},
                origin, "adapter");
    FuzzerAdapter a;
    a.id = get_string(obj, "id", "", origin);
    auto kind = get_string(obj, "kind", "process", origin);
    if (kind == "mock") {
        a.kind = AdapterKind::Mock;
    } else if (kind == "process") {
        a.kind = AdapterKind::Process;
    } else {
        fail(origin, "adapter '" + a.id + "': unknown kind '" + kind + "'");
    }
    a.launch_template = get_string(obj, "launch", "", origin);
    a.crash_glob = get_string(obj, "crash_glob", a.crash_glob, origin);
    a.queue_glob = get_string(obj, "queue_glob", a.queue_glob, origin);
    a.container_image = get_string(obj, "container_image", "", origin);
    if (obj.contains("env")) {
        if (!obj["env"].is_object()) fail(origin, "env must be an object");
        for (auto it = obj["env"].begin(); it != obj["env"].end(); ++it) {
            if (!it.value().is_string()) fail(origin, "env values must be strings");
            a.env[it.key()] = it.value().get<std::string>();
        }
    }
    a.profile.repeat_crashes_per_hour = get_number(obj, "repeat_crashes_per_hour", 0.0, origin);
    a.profile.coverage_per_hour = get_number(obj, "coverage_per_hour", 60.0, origin);
    if (obj.contains("bugs")) {
        if (!obj["bugs"].is_array()) fail(origin, "bugs must be an array");
        for (const auto& b : obj["bugs"]) a.profile.bugs.push_back(parse_bug(b, origin));
    }
    return a;
}

TargetSpec parse_program(const json& obj, const std::string& origin) {
    expect_keys(obj,
                {"id", "command", "seed_dir", "sanitizer_command", "debugger_command",
                 "classifier_command", "coverage_replay", "coverage_baseline",
                 "coverage_timeout_s"},
                origin, "program");
    TargetSpec t;
    t.id = get_string(obj, "id", "", origin);
    t.command = get_string(obj, "command", "", origin);
    t.seed_dir = get_string(obj, "seed_dir", "", origin);
    t.sanitizer_command = get_string(obj, "sanitizer_command", "", origin);
    t.debugger_command = get_string(obj, "debugger_command", "", origin);
    t.classifier_command = get_string(obj, "classifier_command", "", origin);
    t.coverage.replay_template = get_string(obj, "coverage_replay", "", origin);
    t.coverage.baseline_info = get_string(obj, "coverage_baseline", "", origin);
    t.coverage.replay_timeout_s =
        get_number(obj, "coverage_timeout_s", t.coverage.replay_timeout_s, origin);
    return t;
}

json bug_to_json(const MockBug& bug) {
    json obj;
    obj["name"] = bug.name;
    obj["stack"] = bug.stack;
    if (bug.sanitizer_label.empty())
        obj["sanitizer_label"] = nullptr;
    else
        obj["sanitizer_label"] = bug.sanitizer_label;
    obj["signal"] = bug.signal_name;
    obj["hazard_per_hour"] = bug.hazard_per_hour;
    obj["exploitability"] = to_string(bug.exploitability);
    return obj;
}

}  // namespace

CampaignConfig CampaignConfig::load(const std::filesystem::path& file) {
    std::string text;
    try {
        text = util::read_file(file);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse(text, file.string());
}

CampaignConfig CampaignConfig::parse(const std::string& json_text, const std::string& origin) {
    json root = json::parse(json_text, nullptr, false);
    if (root.is_discarded()) fail(origin, "not valid JSON");
    if (!root.is_object()) fail(origin, "top level must be an object");
    expect_keys(root, {"campaign", "adapters", "programs"}, origin, "config");
    if (!root.contains("campaign") || !root["campaign"].is_object())
        fail(origin, "missing 'campaign' object");

    CampaignConfig cfg;
    const json& c = root["campaign"];
    expect_keys(c,
                {"fuzzers", "targets", "duration_s", "repetitions", "cpu_cores_per_trial",
                 "mem_limit_mb", "swap_limit_mb", "mem_escalation_mb", "seed_count",
                 "seed_max_bytes", "rng_seed", "jobs", "container_runtime"},
                origin, "campaign");
    cfg.fuzzers = get_string_list(c, "fuzzers", origin);
    cfg.targets = get_string_list(c, "targets", origin);
    cfg.duration_s = get_number(c, "duration_s", cfg.duration_s, origin);
    cfg.repetitions = static_cast<int>(get_number(c, "repetitions", cfg.repetitions, origin));
    cfg.cpu_cores_per_trial =
        static_cast<int>(get_number(c, "cpu_cores_per_trial", cfg.cpu_cores_per_trial, origin));
    cfg.mem_limit_mb =
        static_cast<std::int64_t>(get_number(c, "mem_limit_mb", double(cfg.mem_limit_mb), origin));
    cfg.swap_limit_mb = static_cast<std::int64_t>(
        get_number(c, "swap_limit_mb", double(cfg.swap_limit_mb), origin));
    cfg.mem_escalation_mb = static_cast<std::int64_t>(
        get_number(c, "mem_escalation_mb", double(cfg.mem_escalation_mb), origin));
    cfg.seed_count = static_cast<int>(get_number(c, "seed_count", cfg.seed_count, origin));
    cfg.seed_max_bytes = static_cast<std::int64_t>(
        get_number(c, "seed_max_bytes", double(cfg.seed_max_bytes), origin));
    cfg.rng_seed =
        static_cast<std::uint64_t>(get_number(c, "rng_seed", double(cfg.rng_seed), origin));
    cfg.jobs = static_cast<int>(get_number(c, "jobs", cfg.jobs, origin));
    cfg.container_runtime = get_string(c, "container_runtime", "", origin);

    if (root.contains("adapters")) {
        if (!root["adapters"].is_array()) fail(origin, "adapters must be an array");
        for (const auto& a : root["adapters"]) cfg.adapters.push_back(parse_adapter(a, origin));
    }
    if (root.contains("programs")) {
        if (!root["programs"].is_array()) fail(origin, "programs must be an array");
        for (const auto& p : root["programs"]) cfg.programs.push_back(parse_program(p, origin));
    }
    return cfg;
}

void CampaignConfig::validate() const {
    const std::string origin = "campaign config";
    if (fuzzers.empty()) fail(origin, "no fuzzers listed");
    if (targets.empty()) fail(origin, "no targets listed");
    if (repetitions < 1) fail(origin, "repetitions must be >= 1");
    if (!(duration_s > 0.0)) fail(origin, "duration_s must be > 0");
    if (cpu_cores_per_trial < 1) fail(origin, "cpu_cores_per_trial must be >= 1");
    if (mem_limit_mb < 1) fail(origin, "mem_limit_mb must be >= 1");
    if (swap_limit_mb < 0) fail(origin, "swap_limit_mb must be >= 0");
    if (mem_escalation_mb < mem_limit_mb)
        fail(origin, "mem_escalation_mb must be >= mem_limit_mb");
    if (seed_count < 1) fail(origin, "seed_count must be >= 1");
    if (seed_max_bytes < 1) fail(origin, "seed_max_bytes must be >= 1");
    if (jobs < 1) fail(origin, "jobs must be >= 1");

    auto check_unique = [&](const std::vector<std::string>& ids, const char* what) {
        std::set<std::string> seen;
        for (const auto& id : ids) {
            if (id.empty()) fail(origin, std::string("empty ") + what + " id");
            if (!seen.insert(id).second) fail(origin, std::string("duplicate ") + what + " id '" + id + "'");
        }
    };
    check_unique(fuzzers, "fuzzer");
    check_unique(targets, "target");

    std::set<std::string> adapter_ids;
    for (const auto& a : adapters) {
        if (a.id.empty()) fail(origin, "adapter without id");
        if (!adapter_ids.insert(a.id).second)
            fail(origin, "duplicate adapter id '" + a.id + "'");
        if (a.kind == AdapterKind::Process && a.launch_template.empty())
            fail(origin, "adapter '" + a.id + "': process adapter needs a launch template");
        if (a.profile.repeat_crashes_per_hour < 0.0 || a.profile.coverage_per_hour < 0.0)
            fail(origin, "adapter '" + a.id + "': rates must be >= 0");
        std::set<std::string> bug_names;
        for (const auto& bug : a.profile.bugs) {
            if (bug.name.empty()) fail(origin, "adapter '" + a.id + "': bug without name");
            if (!bug_names.insert(bug.name).second)
                fail(origin, "adapter '" + a.id + "': duplicate bug '" + bug.name + "'");
            if (bug.stack.empty())
                fail(origin, "adapter '" + a.id + "': bug '" + bug.name + "' has no stack");
            if (bug.hazard_per_hour < 0.0)
                fail(origin, "adapter '" + a.id + "': bug '" + bug.name + "' hazard < 0");
            if (bug.sanitizer_label.empty() && bug.signal_name.empty())
                fail(origin, "adapter '" + a.id + "': bug '" + bug.name +
                                 "' visible to no analysis tool");
        }
    }
    std::set<std::string> program_ids;
    for (const auto& p : programs) {
        if (p.id.empty()) fail(origin, "program without id");
        if (!program_ids.insert(p.id).second)
            fail(origin, "duplicate program id '" + p.id + "'");
    }
}

const FuzzerAdapter* CampaignConfig::adapter(const std::string& id) const {
    for (const auto& a : adapters)
        if (a.id == id) return &a;
    return nullptr;
}

const TargetSpec* CampaignConfig::program(const std::string& id) const {
    for (const auto& p : programs)
        if (p.id == id) return &p;
    return nullptr;
}

std::string CampaignConfig::to_json() const {
    json root;
    json c;
    c["fuzzers"] = fuzzers;
    c["targets"] = targets;
    c["duration_s"] = duration_s;
    c["repetitions"] = repetitions;
    c["cpu_cores_per_trial"] = cpu_cores_per_trial;
    c["mem_limit_mb"] = mem_limit_mb;
    c["swap_limit_mb"] = swap_limit_mb;
    c["mem_escalation_mb"] = mem_escalation_mb;
    c["seed_count"] = seed_count;
    c["seed_max_bytes"] = seed_max_bytes;
    c["rng_seed"] = rng_seed;
    c["jobs"] = jobs;
    c["container_runtime"] = container_runtime;
    root["campaign"] = c;

    root["adapters"] = json::array();
    for (const auto& a : adapters) {
        json obj;
        obj["id"] = a.id;
        obj["kind"] = a.kind == AdapterKind::Mock ? "mock" : "process";
        if (!a.launch_template.empty()) obj["launch"] = a.launch_template;
        obj["crash_glob"] = a.crash_glob;
        obj["queue_glob"] = a.queue_glob;
        if (!a.env.empty()) obj["env"] = a.env;
        if (!a.container_image.empty()) obj["container_image"] = a.container_image;
        if (a.kind == AdapterKind::Mock) {
            obj["repeat_crashes_per_hour"] = a.profile.repeat_crashes_per_hour;
            obj["coverage_per_hour"] = a.profile.coverage_per_hour;
            obj["bugs"] = json::array();
            for (const auto& bug : a.profile.bugs) obj["bugs"].push_back(bug_to_json(bug));
        }
        root["adapters"].push_back(obj);
    }
    root["programs"] = json::array();
    for (const auto& p : programs) {
        json obj;
        obj["id"] = p.id;
        if (!p.command.empty()) obj["command"] = p.command;
        if (!p.seed_dir.empty()) obj["seed_dir"] = p.seed_dir.string();
        if (!p.sanitizer_command.empty()) obj["sanitizer_command"] = p.sanitizer_command;
        if (!p.debugger_command.empty()) obj["debugger_command"] = p.debugger_command;
        if (!p.classifier_command.empty()) obj["classifier_command"] = p.classifier_command;
        if (!p.coverage.replay_template.empty()) {
            obj["coverage_replay"] = p.coverage.replay_template;
            obj["coverage_timeout_s"] = p.coverage.replay_timeout_s;
        }
        if (!p.coverage.baseline_info.empty())
            obj["coverage_baseline"] = p.coverage.baseline_info.string();
        root["programs"].push_back(obj);
    }
    return root.dump(2) + "\n";
}

std::uint64_t CampaignConfig::digest() const { return util::fnv1a64(to_json()); }

}  // namespace fuzzeval
