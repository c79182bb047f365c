#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuzzeval/campaign.hpp"
#include "fuzzeval/config.hpp"
#include "fuzzeval/cve.hpp"
#include "fuzzeval/errors.hpp"
#include "fuzzeval/proc.hpp"
#include "fuzzeval/report.hpp"
#include "fuzzeval/triage.hpp"
#include "fuzzeval/util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using namespace fuzzeval;

namespace {

// One exclusive lock per campaign directory; concurrent invocations on the
// same directory bail out instead of interleaving writes.
class CampaignLock {
  public:
    explicit CampaignLock(const fs::path& dir) {
        fs::create_directories(dir);
        path_ = dir / ".lock";
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
            if (fd_ >= 0) ::close(fd_);
            throw CampaignLocked("another invocation holds " + path_.string());
        }
    }
    ~CampaignLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    CampaignLock(const CampaignLock&) = delete;
    CampaignLock& operator=(const CampaignLock&) = delete;

  private:
    fs::path path_;
    int fd_ = -1;
};

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    int jobs = 0;             // 0: take config/env value
    long long rng_seed = -1;  // <0: take config value
};

void apply_overrides(CampaignConfig& config, const GlobalOptions& opts) {
    if (const char* env = std::getenv("FUZZEVAL_CONTAINER_RUNTIME"))
        config.container_runtime = env;
    if (const char* env = std::getenv("FUZZEVAL_JOBS")) config.jobs = std::atoi(env);
    if (opts.jobs > 0) config.jobs = opts.jobs;
    if (opts.rng_seed >= 0) config.rng_seed = static_cast<std::uint64_t>(opts.rng_seed);
}

fs::path analysis_dir(const fs::path& out) { return out / "analysis"; }

std::size_t count_crashes(const CampaignData& campaign) {
    std::size_t n = 0;
    for (const auto& record : campaign.trials) n += record.crashes.size();
    return n;
}

int cmd_run(const GlobalOptions& opts) {
    auto config = CampaignConfig::load(opts.config_path);
    apply_overrides(config, opts);
    config.validate();

    fs::path out = opts.out_dir;
    CampaignLock lock(out);
    auto stored_config = out / "campaign.json";
    auto state_path = out / "state.json";
    if (fs::exists(stored_config)) {
        auto stored = CampaignConfig::load(stored_config);
        if (stored.digest() != config.digest()) {
            std::cerr << "error: " << out.string()
                      << " holds a different campaign (digest " << util::to_hex(stored.digest())
                      << ", this config " << util::to_hex(config.digest()) << ")\n";
            return 1;
        }
        if (fs::exists(state_path)) {
            std::cout << "campaign already finished in " << out.string()
                      << "; nothing to do\n";
            return 0;
        }
    }

    util::write_file(stored_config, config.to_json());
    auto result = run_campaign(config, out, config.jobs);

    json state;
    state["finished"] = true;
    state["trials"] = result.trials.size();
    state["config_digest"] = util::to_hex(config.digest());
    state["seed_digests"] = result.seed_digests;
    state["warnings"] = result.warnings;
    util::write_file(state_path, state.dump(2) + "\n");

    std::size_t crashes = 0;
    for (const auto& record : result.trials) crashes += record.crashes.size();
    for (const auto& warning : result.warnings) std::cerr << "warning: " << warning << "\n";
    std::cout << "campaign finished: " << result.trials.size() << " trial(s), " << crashes
              << " crash sample(s) in " << out.string() << "\n";
    return 0;
}

int cmd_triage(const GlobalOptions& opts) {
    fs::path out = opts.out_dir;
    CampaignLock lock(out);
    auto campaign = load_campaign(out);
    auto samples = analyze_crashes(campaign);

    TriageConfig triage_config;
    std::vector<std::string> incomplete;
    for (const auto& sample : samples) {
        bool has_primary = sample.outcomes.count(triage_config.primary_tool) > 0;
        bool has_supplement = false;
        for (const auto& tool : triage_config.supplement_tools)
            if (sample.outcomes.count(tool)) has_supplement = true;
        if (!has_primary || !has_supplement) incomplete.push_back(sample.id);
    }
    if (!incomplete.empty()) {
        std::cerr << "error: transcripts missing for " << incomplete.size()
                  << " crash(es); validation matrix cannot be built:\n";
        for (const auto& id : incomplete) std::cerr << "  " << id << "\n";
        return 2;
    }

    auto triage = triage_crashes(samples, triage_config);
    auto matrix = build_validation_matrix(samples, triage_config);

    fs::create_directories(analysis_dir(out));
    util::write_file(analysis_dir(out) / "samples.json", samples_to_json(samples));
    util::write_file(analysis_dir(out) / "triage.json", triage_to_json(triage, matrix));
    auto table = render_bug_table(triage);
    util::write_file(analysis_dir(out) / "bug_table.txt", table);

    std::cout << table;
    std::cout << "bugs: " << triage.bugs.size() << ", quarantined crashes: "
              << triage.quarantine.size() << "\n";
    std::cout << "validation matrix: both " << matrix.both << ", primary-only "
              << matrix.primary_only << ", supplement-only " << matrix.supplement_only
              << ", neither " << matrix.neither << " (of " << matrix.total << ")\n";
    return 0;
}

std::vector<ConfirmedMatch> load_confirmed(const fs::path& file) {
    std::vector<ConfirmedMatch> confirmed;
    if (!fs::exists(file)) return confirmed;
    json arr = json::parse(util::read_file(file), nullptr, false);
    if (arr.is_discarded() || !arr.is_array())
        throw SchemaError(file.string() + ": not a JSON match list");
    for (const auto& obj : arr) {
        ConfirmedMatch match;
        match.fuzzer_id = obj.at("fuzzer").get<std::string>();
        for (const auto& fn : obj.at("functions"))
            match.bug.triple.functions.push_back(fn.get<std::string>());
        match.bug.vuln_type = canonicalize_vuln_type(obj.at("type").get<std::string>());
        match.entry.cve_id = obj.at("cve").get<std::string>();
        if (obj.contains("cvss")) match.entry.cvss_score = obj["cvss"].get<double>();
        confirmed.push_back(std::move(match));
    }
    return confirmed;
}

struct AnalysisArtifacts {
    CampaignData campaign;
    std::vector<CrashSample> samples;
    TriageResult triage;
    ValidationMatrix matrix;
};

AnalysisArtifacts load_analysis(const fs::path& out) {
    AnalysisArtifacts art;
    art.campaign = load_campaign(out);
    auto samples_path = analysis_dir(out) / "samples.json";
    auto triage_path = analysis_dir(out) / "triage.json";
    if (!fs::exists(samples_path) || !fs::exists(triage_path))
        throw NotValidated("no triage artifacts under " + analysis_dir(out).string() +
                           "; run the triage subcommand first");
    art.samples = samples_from_json(util::read_file(samples_path), samples_path.string());
    std::tie(art.triage, art.matrix) =
        triage_from_json(util::read_file(triage_path), triage_path.string());
    return art;
}

int emit_bundle(const fs::path& out, const std::string& baseline) {
    auto art = load_analysis(out);
    auto confirmed = load_confirmed(analysis_dir(out) / "cve_confirmed.json");
    auto resolved = baseline.empty() ? art.campaign.config.fuzzers.front() : baseline;
    auto bundle =
        build_bundle(art.campaign, art.triage, art.matrix, art.samples, resolved, confirmed);
    util::write_file(analysis_dir(out) / "bundle.json", bundle_to_json(bundle));
    auto text = render_report(bundle);
    util::write_file(analysis_dir(out) / "report.txt", text);
    std::cout << text;
    return 0;
}

int cmd_stats(const GlobalOptions& opts, const std::string& baseline) {
    fs::path out = opts.out_dir;
    CampaignLock lock(out);
    return emit_bundle(out, baseline);
}

int cmd_report(const GlobalOptions& opts, const std::string& baseline) {
    fs::path out = opts.out_dir;
    CampaignLock lock(out);
    auto stored = analysis_dir(out) / "bundle.json";
    std::string resolved = baseline;
    if (resolved.empty() && fs::exists(stored)) {
        json obj = json::parse(util::read_file(stored), nullptr, false);
        if (obj.is_object() && obj.contains("baseline"))
            resolved = obj["baseline"].get<std::string>();
    }
    return emit_bundle(out, resolved);
}

int cmd_match_cve(const GlobalOptions& opts, const std::string& cvedb_path,
                  const std::vector<std::string>& confirmations, const std::string& note) {
    fs::path out = opts.out_dir;
    CampaignLock lock(out);
    auto art = load_analysis(out);
    auto db = CveDatabase::load(cvedb_path);

    std::map<std::string, const CrashSample*> sample_by_id;
    for (const auto& sample : art.samples) sample_by_id[sample.id] = &sample;

    json matches = json::array();
    // candidate lists per bug, addressable by the bug's printable key
    std::map<std::string, std::vector<MatchCandidate>> candidates_by_bug;
    std::map<std::string, const BugRecord*> bug_by_key;
    for (const auto& bug : art.triage.bugs) {
        bug_by_key[bug.key.to_string()] = &bug;
        const CrashSample* exemplar = sample_by_id.count(bug.exemplar_crash)
                                          ? sample_by_id[bug.exemplar_crash]
                                          : nullptr;
        if (!exemplar || !exemplar->outcomes.count(bug.detecting_tool)) continue;
        const auto& outcome = exemplar->outcomes.at(bug.detecting_tool);
        std::set<std::string> keywords;
        if (bug.detecting_tool == "gdb") {
            DebuggerReport report{outcome.raw_label, outcome.frames, true};
            keywords = extract_keywords(report);
        } else {
            SanitizerReport report{outcome.raw_label, outcome.frames, "", true};
            keywords = extract_keywords(report);
        }

        auto target = exemplar->trial_id.substr(exemplar->trial_id.find('/') + 1);
        target = target.substr(0, target.find('/'));
        const auto* table = db.table(target);
        if (!table) continue;
        auto ranked = match_cves(keywords, *table);
        candidates_by_bug[bug.key.to_string()] = ranked;

        json obj;
        obj["bug"] = bug.key.to_string();
        obj["target"] = target;
        obj["candidates"] = json::array();
        for (const auto& cand : ranked) {
            json c;
            c["cve"] = cand.cve_id;
            c["score"] = cand.score;
            c["keywords"] = cand.matched_keywords;
            obj["candidates"].push_back(c);
        }
        matches.push_back(obj);
        std::cout << bug.key.to_string() << ": ";
        if (ranked.empty()) {
            std::cout << "no candidates\n";
        } else {
            std::cout << ranked.front().cve_id << " (score " << ranked.front().score << ")";
            if (ranked.size() > 1) std::cout << " and " << ranked.size() - 1 << " more";
            std::cout << "\n";
        }
    }
    fs::create_directories(analysis_dir(out));
    util::write_file(analysis_dir(out) / "cve_matches.json", matches.dump(2) + "\n");

    if (!confirmations.empty()) {
        AuditLog log(analysis_dir(out) / "cve_audit.log");
        auto confirmed_path = analysis_dir(out) / "cve_confirmed.json";
        json confirmed = json::array();
        if (fs::exists(confirmed_path)) {
            confirmed = json::parse(util::read_file(confirmed_path), nullptr, false);
            if (!confirmed.is_array()) confirmed = json::array();
        }
        for (const auto& spec : confirmations) {
            auto eq = spec.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--confirm needs <bug key>=<cve id>, got '" + spec + "'");
            auto bug_key = spec.substr(0, eq);
            auto cve_id = spec.substr(eq + 1);
            auto bug_it = bug_by_key.find(bug_key);
            if (bug_it == bug_by_key.end())
                throw ConfigError("unknown bug key '" + bug_key + "'");
            const MatchCandidate* found = nullptr;
            for (const auto& cand : candidates_by_bug[bug_key])
                if (cand.cve_id == cve_id) found = &cand;
            if (!found)
                throw ConfigError("'" + cve_id + "' is not a candidate for " + bug_key);
            confirm_match(*found, true, note, log);

            const CveEntry* entry = nullptr;
            auto target = sample_by_id[bug_it->second->exemplar_crash]->trial_id;
            target = target.substr(target.find('/') + 1);
            target = target.substr(0, target.find('/'));
            for (const auto& e : *db.table(target))
                if (e.cve_id == cve_id) entry = &e;

            std::set<std::string> finders;
            for (const auto& member : bug_it->second->member_crashes)
                finders.insert(member.substr(0, member.find('/')));
            for (const auto& fuzzer : finders) {
                json obj;
                obj["fuzzer"] = fuzzer;
                obj["functions"] = bug_it->second->key.triple.functions;
                obj["type"] = bug_it->second->key.vuln_type.raw_label;
                obj["cve"] = cve_id;
                if (entry && entry->cvss_score) obj["cvss"] = *entry->cvss_score;
                confirmed.push_back(obj);
            }
            std::cout << "confirmed " << bug_key << " as " << cve_id << "\n";
        }
        util::write_file(confirmed_path, confirmed.dump(2) + "\n");
    }
    return 0;
}

int cmd_validate_crash(const std::string& input,
                       const std::vector<std::string>& variant_specs) {
    CrashSample sample;
    sample.id = fs::path(input).filename().string();
    sample.input_path = input;
    if (!fs::exists(sample.input_path))
        throw ConfigError("crash input not found: " + input);

    std::map<std::string, bool> outcomes;
    for (const auto& spec : variant_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--cmd needs <variant>=<command>, got '" + spec + "'");
        auto name = spec.substr(0, eq);
        auto command = spec.substr(eq + 1);
        for (auto pos = command.find("{input}"); pos != std::string::npos;
             pos = command.find("{input}"))
            command.replace(pos, 7, input);
        ExecSpec exec;
        exec.shell_command = command;
        exec.timeout_s = 60.0;
        auto result = run_process(exec);
        bool crashed = result.term_signal != 0 || result.exit_code != 0;
        outcomes[name] = crashed;
        std::cout << name << ": " << (crashed ? "crashed" : "no crash") << "\n";
    }

    auto record = cross_validate(sample, outcomes);
    std::cout << "validated: " << (record.validated() ? "yes" : "no") << "\n";
    std::cout << "instrumentation-sensitive: " << (record.sensitive() ? "yes" : "no") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuzzer evaluation harness"};
    app.require_subcommand(1);

    GlobalOptions opts;
    std::string baseline, cvedb_path, input, note;
    std::vector<std::string> confirmations, variant_specs;

    auto* run = app.add_subcommand("run", "execute or resume a campaign");
    run->add_option("--config", opts.config_path, "campaign config file")->required();
    run->add_option("--out", opts.out_dir, "campaign output directory")->required();
    run->add_option("--jobs", opts.jobs, "concurrent trials");
    run->add_option("--rng-seed", opts.rng_seed, "override the campaign rng seed");

    auto* triage = app.add_subcommand("triage", "deduplicate crashes into bugs");
    triage->add_option("--out", opts.out_dir, "campaign output directory")->required();

    auto* stats = app.add_subcommand("stats", "compute metric tables against a baseline");
    stats->add_option("--out", opts.out_dir, "campaign output directory")->required();
    stats->add_option("--baseline", baseline, "baseline fuzzer id (default: first fuzzer)");

    auto* report = app.add_subcommand("report", "re-emit reports from stored artifacts");
    report->add_option("--out", opts.out_dir, "campaign output directory")->required();
    report->add_option("--baseline", baseline, "baseline fuzzer id");

    auto* match = app.add_subcommand("match-cve", "rank CVE candidates for triaged bugs");
    match->add_option("--out", opts.out_dir, "campaign output directory")->required();
    match->add_option("--cvedb", cvedb_path, "keyword table file")->required();
    match->add_option("--confirm", confirmations, "<bug key>=<cve id> to confirm");
    match->add_option("--note", note, "note for the confirmation audit log");

    auto* validate = app.add_subcommand("validate-crash",
                                        "re-execute one crash input across binary variants");
    validate->add_option("--input", input, "crash input file")->required();
    validate->add_option("--cmd", variant_specs, "<variant>=<command with {input}>")
        ->required()
        ->expected(-2);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(opts);
        if (triage->parsed()) return cmd_triage(opts);
        if (stats->parsed()) return cmd_stats(opts, baseline);
        if (report->parsed()) return cmd_report(opts, baseline);
        if (match->parsed()) return cmd_match_cve(opts, cvedb_path, confirmations, note);
        if (validate->parsed()) return cmd_validate_crash(input, variant_specs);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const UnknownFuzzer& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const UnknownTarget& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
