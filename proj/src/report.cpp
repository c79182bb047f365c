#include "fuzzeval/report.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/proc.hpp"
#include "fuzzeval/report_parsers.hpp"
#include "fuzzeval/util.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace fuzzeval {

namespace {

std::string trial_id(const TrialRecord& record) {
    return record.fuzzer + "/" + record.target + "/rep" + std::to_string(record.rep);
}

std::string substitute(std::string text, std::string_view token, const std::string& value) {
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos))
        text.replace(pos, token.size(), value);
    return text;
}

// Reads a cached transcript, running `command` once to create it when a
// command is configured. Returns nullopt when neither exists.
std::optional<std::string> obtain_transcript(const fs::path& cache, const std::string& command,
                                             const fs::path& input) {
    if (fs::exists(cache)) return util::read_file(cache);
    if (command.empty()) return std::nullopt;
    ExecSpec spec;
    spec.shell_command = substitute(command, "{input}", input.string());
    spec.timeout_s = 60.0;
    auto result = run_process(spec);
    auto text = result.out + result.err;
    util::write_file(cache, text);
    return text;
}

json frame_to_json(const StackFrame& frame) {
    json obj;
    obj["function"] = frame.function_name;
    if (!frame.source_file.empty()) obj["file"] = frame.source_file;
    if (frame.line) obj["line"] = *frame.line;
    obj["index"] = frame.index;
    return obj;
}

StackFrame frame_from_json(const json& obj) {
    StackFrame frame;
    frame.function_name = obj.at("function").get<std::string>();
    frame.source_file = obj.value("file", "");
    if (obj.contains("line")) frame.line = obj["line"].get<int>();
    frame.index = obj.value("index", 0);
    return frame;
}

json key_to_json(const BugKey& key) {
    json obj;
    obj["functions"] = key.triple.functions;
    obj["type"] = key.vuln_type.raw_label;
    return obj;
}

BugKey key_from_json(const json& obj) {
    BugKey key;
    for (const auto& fn : obj.at("functions")) key.triple.functions.push_back(fn.get<std::string>());
    key.vuln_type = canonicalize_vuln_type(obj.at("type").get<std::string>());
    return key;
}

double mean_of(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

std::string fixed(double value, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, value);
    return buf;
}

std::string pad(const std::string& text, std::size_t width) {
    return text.size() >= width ? text + " " : text + std::string(width - text.size(), ' ');
}

}  // namespace

CampaignData load_campaign(const std::filesystem::path& dir) {
    CampaignData data;
    data.dir = dir;
    data.config = CampaignConfig::load(dir / "campaign.json");
    for (const auto& fuzzer : data.config.fuzzers) {
        for (const auto& target : data.config.targets) {
            for (int rep = 0; rep < data.config.repetitions; ++rep) {
                auto trial_dir = dir / fuzzer / target / ("rep" + std::to_string(rep));
                auto record_path = trial_dir / "trial.json";
                if (!fs::exists(record_path))
                    throw SchemaError("missing trial record: " + record_path.string());
                auto record =
                    TrialRecord::from_json(util::read_file(record_path), record_path.string());
                auto samples = trace_from_jsonl(util::read_file(trial_dir / "trace.jsonl"),
                                                (trial_dir / "trace.jsonl").string());
                record.trace.samples = std::move(samples.samples);
                data.trials.push_back(std::move(record));
            }
        }
    }
    return data;
}

std::vector<CrashSample> analyze_crashes(const CampaignData& campaign) {
    std::vector<CrashSample> samples;
    for (const auto& record : campaign.trials) {
        const TargetSpec* target = campaign.config.program(record.target);
        auto trial_dir = campaign.dir / record.fuzzer / record.target /
                         ("rep" + std::to_string(record.rep));
        for (const auto& crash : record.crashes) {
            CrashSample sample;
            sample.trial_id = trial_id(record);
            sample.id = sample.trial_id + "/" + crash.id;
            sample.input_path = trial_dir / crash.input;
            sample.discovering_fuzzer = record.fuzzer;
            sample.discovery_time_s = crash.discovery_time_s;

            auto base = sample.input_path.string();
            auto asan = obtain_transcript(base + ".asan.txt",
                                          target ? target->sanitizer_command : "",
                                          sample.input_path);
            auto gdb = obtain_transcript(base + ".gdb.txt",
                                         target ? target->debugger_command : "",
                                         sample.input_path);
            auto classifier = obtain_transcript(base + ".exploitable.txt",
                                                target ? target->classifier_command : "",
                                                sample.input_path);
            if (asan) {
                try {
                    sample.outcomes["asan"] = parse_sanitizer_report(*asan).outcome();
                } catch (const MalformedReport&) {
                }
            }
            if (gdb) {
                try {
                    sample.outcomes["gdb"] = parse_debugger_report(*gdb).outcome();
                } catch (const MalformedReport&) {
                }
            }
            if (classifier) {
                try {
                    sample.exploitability = parse_exploitability(*classifier);
                } catch (const MalformedReport&) {
                }
            }
            samples.push_back(std::move(sample));
        }
    }
    return samples;
}

std::string samples_to_json(const std::vector<CrashSample>& samples) {
    json arr = json::array();
    for (const auto& sample : samples) {
        json obj;
        obj["id"] = sample.id;
        obj["input"] = sample.input_path.string();
        obj["fuzzer"] = sample.discovering_fuzzer;
        obj["trial"] = sample.trial_id;
        obj["time_s"] = sample.discovery_time_s;
        json outcomes;
        for (const auto& [tool, outcome] : sample.outcomes) {
            json o;
            o["crashed"] = outcome.crashed;
            o["label"] = outcome.raw_label;
            o["frames"] = json::array();
            for (const auto& frame : outcome.frames) o["frames"].push_back(frame_to_json(frame));
            outcomes[tool] = o;
        }
        obj["outcomes"] = outcomes;
        if (sample.exploitability) {
            json e;
            e["category"] = to_string(sample.exploitability->category);
            e["hash"] = sample.exploitability->hash;
            e["description"] = sample.exploitability->description;
            obj["exploitability"] = e;
        }
        arr.push_back(obj);
    }
    return arr.dump(2) + "\n";
}

std::vector<CrashSample> samples_from_json(const std::string& text, const std::string& origin) {
    json arr = json::parse(text, nullptr, false);
    if (arr.is_discarded() || !arr.is_array())
        throw SchemaError(origin + ": not a JSON sample list");
    std::vector<CrashSample> samples;
    try {
        for (const auto& obj : arr) {
            CrashSample sample;
            sample.id = obj.at("id").get<std::string>();
            sample.input_path = obj.at("input").get<std::string>();
            sample.discovering_fuzzer = obj.at("fuzzer").get<std::string>();
            sample.trial_id = obj.at("trial").get<std::string>();
            sample.discovery_time_s = obj.at("time_s").get<double>();
            for (auto it = obj.at("outcomes").begin(); it != obj.at("outcomes").end(); ++it) {
                ToolOutcome outcome;
                outcome.crashed = it.value().at("crashed").get<bool>();
                outcome.raw_label = it.value().at("label").get<std::string>();
                for (const auto& f : it.value().at("frames"))
                    outcome.frames.push_back(frame_from_json(f));
                sample.outcomes[it.key()] = std::move(outcome);
            }
            if (obj.contains("exploitability")) {
                ExploitabilityRecord record;
                auto name = obj["exploitability"].at("category").get<std::string>();
                auto category = exploitability_from_name(name);
                if (!category) throw SchemaError(origin + ": unknown category " + name);
                record.category = *category;
                record.hash = obj["exploitability"].at("hash").get<std::string>();
                record.description = obj["exploitability"].value("description", "");
                sample.exploitability = std::move(record);
            }
            samples.push_back(std::move(sample));
        }
    } catch (const json::exception& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    return samples;
}

std::string triage_to_json(const TriageResult& result, const ValidationMatrix& matrix) {
    json root;
    root["bugs"] = json::array();
    for (const auto& bug : result.bugs) {
        json obj;
        obj["key"] = key_to_json(bug.key);
        obj["printable"] = bug.key.to_string();
        obj["tool"] = bug.detecting_tool;
        obj["exemplar"] = bug.exemplar_crash;
        obj["members"] = bug.member_crashes;
        root["bugs"].push_back(obj);
    }
    root["quarantine"] = result.quarantine;
    json m;
    m["both"] = matrix.both;
    m["primary_only"] = matrix.primary_only;
    m["supplement_only"] = matrix.supplement_only;
    m["neither"] = matrix.neither;
    m["total"] = matrix.total;
    root["validation_matrix"] = m;
    return root.dump(2) + "\n";
}

std::pair<TriageResult, ValidationMatrix> triage_from_json(const std::string& text,
                                                           const std::string& origin) {
    json root = json::parse(text, nullptr, false);
    if (root.is_discarded() || !root.is_object())
        throw SchemaError(origin + ": not a JSON triage result");
    TriageResult result;
    ValidationMatrix matrix;
    try {
        for (const auto& obj : root.at("bugs")) {
            BugRecord bug;
            bug.key = key_from_json(obj.at("key"));
            bug.detecting_tool = obj.at("tool").get<std::string>();
            bug.exemplar_crash = obj.at("exemplar").get<std::string>();
            for (const auto& m : obj.at("members"))
                bug.member_crashes.insert(m.get<std::string>());
            result.bugs.push_back(std::move(bug));
        }
        for (const auto& q : root.at("quarantine"))
            result.quarantine.push_back(q.get<std::string>());
        const auto& m = root.at("validation_matrix");
        matrix.both = m.at("both").get<std::size_t>();
        matrix.primary_only = m.at("primary_only").get<std::size_t>();
        matrix.supplement_only = m.at("supplement_only").get<std::size_t>();
        matrix.neither = m.at("neither").get<std::size_t>();
        matrix.total = m.at("total").get<std::size_t>();
    } catch (const json::exception& e) {
        throw SchemaError(origin + ": " + e.what());
    }
    return {std::move(result), matrix};
}

ReportBundle build_bundle(const CampaignData& campaign, const TriageResult& triage,
                          const ValidationMatrix& matrix,
                          const std::vector<CrashSample>& samples, const std::string& baseline,
                          const std::vector<ConfirmedMatch>& confirmed_cves, int curve_points) {
    const auto& config = campaign.config;
    if (std::find(config.fuzzers.begin(), config.fuzzers.end(), baseline) ==
        config.fuzzers.end())
        throw UnknownFuzzer("baseline '" + baseline + "' is not part of the campaign");
    if (curve_points < 1) throw ConfigError("curve_points must be >= 1");

    ReportBundle bundle;
    bundle.baseline = baseline;
    bundle.matrix = matrix;
    bundle.provenance.config_digest = util::to_hex(config.digest());
    bundle.provenance.rng_seed = config.rng_seed;

    std::map<std::string, BugKey> key_of_sample;
    for (const auto& bug : triage.bugs)
        for (const auto& member : bug.member_crashes) key_of_sample[member] = bug.key;

    // Per-trial discovery events and exploitability records, keyed by the
    // trial id so the per-repetition structures below can be filled.
    std::map<std::string, metrics::TrialEvents> events_by_trial;
    std::map<std::string, std::vector<ExploitabilityRecord>> expl_by_trial;
    std::map<BugKey, std::set<std::string>> incidence;
    for (const auto& sample : samples) {
        auto it = key_of_sample.find(sample.id);
        if (it != key_of_sample.end()) {
            events_by_trial[sample.trial_id].push_back({it->second, sample.discovery_time_s});
            incidence[it->second].insert(sample.discovering_fuzzer);
        }
        if (sample.exploitability)
            expl_by_trial[sample.trial_id].push_back(*sample.exploitability);
    }

    std::vector<double> grid;
    for (int k = 1; k <= curve_points; ++k)
        grid.push_back(config.duration_s * k / curve_points);

    // Unique-bug series per (fuzzer, target), one value per repetition.
    std::map<std::pair<std::string, std::string>, std::vector<double>> series;
    for (const auto& fuzzer : config.fuzzers) {
        for (const auto& target : config.targets) {
            std::vector<metrics::TrialEvents> reps(config.repetitions);
            std::vector<std::vector<ExploitabilityRecord>> expl(config.repetitions);
            for (int rep = 0; rep < config.repetitions; ++rep) {
                auto id = fuzzer + "/" + target + "/rep" + std::to_string(rep);
                if (auto it = events_by_trial.find(id); it != events_by_trial.end())
                    reps[rep] = it->second;
                if (auto it = expl_by_trial.find(id); it != expl_by_trial.end())
                    expl[rep] = it->second;
            }
            std::vector<double> counts;
            for (const auto& rep : reps) {
                std::set<std::string> keys;
                for (const auto& event : rep) keys.insert(event.key.to_string());
                counts.push_back(static_cast<double>(keys.size()));
            }
            series[{fuzzer, target}] = counts;

            bundle.stability.push_back({fuzzer, target, stats::summary(counts)});
            bundle.curves.push_back({fuzzer, target, grid, metrics::cumulative_curve(reps, grid)});
            bundle.exploitable.push_back({fuzzer, target, metrics::exploitable_summary(expl)});
        }
    }

    for (const auto& target : config.targets) {
        const auto& base_series = series.at({baseline, target});
        for (const auto& fuzzer : config.fuzzers) {
            if (fuzzer == baseline) continue;
            const auto& challenger_series = series.at({fuzzer, target});
            ComparisonRow row;
            row.target = target;
            row.baseline_mean = mean_of(base_series);
            row.challenger_mean = mean_of(challenger_series);
            row.result = metrics::compare(baseline, base_series, fuzzer, challenger_series);
            bundle.comparisons.push_back(std::move(row));
        }
    }
    if (config.repetitions < 20)
        bundle.notes.push_back("comparisons rest on fewer than 20 repetitions; the rank test "
                               "is weak at this sample size");

    auto rare = metrics::rare_bugs(incidence);
    for (const auto& fuzzer : config.fuzzers) {
        RareRow row;
        row.fuzzer = fuzzer;
        if (auto it = rare.find(fuzzer); it != rare.end())
            for (const auto& key : it->second) row.bug_keys.push_back(key.to_string());
        bundle.rare.push_back(std::move(row));
    }

    auto severity = high_severity_count(confirmed_cves);
    if (!confirmed_cves.empty()) {
        for (const auto& fuzzer : config.fuzzers) {
            auto it = severity.counts.find(fuzzer);
            bundle.severity.push_back({fuzzer, it == severity.counts.end() ? 0 : it->second});
        }
        for (const auto& [fuzzer, cve] : severity.missing_scores)
            bundle.notes.push_back("no cvss score for " + cve + " (matched by " + fuzzer +
                                   "); excluded from severity counts");
    }

    for (const auto& fuzzer : config.fuzzers) {
        OverheadRow row;
        row.fuzzer = fuzzer;
        std::vector<double> cpu, mem, read, write;
        double mem_max = 0.0;
        for (const auto& record : campaign.trials) {
            if (record.fuzzer != fuzzer || record.trace.samples.empty()) continue;
            auto summary = metrics::overhead_summary(record.trace);
            cpu.push_back(summary.cpu_util_avg);
            mem.push_back(summary.mem_avg_mb);
            mem_max = std::max(mem_max, summary.mem_max_mb);
            read.push_back(summary.disk_read_mb);
            write.push_back(summary.disk_write_mb);
        }
        if (cpu.empty()) {
            bundle.notes.push_back("no resource samples recorded for " + fuzzer);
        } else {
            row.summary.cpu_util_avg = mean_of(cpu);
            row.summary.mem_avg_mb = mean_of(mem);
            row.summary.mem_max_mb = mem_max;
            row.summary.disk_read_mb = mean_of(read);
            row.summary.disk_write_mb = mean_of(write);
        }
        bundle.overhead.push_back(std::move(row));
    }

    for (const auto& target : config.targets) {
        const TargetSpec* spec = config.program(target);
        if (!spec || spec->coverage.replay_template.empty()) continue;
        for (const auto& fuzzer : config.fuzzers) {
            std::vector<fs::path> inputs;
            for (const auto& record : campaign.trials) {
                if (record.fuzzer != fuzzer || record.target != target) continue;
                auto trial_dir = campaign.dir / fuzzer / target /
                                 ("rep" + std::to_string(record.rep));
                for (const auto& rel : record.coverage_inputs) inputs.push_back(trial_dir / rel);
            }
            auto scratch = campaign.dir / "analysis" / ("cov_" + fuzzer + "_" + target);
            auto cov = compute_line_coverage(inputs, spec->coverage, scratch);
            CoverageRow row;
            row.fuzzer = fuzzer;
            row.target = target;
            row.covered_lines = cov.covered_count();
            row.instrumented_lines = cov.instrumented_count();
            row.percent = cov.percent();
            row.replay_failures = cov.replay_failures;
            bundle.coverage.push_back(std::move(row));
        }
    }
    if (bundle.coverage.size() >= 3) {
        std::vector<double> x, y;
        for (const auto& row : bundle.coverage) {
            x.push_back(row.percent);
            y.push_back(mean_of(series.at({row.fuzzer, row.target})));
        }
        try {
            bundle.coverage_bug_correlation = stats::spearman(x, y);
        } catch (const DegenerateSample&) {
            bundle.notes.push_back(
                "coverage/bug correlation skipped: one variable is constant");
        }
    }

    std::size_t abnormal = 0, escalated = 0;
    for (const auto& record : campaign.trials) {
        if (record.abnormal_exit) ++abnormal;
        if (record.escalated) ++escalated;
    }
    if (abnormal > 0)
        bundle.notes.push_back(std::to_string(abnormal) + " trial(s) exited abnormally");
    if (escalated > 0)
        bundle.notes.push_back(std::to_string(escalated) +
                               " trial(s) ran under the escalated memory limit");
    return bundle;
}

std::string bundle_to_json(const ReportBundle& bundle) {
    json root;
    json prov;
    prov["tool_version"] = bundle.provenance.tool_version;
    prov["config_digest"] = bundle.provenance.config_digest;
    prov["rng_seed"] = bundle.provenance.rng_seed;
    root["provenance"] = prov;
    root["baseline"] = bundle.baseline;

    root["comparisons"] = json::array();
    for (const auto& row : bundle.comparisons) {
        json obj;
        obj["target"] = row.target;
        obj["baseline"] = row.result.baseline;
        obj["challenger"] = row.result.challenger;
        obj["baseline_mean"] = row.baseline_mean;
        obj["challenger_mean"] = row.challenger_mean;
        obj["u"] = row.result.u_statistic;
        obj["p"] = row.result.p_value;
        obj["a12"] = row.result.a12;
        obj["significant"] = row.result.significant;
        obj["large_effect"] = row.result.large_effect;
        obj["degenerate"] = row.result.degenerate;
        obj["small_sample"] = row.result.small_sample;
        root["comparisons"].push_back(obj);
    }

    root["stability"] = json::array();
    for (const auto& row : bundle.stability) {
        json obj;
        obj["fuzzer"] = row.fuzzer;
        obj["target"] = row.target;
        obj["mean"] = row.stats.mean;
        obj["median"] = row.stats.median;
        if (row.stats.rsd_percent) obj["rsd_percent"] = *row.stats.rsd_percent;
        root["stability"].push_back(obj);
    }

    root["rare_bugs"] = json::array();
    std::size_t rare_total = 0;
    for (const auto& row : bundle.rare) {
        json obj;
        obj["fuzzer"] = row.fuzzer;
        obj["count"] = row.bug_keys.size();
        obj["keys"] = row.bug_keys;
        rare_total += row.bug_keys.size();
        root["rare_bugs"].push_back(obj);
    }
    root["rare_bugs_total"] = rare_total;

    root["curves"] = json::array();
    for (const auto& curve : bundle.curves) {
        json obj;
        obj["fuzzer"] = curve.fuzzer;
        obj["target"] = curve.target;
        obj["grid_s"] = curve.grid_s;
        obj["mean_unique_bugs"] = curve.mean_unique_bugs;
        root["curves"].push_back(obj);
    }

    root["exploitable"] = json::array();
    for (const auto& row : bundle.exploitable) {
        json obj;
        obj["fuzzer"] = row.fuzzer;
        obj["target"] = row.target;
        obj["mean_unique_exploitable"] = row.mean_exploitable;
        root["exploitable"].push_back(obj);
    }

    root["severity"] = json::array();
    for (const auto& row : bundle.severity) {
        json obj;
        obj["fuzzer"] = row.fuzzer;
        obj["high_severity_cves"] = row.high_severity_cves;
        root["severity"].push_back(obj);
    }

    root["overhead"] = json::array();
    for (const auto& row : bundle.overhead) {
        json obj;
        obj["fuzzer"] = row.fuzzer;
        obj["cpu_util_avg"] = row.summary.cpu_util_avg;
        obj["mem_avg_mb"] = row.summary.mem_avg_mb;
        obj["mem_max_mb"] = row.summary.mem_max_mb;
        obj["disk_read_mb"] = row.summary.disk_read_mb;
        obj["disk_write_mb"] = row.summary.disk_write_mb;
        root["overhead"].push_back(obj);
    }

    root["coverage"] = json::array();
    for (const auto& row : bundle.coverage) {
        json obj;
        obj["fuzzer"] = row.fuzzer;
        obj["target"] = row.target;
        obj["covered_lines"] = row.covered_lines;
        obj["instrumented_lines"] = row.instrumented_lines;
        obj["percent"] = row.percent;
        obj["replay_failures"] = row.replay_failures;
        root["coverage"].push_back(obj);
    }
    if (bundle.coverage_bug_correlation) {
        json obj;
        obj["r_s"] = bundle.coverage_bug_correlation->r_s;
        obj["n"] = bundle.coverage_bug_correlation->n;
        root["coverage_bug_correlation"] = obj;
    }

    json m;
    m["both"] = bundle.matrix.both;
    m["primary_only"] = bundle.matrix.primary_only;
    m["supplement_only"] = bundle.matrix.supplement_only;
    m["neither"] = bundle.matrix.neither;
    m["total"] = bundle.matrix.total;
    m["both_percent"] = bundle.matrix.percent(bundle.matrix.both);
    m["primary_only_percent"] = bundle.matrix.percent(bundle.matrix.primary_only);
    m["supplement_only_percent"] = bundle.matrix.percent(bundle.matrix.supplement_only);
    m["neither_percent"] = bundle.matrix.percent(bundle.matrix.neither);
    root["validation_matrix"] = m;

    root["notes"] = bundle.notes;
    return root.dump(2) + "\n";
}

std::string render_report(const ReportBundle& bundle) {
    std::size_t idw = 14;
    auto widen = [&idw](const std::string& id) { idw = std::max(idw, id.size() + 2); };
    for (const auto& row : bundle.comparisons) {
        widen(row.target);
        widen(row.result.challenger);
    }
    for (const auto& row : bundle.stability) {
        widen(row.fuzzer);
        widen(row.target);
    }
    for (const auto& row : bundle.rare) widen(row.fuzzer);
    for (const auto& row : bundle.overhead) widen(row.fuzzer);

    std::string out;
    out += "Campaign report (" + bundle.provenance.tool_version + ")\n";
    out += "config digest: " + bundle.provenance.config_digest + "\n";
    out += "rng seed: " + std::to_string(bundle.provenance.rng_seed) + "\n";

    out += "\n== Unique bugs vs baseline '" + bundle.baseline + "' ==\n";
    out += pad("target", idw) + pad("challenger", idw) + pad("base", 8) + pad("mean", 8) +
           pad("p", 8) + pad("a12", 7) + pad("sig", 5) + "large\n";
    for (const auto& row : bundle.comparisons) {
        auto p = row.result.p_value < 0.01 ? std::string("<0.01") : fixed(row.result.p_value, 3);
        out += pad(row.target, idw) + pad(row.result.challenger, idw) +
               pad(fixed(row.baseline_mean, 2), 8) + pad(fixed(row.challenger_mean, 2), 8) +
               pad(p, 8) + pad(fixed(row.result.a12, 3), 7) +
               pad(row.result.significant ? "yes" : "no", 5) +
               (row.result.large_effect ? "yes" : "no") + "\n";
    }

    out += "\n== Stability (unique bugs per repetition) ==\n";
    out += pad("fuzzer", idw) + pad("target", idw) + pad("mean", 8) + pad("median", 8) + "rsd%\n";
    for (const auto& row : bundle.stability) {
        out += pad(row.fuzzer, idw) + pad(row.target, idw) + pad(fixed(row.stats.mean, 2), 8) +
               pad(fixed(row.stats.median, 2), 8) +
               (row.stats.rsd_percent ? fixed(*row.stats.rsd_percent, 2) : "n/a") + "\n";
    }

    out += "\n== Rare bugs (found by exactly one fuzzer) ==\n";
    out += pad("fuzzer", idw) + "count\n";
    std::size_t rare_total = 0;
    for (const auto& row : bundle.rare) {
        out += pad(row.fuzzer, idw) + std::to_string(row.bug_keys.size()) + "\n";
        rare_total += row.bug_keys.size();
    }
    out += pad("Total", idw) + std::to_string(rare_total) + "\n";

    out += "\n== Discovery curves (mean unique bugs by time) ==\n";
    for (const auto& curve : bundle.curves) {
        out += curve.fuzzer + " on " + curve.target + ":";
        for (std::size_t i = 0; i < curve.grid_s.size(); ++i)
            out += " " + fixed(curve.grid_s[i], 0) + "s=" + fixed(curve.mean_unique_bugs[i], 2);
        out += "\n";
    }

    out += "\n== Exploitable bugs (mean unique EXPLOITABLE per repetition) ==\n";
    out += pad("fuzzer", idw) + pad("target", idw) + "mean\n";
    for (const auto& row : bundle.exploitable)
        out += pad(row.fuzzer, idw) + pad(row.target, idw) + fixed(row.mean_exploitable, 2) + "\n";

    if (!bundle.severity.empty()) {
        out += "\n== High-severity CVEs (cvss >= 7.0) ==\n";
        out += pad("fuzzer", idw) + "count\n";
        for (const auto& row : bundle.severity)
            out += pad(row.fuzzer, idw) + std::to_string(row.high_severity_cves) + "\n";
    }

    out += "\n== Resource overhead ==\n";
    out += pad("fuzzer", idw) + pad("cpu%", 8) + pad("mem avg", 9) + pad("mem max", 9) +
           pad("read MB", 9) + "write MB\n";
    metrics::OverheadSummary avg;
    for (const auto& row : bundle.overhead) {
        out += pad(row.fuzzer, idw) + pad(fixed(row.summary.cpu_util_avg, 1), 8) +
               pad(fixed(row.summary.mem_avg_mb, 1), 9) +
               pad(fixed(row.summary.mem_max_mb, 1), 9) +
               pad(fixed(row.summary.disk_read_mb, 1), 9) +
               fixed(row.summary.disk_write_mb, 1) + "\n";
        avg.cpu_util_avg += row.summary.cpu_util_avg;
        avg.mem_avg_mb += row.summary.mem_avg_mb;
        avg.mem_max_mb += row.summary.mem_max_mb;
        avg.disk_read_mb += row.summary.disk_read_mb;
        avg.disk_write_mb += row.summary.disk_write_mb;
    }
    if (!bundle.overhead.empty()) {
        auto n = static_cast<double>(bundle.overhead.size());
        out += pad("Avg", idw) + pad(fixed(avg.cpu_util_avg / n, 1), 8) +
               pad(fixed(avg.mem_avg_mb / n, 1), 9) + pad(fixed(avg.mem_max_mb / n, 1), 9) +
               pad(fixed(avg.disk_read_mb / n, 1), 9) + fixed(avg.disk_write_mb / n, 1) + "\n";
    }

    if (!bundle.coverage.empty()) {
        out += "\n== Line coverage ==\n";
        out += pad("fuzzer", idw) + pad("target", idw) + pad("covered", 9) + pad("total", 7) +
               pad("percent", 9) + "replay failures\n";
        for (const auto& row : bundle.coverage)
            out += pad(row.fuzzer, idw) + pad(row.target, idw) +
                   pad(std::to_string(row.covered_lines), 9) +
                   pad(std::to_string(row.instrumented_lines), 7) +
                   pad(fixed(row.percent, 1), 9) + std::to_string(row.replay_failures) + "\n";
        if (bundle.coverage_bug_correlation)
            out += "coverage/bug spearman r_s = " +
                   fixed(bundle.coverage_bug_correlation->r_s, 3) + " (n=" +
                   std::to_string(bundle.coverage_bug_correlation->n) + ")\n";
    }

    out += "\n== Crash validation matrix ==\n";
    const auto& m = bundle.matrix;
    out += "both: " + std::to_string(m.both) + " (" + fixed(m.percent(m.both), 1) + "%)\n";
    out += "primary only: " + std::to_string(m.primary_only) + " (" +
           fixed(m.percent(m.primary_only), 1) + "%)\n";
    out += "supplement only: " + std::to_string(m.supplement_only) + " (" +
           fixed(m.percent(m.supplement_only), 1) + "%)\n";
    out += "neither: " + std::to_string(m.neither) + " (" + fixed(m.percent(m.neither), 1) +
           "%)\n";
    out += "total crashes: " + std::to_string(m.total) + "\n";

    if (!bundle.notes.empty()) {
        out += "\n== Notes ==\n";
        for (const auto& note : bundle.notes) out += "- " + note + "\n";
    }
    return out;
}

}  // namespace fuzzeval
