#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fuzzeval/campaign.hpp"
#include "fuzzeval/config.hpp"
#include "fuzzeval/errors.hpp"
#include "fuzzeval/metrics.hpp"
#include "fuzzeval/model.hpp"
#include "fuzzeval/report.hpp"
#include "fuzzeval/report_parsers.hpp"
#include "fuzzeval/stats.hpp"
#include "fuzzeval/triage.hpp"
#include "fuzzeval/util.hpp"

namespace py = pybind11;
using namespace fuzzeval;

namespace {

// Inverse of BugKey::to_string: "f1>f2>f3#label".
BugKey bug_key_from_string(const std::string& text) {
    auto hash = text.rfind('#');
    if (hash == std::string::npos)
        throw SchemaError("bug key must look like f1>f2>f3#label, got '" + text + "'");
    BugKey key;
    key.vuln_type = canonicalize_vuln_type(text.substr(hash + 1));
    std::string functions = text.substr(0, hash);
    std::size_t start = 0;
    while (start <= functions.size()) {
        auto sep = functions.find('>', start);
        if (sep == std::string::npos) {
            key.triple.functions.push_back(functions.substr(start));
            break;
        }
        key.triple.functions.push_back(functions.substr(start, sep - start));
        start = sep + 1;
    }
    return key;
}

py::object optional_to_py(const std::optional<double>& value) {
    if (!value) return py::none();
    return py::float_(*value);
}

py::dict frame_to_py(const StackFrame& frame) {
    py::dict d;
    d["function"] = frame.function_name;
    d["source_file"] = frame.source_file;
    d["line"] = frame.line ? py::object(py::int_(*frame.line)) : py::object(py::none());
    d["index"] = frame.index;
    return d;
}

py::list frames_to_py(const std::vector<StackFrame>& frames) {
    py::list out;
    for (const auto& frame : frames) out.append(frame_to_py(frame));
    return out;
}

std::vector<StackFrame> frames_from_names(const std::vector<std::string>& names) {
    std::vector<StackFrame> frames;
    for (std::size_t i = 0; i < names.size(); ++i)
        frames.push_back({names[i], "", std::nullopt, static_cast<int>(i)});
    return frames;
}

py::dict mw_to_py(const stats::MannWhitneyResult& r) {
    py::dict d;
    d["u"] = r.u;
    d["p_value"] = r.p_value;
    d["exact"] = r.exact;
    d["degenerate"] = r.degenerate;
    d["small_sample"] = r.small_sample;
    return d;
}

py::dict compare_to_py(const metrics::ComparisonResult& r) {
    py::dict d;
    d["baseline"] = r.baseline;
    d["challenger"] = r.challenger;
    d["u_statistic"] = r.u_statistic;
    d["p_value"] = r.p_value;
    d["a12"] = r.a12;
    d["significant"] = r.significant;
    d["large_effect"] = r.large_effect;
    d["degenerate"] = r.degenerate;
    d["small_sample"] = r.small_sample;
    return d;
}

// Crash samples come in as {"id": ..., "outcomes": {tool: {"crashed": bool,
// "label": str, "frames": [function names]}}}.
std::vector<CrashSample> samples_from_py(const py::list& raw) {
    std::vector<CrashSample> samples;
    for (const auto& item : raw) {
        auto obj = item.cast<py::dict>();
        CrashSample sample;
        sample.id = obj["id"].cast<std::string>();
        if (obj.contains("fuzzer"))
            sample.discovering_fuzzer = obj["fuzzer"].cast<std::string>();
        if (obj.contains("trial")) sample.trial_id = obj["trial"].cast<std::string>();
        if (obj.contains("time_s")) sample.discovery_time_s = obj["time_s"].cast<double>();
        for (const auto& [tool, outcome_obj] : obj["outcomes"].cast<py::dict>()) {
            auto fields = outcome_obj.cast<py::dict>();
            ToolOutcome outcome;
            outcome.crashed = fields["crashed"].cast<bool>();
            if (fields.contains("label")) outcome.raw_label = fields["label"].cast<std::string>();
            if (fields.contains("frames"))
                outcome.frames =
                    frames_from_names(fields["frames"].cast<std::vector<std::string>>());
            sample.outcomes[tool.cast<std::string>()] = std::move(outcome);
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

py::dict matrix_to_py(const ValidationMatrix& matrix) {
    py::dict d;
    d["both"] = matrix.both;
    d["primary_only"] = matrix.primary_only;
    d["supplement_only"] = matrix.supplement_only;
    d["neither"] = matrix.neither;
    d["total"] = matrix.total;
    return d;
}

py::dict triage_to_py(const TriageResult& result) {
    py::list bugs;
    for (const auto& bug : result.bugs) {
        py::dict b;
        b["key"] = bug.key.to_string();
        b["tool"] = bug.detecting_tool;
        b["exemplar"] = bug.exemplar_crash;
        b["members"] = std::vector<std::string>(bug.member_crashes.begin(),
                                                bug.member_crashes.end());
        bugs.append(b);
    }
    py::dict d;
    d["bugs"] = bugs;
    d["quarantine"] = result.quarantine;
    return d;
}

TriageConfig triage_config_from_py(int n_frames,
                                   const std::optional<std::vector<std::string>>& blocklist,
                                   const std::string& primary_tool,
                                   const std::vector<std::string>& supplement_tools) {
    TriageConfig config;
    config.n_frames = n_frames;
    if (blocklist) config.frame_blocklist = *blocklist;
    config.primary_tool = primary_tool;
    config.supplement_tools = supplement_tools;
    return config;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "fuzzer evaluation harness";
    m.attr("TOOL_VERSION") = kToolVersion;
    m.attr("SIGNIFICANCE_LEVEL") = stats::kSignificanceLevel;
    m.attr("LARGE_EFFECT_THRESHOLD") = stats::kLargeEffectThreshold;

    py::register_exception<Error>(m, "FuzzevalError");

    m.def(
        "mann_whitney_u",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return mw_to_py(stats::mann_whitney_u(a, b));
        },
        py::arg("a"), py::arg("b"),
        "Two-sided Mann-Whitney U test; exact enumeration for small samples.");

    m.def(
        "a12",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return stats::a12(a, b);
        },
        py::arg("a"), py::arg("b"),
        "Vargha-Delaney effect size: chance a draw from a beats one from b.");

    m.def(
        "summary",
        [](const std::vector<double>& values) {
            auto s = stats::summary(values);
            py::dict d;
            d["mean"] = s.mean;
            d["median"] = s.median;
            d["rsd_percent"] = optional_to_py(s.rsd_percent);
            return d;
        },
        py::arg("values"), "Mean, median, and relative standard deviation.");

    m.def(
        "spearman",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            auto r = stats::spearman(x, y);
            py::dict d;
            d["r_s"] = r.r_s;
            d["n"] = r.n;
            return d;
        },
        py::arg("x"), py::arg("y"), "Spearman rank correlation.");

    m.def(
        "average_ranks",
        [](const std::vector<double>& values) { return stats::average_ranks(values); },
        py::arg("values"), "Ranks with ties sharing their average rank.");

    m.def(
        "compare",
        [](const std::string& baseline_id, const std::vector<double>& baseline_values,
           const std::string& challenger_id, const std::vector<double>& challenger_values) {
            return compare_to_py(metrics::compare(baseline_id, baseline_values, challenger_id,
                                                  challenger_values));
        },
        py::arg("baseline_id"), py::arg("baseline_values"), py::arg("challenger_id"),
        py::arg("challenger_values"),
        "Rank test plus effect size between two per-repetition value series.");

    m.def(
        "cumulative_curve",
        [](const std::vector<std::vector<std::pair<std::string, double>>>& reps,
           const std::vector<double>& grid) {
            std::vector<metrics::TrialEvents> events;
            for (const auto& rep : reps) {
                metrics::TrialEvents trial;
                for (const auto& [key, time_s] : rep)
                    trial.push_back({bug_key_from_string(key), time_s});
                events.push_back(std::move(trial));
            }
            return metrics::cumulative_curve(events, grid);
        },
        py::arg("reps"), py::arg("grid"),
        "Mean distinct bugs found by each grid time; reps are [(bug key, time), ...].");

    m.def(
        "rare_bugs",
        [](const std::map<std::string, std::vector<std::string>>& incidence) {
            std::map<BugKey, std::set<std::string>> native;
            for (const auto& [key, fuzzers] : incidence)
                native[bug_key_from_string(key)] =
                    std::set<std::string>(fuzzers.begin(), fuzzers.end());
            std::map<std::string, std::vector<std::string>> out;
            for (const auto& [fuzzer, keys] : metrics::rare_bugs(native)) {
                auto& list = out[fuzzer];
                for (const auto& key : keys) list.push_back(key.to_string());
            }
            return out;
        },
        py::arg("incidence"),
        "Bugs found by exactly one fuzzer, from {bug key: [fuzzers that found it]}.");

    m.def(
        "exploitable_summary",
        [](const std::vector<std::vector<std::pair<std::string, std::string>>>& reps) {
            std::vector<std::vector<ExploitabilityRecord>> native;
            for (const auto& rep : reps) {
                std::vector<ExploitabilityRecord> records;
                for (const auto& [name, hash] : rep) {
                    auto category = exploitability_from_name(name);
                    if (!category)
                        throw SchemaError("unknown exploitability category '" + name + "'");
                    records.push_back({*category, hash, ""});
                }
                native.push_back(std::move(records));
            }
            return metrics::exploitable_summary(native);
        },
        py::arg("reps"),
        "Mean distinct EXPLOITABLE hashes per repetition; reps are "
        "[(category, classifier hash), ...].");

    m.def(
        "parse_sanitizer_report",
        [](const std::string& text) {
            auto report = parse_sanitizer_report(text);
            py::dict d;
            d["crashed"] = report.crashed;
            d["label"] = report.vuln_raw;
            d["canonical"] = canonicalize_vuln_type(report.vuln_raw).canonical_name();
            d["summary_line"] = report.summary_line;
            d["frames"] = frames_to_py(report.frames);
            return d;
        },
        py::arg("text"), "Parse a sanitizer transcript into label and stack frames.");

    m.def(
        "parse_debugger_report",
        [](const std::string& text) {
            auto report = parse_debugger_report(text);
            py::dict d;
            d["crashed"] = report.crashed;
            d["signal"] = report.signal;
            d["frames"] = frames_to_py(report.frames);
            return d;
        },
        py::arg("text"), "Parse a debugger backtrace into signal and stack frames.");

    m.def(
        "parse_exploitability",
        [](const std::string& text) {
            auto record = parse_exploitability(text);
            py::dict d;
            d["category"] = std::string(to_string(record.category));
            d["hash"] = record.hash;
            d["description"] = record.description;
            return d;
        },
        py::arg("text"), "Parse a crash classifier transcript.");

    m.def(
        "stack_triple",
        [](const std::vector<std::string>& function_names, int n_frames,
           const std::optional<std::vector<std::string>>& blocklist) {
            auto config = triage_config_from_py(n_frames, blocklist, "asan", {"gdb"});
            return extract_stack_triple(frames_from_names(function_names), config).functions;
        },
        py::arg("function_names"), py::arg("n_frames") = 3,
        py::arg("blocklist") = py::none(),
        "Top n frames after dropping blocklisted runtime functions.");

    m.def(
        "triage_samples",
        [](const py::list& raw_samples, int n_frames,
           const std::optional<std::vector<std::string>>& blocklist,
           const std::string& primary_tool,
           const std::vector<std::string>& supplement_tools) {
            auto samples = samples_from_py(raw_samples);
            auto config = triage_config_from_py(n_frames, blocklist, primary_tool,
                                                supplement_tools);
            auto result = triage_to_py(triage_crashes(samples, config));
            result["matrix"] = matrix_to_py(build_validation_matrix(samples, config));
            return result;
        },
        py::arg("samples"), py::arg("n_frames") = 3, py::arg("blocklist") = py::none(),
        py::arg("primary_tool") = "asan",
        py::arg("supplement_tools") = std::vector<std::string>{"gdb"},
        "Deduplicate crash samples into bugs and build the validation matrix.");

    m.def(
        "config_digest",
        [](const std::filesystem::path& path) {
            return util::to_hex(CampaignConfig::load(path).digest());
        },
        py::arg("path"), "Canonical digest of a campaign config file.");

    m.def(
        "run_campaign",
        [](const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
           int jobs) {
            auto config = CampaignConfig::load(config_path);
            config.validate();
            std::filesystem::create_directories(out_dir);
            util::write_file(out_dir / "campaign.json", config.to_json());
            auto result = run_campaign(config, out_dir, jobs > 0 ? jobs : config.jobs);
            std::size_t crashes = 0;
            for (const auto& record : result.trials) crashes += record.crashes.size();
            py::dict d;
            d["trials"] = result.trials.size();
            d["crashes"] = crashes;
            d["warnings"] = result.warnings;
            return d;
        },
        py::arg("config_path"), py::arg("out_dir"), py::arg("jobs") = 0,
        "Execute every trial of a campaign into the output directory.");

    m.def(
        "analyze_campaign",
        [](const std::filesystem::path& out_dir) {
            auto campaign = load_campaign(out_dir);
            auto samples = analyze_crashes(campaign);
            TriageConfig config;
            auto triage = triage_crashes(samples, config);
            auto matrix = build_validation_matrix(samples, config);
            auto analysis = out_dir / "analysis";
            std::filesystem::create_directories(analysis);
            util::write_file(analysis / "samples.json", samples_to_json(samples));
            util::write_file(analysis / "triage.json", triage_to_json(triage, matrix));
            auto result = triage_to_py(triage);
            result["matrix"] = matrix_to_py(matrix);
            return result;
        },
        py::arg("out_dir"),
        "Attach tool transcripts to every crash, triage them, and store the artifacts.");

    m.def(
        "render_campaign_report",
        [](const std::filesystem::path& out_dir, const std::string& baseline) {
            auto campaign = load_campaign(out_dir);
            auto analysis = out_dir / "analysis";
            auto samples = samples_from_json(util::read_file(analysis / "samples.json"),
                                             (analysis / "samples.json").string());
            auto [triage, matrix] =
                triage_from_json(util::read_file(analysis / "triage.json"),
                                 (analysis / "triage.json").string());
            auto resolved = baseline.empty() ? campaign.config.fuzzers.front() : baseline;
            auto bundle = build_bundle(campaign, triage, matrix, samples, resolved);
            py::dict d;
            d["json"] = bundle_to_json(bundle);
            d["text"] = render_report(bundle);
            return d;
        },
        py::arg("out_dir"), py::arg("baseline") = "",
        "Build the metric bundle from stored triage artifacts and render it.");
}
