#include "fuzzeval/coverage.hpp"

#include <charconv>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/proc.hpp"
#include "fuzzeval/util.hpp"

namespace fuzzeval {

namespace {

long parse_long(std::string_view text, std::size_t line_no, const char* what) {
    long value = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
        throw SchemaError("lcov line " + std::to_string(line_no) + ": bad " + what + " '" +
                          std::string(text) + "'");
    return value;
}

std::string substitute(std::string text, std::string_view token, const std::string& value) {
    for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos))
        text.replace(pos, token.size(), value);
    return text;
}

}  // namespace

std::size_t LineCoverage::covered_count() const {
    std::size_t n = 0;
    for (const auto& [file, lines] : covered) n += lines.size();
    return n;
}

std::size_t LineCoverage::instrumented_count() const {
    std::size_t n = 0;
    for (const auto& [file, lines] : instrumented) n += lines.size();
    return n;
}

double LineCoverage::percent() const {
    auto total = instrumented_count();
    if (total == 0) return 0.0;
    return 100.0 * static_cast<double>(covered_count()) / static_cast<double>(total);
}

void merge_lcov_info(std::string_view text, LineCoverage& into) {
    std::string current_file;
    std::size_t line_no = 0;
    for (const auto& raw : util::split_lines(text)) {
        ++line_no;
        auto line = util::trim(raw);
        if (line.empty()) continue;
        if (line.rfind("SF:", 0) == 0) {
            current_file = line.substr(3);
            if (current_file.empty())
                throw SchemaError("lcov line " + std::to_string(line_no) + ": empty SF path");
            continue;
        }
        if (line == "end_of_record") {
            current_file.clear();
            continue;
        }
        if (line.rfind("DA:", 0) == 0) {
            if (current_file.empty())
                throw SchemaError("lcov line " + std::to_string(line_no) +
                                  ": DA record outside an SF section");
            auto fields = util::split(line.substr(3), ',');
            if (fields.size() < 2)
                throw SchemaError("lcov line " + std::to_string(line_no) +
                                  ": DA needs line,count");
            long lineno = parse_long(fields[0], line_no, "line number");
            long count = parse_long(fields[1], line_no, "count");
            into.instrumented[current_file].insert(static_cast<int>(lineno));
            if (count > 0) into.covered[current_file].insert(static_cast<int>(lineno));
            continue;
        }
        // FN/FNDA/LH/LF/BRDA/... records carry nothing we aggregate.
    }
}

LineCoverage compute_line_coverage(const std::vector<std::filesystem::path>& inputs,
                                   const CoverageSpec& spec,
                                   const std::filesystem::path& scratch_dir) {
    if (spec.replay_template.empty())
        throw ConfigError("coverage replay template is empty");
    LineCoverage cov;
    if (!spec.baseline_info.empty())
        merge_lcov_info(util::read_file(spec.baseline_info), cov);

    std::filesystem::create_directories(scratch_dir);
    std::size_t index = 0;
    for (const auto& input : inputs) {
        auto covfile = scratch_dir / ("replay" + std::to_string(index++) + ".info");
        std::error_code ec;
        std::filesystem::remove(covfile, ec);

        ExecSpec exec;
        exec.shell_command = substitute(
            substitute(spec.replay_template, "{input}", input.string()), "{covfile}",
            covfile.string());
        exec.timeout_s = spec.replay_timeout_s;
        auto result = run_process(exec);
        if (result.exit_code != 0 || result.term_signal != 0 || result.timed_out) {
            ++cov.replay_failures;
            continue;
        }
        try {
            merge_lcov_info(util::read_file(covfile), cov);
        } catch (const Error&) {
            ++cov.replay_failures;
        }
    }
    return cov;
}

}  // namespace fuzzeval
