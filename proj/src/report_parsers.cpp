#include "fuzzeval/report_parsers.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/util.hpp"

namespace fuzzeval {
namespace {

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool is_hex_address(std::string_view tok) {
    if (tok.size() <= 2 || !tok.starts_with("0x")) return false;
    return std::all_of(tok.begin() + 2, tok.end(), [](unsigned char c) { return std::isxdigit(c); });
}

bool all_digits(std::string_view s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

// "path.c:12" or "path.c:12:34"
bool looks_like_source_loc(std::string_view tok) {
    auto colon = tok.rfind(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    if (!all_digits(tok.substr(colon + 1))) return false;
    auto prev = tok.rfind(':', colon - 1);
    if (prev != std::string_view::npos && all_digits(tok.substr(prev + 1, colon - prev - 1)))
        colon = prev;
    return colon > 0;
}

// "(/lib/libc.so.6+0x29d8f)"
bool looks_like_module_loc(std::string_view tok) {
    return tok.size() > 4 && tok.front() == '(' && tok.back() == ')' &&
           tok.find("+0x") != std::string_view::npos;
}

void assign_source_loc(StackFrame& f, std::string_view loc) {
    // Trailing column number, if present, is dropped.
    auto colon = loc.rfind(':');
    if (colon == std::string_view::npos) return;
    auto prev = loc.rfind(':', colon - 1);
    if (prev != std::string_view::npos && all_digits(loc.substr(prev + 1, colon - prev - 1)))
        colon = prev;
    f.source_file = std::string(loc.substr(0, colon));
    auto digits = loc.substr(colon + 1);
    auto next = digits.find(':');
    if (next != std::string_view::npos) digits = digits.substr(0, next);
    int value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec == std::errc()) f.line = value;
}

std::optional<int> parse_frame_index(std::string_view& s) {
    if (s.empty() || s.front() != '#') return std::nullopt;
    s.remove_prefix(1);
    int idx = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), idx);
    if (ec != std::errc() || ptr == s.data()) return std::nullopt;
    s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
    if (s.empty() || s.front() != ' ') return std::nullopt;
    s = trim_view(s);
    return idx;
}

// "#1 0x55da876cc164 in main /tmp/x.c:9"
// "#3 0x55da876cc164 in _start (/tmp/x+0x1164)"
// "#5 0x7f8a12c29d8f  (/lib/libc.so.6+0x29d8f)"      <- symbol unresolved
std::optional<StackFrame> parse_sanitizer_frame(std::string_view line) {
    std::string_view s = trim_view(line);
    auto idx = parse_frame_index(s);
    if (!idx) return std::nullopt;

    auto space = s.find(' ');
    if (space == std::string_view::npos || !is_hex_address(s.substr(0, space)))
        return std::nullopt;
    s = trim_view(s.substr(space));

    StackFrame f;
    f.index = *idx;
    if (s.starts_with("in ")) {
        s = trim_view(s.substr(3));
        auto last_space = s.rfind(' ');
        if (last_space != std::string_view::npos) {
            auto tail = s.substr(last_space + 1);
            if (looks_like_source_loc(tail)) {
                f.function_name = std::string(trim_view(s.substr(0, last_space)));
                assign_source_loc(f, tail);
                return f;
            }
            if (looks_like_module_loc(tail)) {
                f.function_name = std::string(trim_view(s.substr(0, last_space)));
                return f;
            }
        }
        f.function_name = std::string(s);
        return f;
    }
    if (looks_like_module_loc(s)) {
        f.function_name = "??";
        return f;
    }
    return std::nullopt;
}

// "#0  0x000055555555517b in divide (a=100, b=0) at div_zero.c:5"
// "#2  0x00007f47ecc29d90 in __libc_start_call_main (...) from /lib/libc.so.6"
// "#0  divide (a=100, b=0) at div_zero.c:5"
std::optional<StackFrame> parse_debugger_frame(std::string_view line) {
    std::string_view s = trim_view(line);
    auto idx = parse_frame_index(s);
    if (!idx) return std::nullopt;

    StackFrame f;
    f.index = *idx;

    auto space = s.find(' ');
    if (space != std::string_view::npos && is_hex_address(s.substr(0, space))) {
        std::string_view rest = trim_view(s.substr(space));
        if (!rest.starts_with("in ")) return std::nullopt;
        s = trim_view(rest.substr(3));
    }

    auto at = s.rfind(" at ");
    if (at != std::string_view::npos && looks_like_source_loc(trim_view(s.substr(at + 4)))) {
        assign_source_loc(f, trim_view(s.substr(at + 4)));
        s = trim_view(s.substr(0, at));
    } else if (auto from = s.rfind(" from "); from != std::string_view::npos) {
        s = trim_view(s.substr(0, from));
    }

    // The argument list is the trailing balanced parenthesis group; scanning
    // backwards keeps parentheses inside demangled names out of it.
    if (!s.empty() && s.back() == ')') {
        int depth = 0;
        for (std::size_t i = s.size(); i-- > 0;) {
            if (s[i] == ')') ++depth;
            if (s[i] == '(' && --depth == 0) {
                s = trim_view(s.substr(0, i));
                break;
            }
        }
    }
    if (s.empty()) return std::nullopt;
    f.function_name = std::string(s);
    return f;
}

// "==958==ERROR: AddressSanitizer: heap-buffer-overflow on address 0x..."
std::optional<std::string> parse_error_header(std::string_view line) {
    std::string_view s = trim_view(line);
    if (!s.starts_with("==")) return std::nullopt;
    auto marker = s.find("==ERROR: ");
    if (marker == std::string_view::npos) return std::nullopt;
    if (!all_digits(s.substr(2, marker - 2))) return std::nullopt;
    s = s.substr(marker + 9);
    auto colon = s.find(": ");
    if (colon == std::string_view::npos) return std::nullopt;
    if (!s.substr(0, colon).ends_with("Sanitizer")) return std::nullopt;
    return std::string(trim_view(s.substr(colon + 2)));
}

// Keeps the error type, drops the address/pc details that follow it.
std::string cut_error_label(std::string_view rem) {
    std::size_t cut = rem.size();
    for (std::string_view stop :
         {" on address ", " on unknown address ", " at pc ", " on 0x", " in thread "}) {
        auto pos = rem.find(stop);
        if (pos != std::string_view::npos) cut = std::min(cut, pos);
    }
    auto label = trim_view(rem.substr(0, cut));
    while (!label.empty() && (label.back() == ':' || label.back() == '.')) label.remove_suffix(1);
    return std::string(trim_view(label));
}

// First word of "SUMMARY: AddressSanitizer: <type> <loc> in <func>"; leak
// summaries start with a byte count instead of a type and are skipped.
std::optional<std::string> summary_label(std::string_view line) {
    std::string_view s = trim_view(line);
    if (!s.starts_with("SUMMARY: ")) return std::nullopt;
    s = s.substr(9);
    auto colon = s.find(": ");
    if (colon == std::string_view::npos) return std::nullopt;
    s = trim_view(s.substr(colon + 2));
    auto space = s.find(' ');
    auto word = space == std::string_view::npos ? s : s.substr(0, space);
    if (word.empty() || !std::isalpha(static_cast<unsigned char>(word.front())))
        return std::nullopt;
    return std::string(word);
}

std::optional<std::string> fatal_signal(std::string_view line) {
    std::string_view s = trim_view(line);
    for (std::string_view prefix :
         {"Program received signal ", "Program terminated with signal "}) {
        if (!s.starts_with(prefix)) continue;
        s = s.substr(prefix.size());
        auto end = s.find_first_of(",. ");
        if (end != std::string_view::npos) s = s.substr(0, end);
        if (s.empty()) return std::nullopt;
        return std::string(s);
    }
    return std::nullopt;
}

template <typename FrameParser>
std::vector<StackFrame> collect_frames(const std::vector<std::string>& lines, std::size_t begin,
                                       std::size_t end, FrameParser&& parse) {
    std::vector<StackFrame> frames;
    for (std::size_t i = begin; i < end; ++i) {
        auto f = parse(lines[i]);
        if (!f) {
            if (!frames.empty()) break;
            continue;
        }
        if (frames.empty()) {
            if (f->index != 0) continue;
        } else if (f->index != frames.back().index + 1) {
            break;
        }
        frames.push_back(std::move(*f));
    }
    return frames;
}

}  // namespace

SanitizerReport parse_sanitizer_report(std::string_view text) {
    SanitizerReport rep;
    auto lines = util::split_lines(text);

    std::size_t header = lines.size();
    std::string header_rem;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (auto rem = parse_error_header(lines[i])) {
            header = i;
            header_rem = std::move(*rem);
            break;
        }
    }
    if (header == lines.size()) return rep;

    rep.crashed = true;
    rep.vuln_raw = cut_error_label(header_rem);

    std::size_t block_end = lines.size();
    for (std::size_t i = header + 1; i < lines.size(); ++i) {
        if (parse_error_header(lines[i])) {
            block_end = i;
            break;
        }
        if (rep.summary_line.empty()) {
            if (trim_view(lines[i]).starts_with("SUMMARY: "))
                rep.summary_line = std::string(trim_view(lines[i]));
        }
    }

    rep.frames = collect_frames(lines, header + 1, block_end,
                                [](const std::string& l) { return parse_sanitizer_frame(l); });

    if (!rep.summary_line.empty()) {
        if (auto label = summary_label(rep.summary_line)) rep.vuln_raw = std::move(*label);
    }

    if (rep.frames.empty())
        throw MalformedReport("sanitizer error report carries no stack frames");
    return rep;
}

DebuggerReport parse_debugger_report(std::string_view text) {
    DebuggerReport rep;
    auto lines = util::split_lines(text);

    std::size_t signal_at = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (auto sig = fatal_signal(lines[i])) {
            signal_at = i;
            rep.signal = std::move(*sig);
            break;
        }
    }
    if (signal_at == lines.size()) return rep;

    rep.crashed = true;
    rep.frames = collect_frames(lines, signal_at + 1, lines.size(),
                                [](const std::string& l) { return parse_debugger_frame(l); });
    if (rep.frames.empty())
        throw MalformedReport("debugger report has a fatal signal but no backtrace");
    return rep;
}

ExploitabilityRecord parse_exploitability(std::string_view text) {
    ExploitabilityRecord rec;
    bool in_block = false;
    for (const auto& raw : util::split_lines(text)) {
        std::string_view line = trim_view(raw);
        if (line.starts_with("Description: ")) {
            if (in_block) break;  // a second block starts here
            in_block = true;
            rec.description = std::string(trim_view(line.substr(13)));
        } else if (line.starts_with("Hash: ")) {
            in_block = true;
            rec.hash = std::string(trim_view(line.substr(6)));
        } else if (line.starts_with("Exploitability Classification: ")) {
            in_block = true;
            auto name = trim_view(line.substr(31));
            if (auto cat = exploitability_from_name(name)) rec.category = *cat;
            break;
        }
    }
    if (!in_block) throw MalformedReport("no exploitability classifier block found");
    return rec;
}

std::string render_frame(const StackFrame& frame) {
    std::ostringstream out;
    out << '#' << frame.index << ' ' << frame.function_name;
    if (!frame.source_file.empty()) {
        out << ' ' << frame.source_file;
        if (frame.line) out << ':' << *frame.line;
    }
    return out.str();
}

std::string render_frames(const std::vector<StackFrame>& frames) {
    std::string out;
    for (const auto& f : frames) {
        if (!out.empty()) out += '\n';
        out += render_frame(f);
    }
    return out;
}

}  // namespace fuzzeval
