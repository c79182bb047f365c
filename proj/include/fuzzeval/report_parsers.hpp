#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fuzzeval/model.hpp"

namespace fuzzeval {

// Parsed sanitizer (ASan/LSan style) transcript. `crashed` is true iff an
// error header was found; frames are ordered crash-site-outward.
struct SanitizerReport {
    std::string vuln_raw;
    std::vector<StackFrame> frames;
    std::string summary_line;
    bool crashed = false;

    ToolOutcome outcome() const { return ToolOutcome{crashed, vuln_raw, frames}; }
};

// Parsed debugger (GDB style) transcript; `signal` is the fatal signal name.
struct DebuggerReport {
    std::string signal;
    std::vector<StackFrame> frames;
    bool crashed = false;

    ToolOutcome outcome() const { return ToolOutcome{crashed, signal, frames}; }
};

// Transcripts may interleave program output with tool output; parsers scan
// for error headers instead of anchoring at line 0. When several error blocks
// appear in one transcript the first block wins (the proximate fault).
//
// Throws MalformedReport when an error header exists but no stack frame can
// be extracted. Returns crashed=false on input without an error header.
SanitizerReport parse_sanitizer_report(std::string_view text);

// Analogous for debugger transcripts; crashed=true iff a fatal-signal line
// was observed.
DebuggerReport parse_debugger_report(std::string_view text);

// Parses the output block of the exploitability classifier plugin. Throws
// MalformedReport when no classifier block is present; a block without a
// classification line yields category UNKNOWN.
ExploitabilityRecord parse_exploitability(std::string_view text);

// Canonical one-line rendering, "#<index> <function> <file>:<line>"; used by
// round-trip checks and report exports.
std::string render_frame(const StackFrame& frame);
std::string render_frames(const std::vector<StackFrame>& frames);

}  // namespace fuzzeval
