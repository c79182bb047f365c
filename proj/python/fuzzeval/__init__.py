"""Fuzzer evaluation harness: campaign statistics, triage, and reporting."""

from ._core import (
    LARGE_EFFECT_THRESHOLD,
    SIGNIFICANCE_LEVEL,
    TOOL_VERSION,
    FuzzevalError,
    a12,
    analyze_campaign,
    average_ranks,
    compare,
    config_digest,
    cumulative_curve,
    exploitable_summary,
    mann_whitney_u,
    parse_debugger_report,
    parse_exploitability,
    parse_sanitizer_report,
    rare_bugs,
    render_campaign_report,
    run_campaign,
    spearman,
    stack_triple,
    summary,
    triage_samples,
)

__version__ = TOOL_VERSION.rsplit(" ", 1)[-1]

__all__ = [
    "LARGE_EFFECT_THRESHOLD",
    "SIGNIFICANCE_LEVEL",
    "TOOL_VERSION",
    "FuzzevalError",
    "a12",
    "analyze_campaign",
    "average_ranks",
    "compare",
    "config_digest",
    "cumulative_curve",
    "exploitable_summary",
    "mann_whitney_u",
    "parse_debugger_report",
    "parse_exploitability",
    "parse_sanitizer_report",
    "rare_bugs",
    "render_campaign_report",
    "run_campaign",
    "spearman",
    "stack_triple",
    "summary",
    "triage_samples",
]
