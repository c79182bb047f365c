#pragma once

#include <optional>
#include <vector>

namespace fuzzeval::stats {

// Comparison verdict thresholds; shared by the report tables.
constexpr double kSignificanceLevel = 0.05;   // significant <=> p < 0.05
constexpr double kLargeEffectThreshold = 0.71;  // large effect <=> a12 >= 0.71

// Exact enumeration is used up to this pooled size, the normal
// approximation above it. C(16,8) = 12870 label assignments, cheap.
constexpr std::size_t kExactEnumerationLimit = 16;

struct MannWhitneyResult {
    double u = 0.0;        // U statistic of the first sample
    double p_value = 1.0;  // two-sided
    bool exact = false;    // enumeration path taken
    // The observed statistic sits at the null center (identical samples or
    // zero rank-sum displacement); p is 1 and carries no evidence.
    bool degenerate = false;
    // Either sample has fewer than 20 repetitions; the normal approximation
    // weakens below that, callers should surface a warning.
    bool small_sample = false;
};

// Two-sided Mann-Whitney U with average ranks for ties. Exact permutation
// enumeration when |a|+|b| <= kExactEnumerationLimit; otherwise normal
// approximation with tie correction and 0.5 continuity correction.
// Throws DegenerateSample when either sample is empty.
MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

// Vargha-Delaney effect size: probability that a draw from `a` beats a draw
// from `b`, ties credited half. Computed over pooled ranks, which matches
// the pairwise-counting definition exactly (integer numerator, one
// division). Throws DegenerateSample when either sample is empty.
double a12(const std::vector<double>& a, const std::vector<double>& b);

struct SummaryStats {
    double mean = 0.0;
    double median = 0.0;
    // Relative standard deviation, 100 * sample (n-1) stddev / |mean|.
    // Absent when the mean is zero or fewer than two values exist.
    std::optional<double> rsd_percent;
};

// Throws DegenerateSample on an empty series. Median averages the middle
// two for even lengths.
SummaryStats summary(const std::vector<double>& values);

struct CorrelationResult {
    double r_s = 0.0;  // in [-1, 1]
    std::size_t n = 0;
};

// Spearman rank correlation: Pearson over average-ranked data. Throws
// SchemaError when lengths differ, DegenerateSample when n < 3 or either
// variable is constant.
CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y);

// Average ranks (1-based, ties averaged) of `values` within the pooled
// multiset. Exposed for the rank-based metrics built on top.
std::vector<double> average_ranks(const std::vector<double>& values);

}  // namespace fuzzeval::stats
