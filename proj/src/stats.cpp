#include "fuzzeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "fuzzeval/errors.hpp"

namespace fuzzeval::stats {
namespace {

// Doubled average ranks of the pooled values, aligned to input order.
// Doubling keeps ranks integral under ties, so rank sums stay exact.
std::vector<std::int64_t> doubled_ranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    std::vector<std::int64_t> dr(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && pooled[order[j]] == pooled[order[i]]) ++j;
        // the group spans 1-based ranks i+1..j; twice their mean is i+1+j
        auto d = static_cast<std::int64_t>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) dr[order[k]] = d;
        i = j;
    }
    return dr;
}

std::int64_t doubled_rank_sum(const std::vector<std::int64_t>& dr, std::size_t n1) {
    std::int64_t t2 = 0;
    for (std::size_t i = 0; i < n1; ++i) t2 += dr[i];
    return t2;
}

// P(|T - mu| >= |t_obs - mu|) over all assignments of n1 labels to the
// pooled ranks. T is the doubled rank sum, so everything stays integral.
double exact_two_sided_p(const std::vector<std::int64_t>& dr, std::size_t n1,
                         std::int64_t t2_obs, bool& degenerate) {
    const std::size_t n = dr.size();
    const auto mu2 = static_cast<std::int64_t>(n1) * static_cast<std::int64_t>(n + 1);
    const std::int64_t d2 = std::abs(t2_obs - mu2);
    if (d2 == 0) {
        degenerate = true;
        return 1.0;
    }
    std::vector<char> mask(n, 0);
    std::fill(mask.begin(), mask.begin() + n1, 1);
    std::uint64_t total = 0;
    std::uint64_t hits = 0;
    do {
        std::int64_t t2 = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask[i]) t2 += dr[i];
        ++total;
        if (std::abs(t2 - mu2) >= d2) ++hits;
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

double normal_two_sided_p(const std::vector<std::int64_t>& dr, std::size_t n1, double u1,
                          bool& degenerate) {
    const double n = static_cast<double>(dr.size());
    const double m = static_cast<double>(n1);
    const double k = n - m;
    const double mu = m * k / 2.0;

    double tie_term = 0.0;  // sum of t^3 - t over tie groups
    auto sorted = dr;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }

    const double sigma2 = m * k / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (sigma2 <= 0.0) {
        degenerate = true;  // every pooled value identical
        return 1.0;
    }
    const double dist = std::abs(u1 - mu);
    if (dist == 0.0) degenerate = true;
    const double z = std::max(0.0, (dist - 0.5) / std::sqrt(sigma2));
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& values) {
    auto dr = doubled_ranks(values);
    std::vector<double> out(dr.size());
    for (std::size_t i = 0; i < dr.size(); ++i) out[i] = static_cast<double>(dr[i]) / 2.0;
    return out;
}

MannWhitneyResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty())
        throw DegenerateSample("mann_whitney_u requires two nonempty samples");

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto dr = doubled_ranks(pooled);
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    const std::int64_t t2 = doubled_rank_sum(dr, n1);

    MannWhitneyResult res;
    // T2 = 2*R1, so U1 = R1 - n1(n1+1)/2 stays a multiple of one half.
    res.u = static_cast<double>(t2 - static_cast<std::int64_t>(n1) *
                                         static_cast<std::int64_t>(n1 + 1)) /
            2.0;
    res.small_sample = n1 < 20 || n2 < 20;
    if (pooled.size() <= kExactEnumerationLimit) {
        res.exact = true;
        res.p_value = exact_two_sided_p(dr, n1, t2, res.degenerate);
    } else {
        res.p_value = normal_two_sided_p(dr, n1, res.u, res.degenerate);
    }
    return res;
}

double a12(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw DegenerateSample("a12 requires two nonempty samples");

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const auto dr = doubled_ranks(pooled);
    const auto n1 = static_cast<std::int64_t>(a.size());
    const auto n2 = static_cast<std::int64_t>(b.size());
    // 2*R1 - n1(n1+1) equals 2*wins + ties from the pairwise definition;
    // one shared division keeps the two routes bit-identical.
    const std::int64_t numerator = doubled_rank_sum(dr, a.size()) - n1 * (n1 + 1);
    return static_cast<double>(numerator) / static_cast<double>(2 * n1 * n2);
}

SummaryStats summary(const std::vector<double>& values) {
    if (values.empty()) throw DegenerateSample("summary requires a nonempty series");

    SummaryStats s;
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;

    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2.0;

    if (values.size() >= 2 && s.mean != 0.0) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.rsd_percent = 100.0 * std::sqrt(ss / (n - 1.0)) / std::abs(s.mean);
    }
    return s;
}

CorrelationResult spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw SchemaError("spearman series lengths differ");
    if (x.size() < 3) throw DegenerateSample("spearman requires at least 3 points");

    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double m = (static_cast<double>(x.size()) + 1.0) / 2.0;

    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - m) * (ry[i] - m);
        sxx += (rx[i] - m) * (rx[i] - m);
        syy += (ry[i] - m) * (ry[i] - m);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateSample("spearman is undefined for a constant variable");

    CorrelationResult res;
    res.r_s = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    res.n = x.size();
    return res;
}

}  // namespace fuzzeval::stats
