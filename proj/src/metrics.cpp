#include "fuzzeval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/stats.hpp"

namespace fuzzeval::metrics {

namespace {

// Earliest discovery time per bug within one repetition.
std::map<BugKey, double> first_seen(const TrialEvents& events) {
    std::map<BugKey, double> firsts;
    for (const auto& ev : events) {
        auto [it, fresh] = firsts.try_emplace(ev.key, ev.time_s);
        if (!fresh && ev.time_s < it->second) it->second = ev.time_s;
    }
    return firsts;
}

}  // namespace

ComparisonResult compare(const std::string& baseline_id,
                         const std::vector<double>& baseline_values,
                         const std::string& challenger_id,
                         const std::vector<double>& challenger_values) {
    auto mw = stats::mann_whitney_u(challenger_values, baseline_values);
    ComparisonResult r;
    r.baseline = baseline_id;
    r.challenger = challenger_id;
    r.u_statistic = mw.u;
    r.p_value = mw.p_value;
    r.a12 = stats::a12(challenger_values, baseline_values);
    r.significant = r.p_value < stats::kSignificanceLevel;
    r.large_effect = r.a12 >= stats::kLargeEffectThreshold;
    r.degenerate = mw.degenerate;
    r.small_sample = mw.small_sample;
    return r;
}

std::optional<double> BugTiming::mean_tte_s() const {
    if (success_count == 0) return std::nullopt;
    double total = 0.0;
    for (const auto& t : tte_s)
        if (t) total += *t;
    return total / success_count;
}

BugTiming bug_timings(const std::vector<TrialEvents>& reps, const BugKey& key) {
    BugTiming timing;
    timing.key = key;
    timing.tte_s.reserve(reps.size());
    for (const auto& events : reps) {
        std::optional<double> tte;
        for (const auto& ev : events) {
            if (!(ev.key == key)) continue;
            if (!tte || ev.time_s < *tte) tte = ev.time_s;
        }
        if (tte) ++timing.success_count;
        timing.tte_s.push_back(tte);
    }
    return timing;
}

std::vector<double> cumulative_curve(const std::vector<TrialEvents>& reps,
                                     const std::vector<double>& grid) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i - 1] < grid[i]))
            throw SchemaError("cumulative_curve: time grid must be strictly increasing");
    std::vector<double> curve(grid.size(), 0.0);
    if (reps.empty()) return curve;
    for (const auto& events : reps) {
        std::vector<double> firsts;
        for (const auto& [key, t] : first_seen(events)) firsts.push_back(t);
        std::sort(firsts.begin(), firsts.end());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            auto found = std::upper_bound(firsts.begin(), firsts.end(), grid[i]) - firsts.begin();
            curve[i] += static_cast<double>(found);
        }
    }
    for (auto& v : curve) v /= static_cast<double>(reps.size());
    return curve;
}

std::map<std::string, std::set<BugKey>> rare_bugs(
    const std::map<BugKey, std::set<std::string>>& incidence) {
    std::map<std::string, std::set<BugKey>> rare;
    for (const auto& [key, finders] : incidence)
        if (finders.size() == 1) rare[*finders.begin()].insert(key);
    return rare;
}

double exploitable_summary(const std::vector<std::vector<ExploitabilityRecord>>& reps) {
    if (reps.empty()) return 0.0;
    double total = 0.0;
    for (const auto& records : reps) {
        std::set<std::string> hashes;
        for (const auto& rec : records)
            if (rec.category == Exploitability::Exploitable) hashes.insert(rec.hash);
        total += static_cast<double>(hashes.size());
    }
    return total / static_cast<double>(reps.size());
}

OverheadSummary overhead_summary(const ResourceTrace& trace) {
    const auto& samples = trace.samples;
    if (samples.empty()) throw EmptyTrace("overhead_summary: resource trace has no samples");

    OverheadSummary s;
    s.disk_read_mb = trace.disk_read_mb;
    s.disk_write_mb = trace.disk_write_mb;

    double cpu_area = 0.0;
    double mem_area = 0.0;
    double cpu_sum = 0.0;
    double mem_sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        s.mem_max_mb = std::max(s.mem_max_mb, samples[i].rss_mb);
        cpu_sum += samples[i].cpu_percent;
        mem_sum += samples[i].rss_mb;
        if (i + 1 == samples.size()) continue;
        double dt = samples[i + 1].t_s - samples[i].t_s;
        if (dt < 0.0)
            throw SchemaError("overhead_summary: sample timestamps go backwards");
        cpu_area += 0.5 * (samples[i].cpu_percent + samples[i + 1].cpu_percent) * dt;
        mem_area += 0.5 * (samples[i].rss_mb + samples[i + 1].rss_mb) * dt;
    }

    double span = samples.back().t_s - samples.front().t_s;
    if (span > 0.0) {
        s.cpu_util_avg = cpu_area / span;
        s.mem_avg_mb = mem_area / span;
    } else {
        s.cpu_util_avg = cpu_sum / static_cast<double>(samples.size());
        s.mem_avg_mb = mem_sum / static_cast<double>(samples.size());
    }
    return s;
}

}  // namespace fuzzeval::metrics
