#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fuzzeval/errors.hpp"
#include "fuzzeval/metrics.hpp"
#include "fuzzeval/stats.hpp"
#include "fuzzeval/util.hpp"

using namespace fuzzeval;
using namespace fuzzeval::metrics;

namespace {

BugKey key_of(std::vector<std::string> fns, const std::string& type) {
    BugKey k;
    k.triple.functions = std::move(fns);
    k.vuln_type = canonicalize_vuln_type(type);
    return k;
}

BugKey numbered_key(int i) {
    return key_of({"f" + std::to_string(i), "main"}, "heap-buffer-overflow");
}

// Independent recount of the cumulative curve: scan every event, no
// sorting, no shared helpers with the implementation.
std::vector<double> curve_oracle(const std::vector<TrialEvents>& reps,
                                 const std::vector<double>& grid) {
    std::vector<double> out;
    for (double t : grid) {
        double sum = 0.0;
        for (const auto& events : reps) {
            std::set<std::string> seen;
            for (const auto& ev : events)
                if (ev.time_s <= t) seen.insert(ev.key.to_string());
            sum += static_cast<double>(seen.size());
        }
        out.push_back(reps.empty() ? 0.0 : sum / static_cast<double>(reps.size()));
    }
    return out;
}

// Numeric time-weighted average: linear interpolation sampled on a fine
// step, deliberately not the closed-form trapezoid used in the module.
double weighted_avg_oracle(const std::vector<ResourceSample>& samples,
                           double ResourceSample::*field) {
    double t0 = samples.front().t_s, t1 = samples.back().t_s;
    if (!(t1 > t0)) {
        double s = 0.0;
        for (const auto& x : samples) s += x.*field;
        return s / static_cast<double>(samples.size());
    }
    const int steps = 200000;
    double acc = 0.0;
    for (int i = 0; i < steps; ++i) {
        double t = t0 + (t1 - t0) * (i + 0.5) / steps;
        auto hi = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const ResourceSample& s) { return v < s.t_s; });
        auto lo = hi - 1;
        double v;
        if (hi == samples.end()) {
            v = (*lo).*field;
        } else {
            double w = (t - lo->t_s) / (hi->t_s - lo->t_s);
            v = (*lo).*field * (1.0 - w) + (*hi).*field * w;
        }
        acc += v;
    }
    return acc / steps;
}

}  // namespace

TEST_CASE("compare fills the verdict row from the statistics") {
    auto r = compare("afl", {1, 2, 3}, "newfuzz", {4, 5, 6});
    CHECK(r.baseline == "afl");
    CHECK(r.challenger == "newfuzz");
    CHECK(r.u_statistic == 9.0);
    CHECK(r.p_value == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.a12 == 1.0);
    CHECK_FALSE(r.significant);
    CHECK(r.large_effect);
    CHECK_FALSE(r.degenerate);
    CHECK(r.small_sample);
}

TEST_CASE("compare marks significance for clearly separated 30-rep series") {
    std::vector<double> lo(30, 0.0), hi(30, 10.0);
    auto r = compare("afl", lo, "newfuzz", hi);
    CHECK(r.p_value < 0.001);
    CHECK(r.significant);
    CHECK(r.a12 == 1.0);
    CHECK(r.large_effect);
    CHECK_FALSE(r.small_sample);
}

TEST_CASE("identical series yield a degenerate, insignificant row") {
    std::vector<double> v(30, 5.0);
    auto r = compare("afl", v, "clone", v);
    CHECK(r.p_value == 1.0);
    CHECK(r.degenerate);
    CHECK_FALSE(r.significant);
    CHECK(r.a12 == 0.5);
    CHECK_FALSE(r.large_effect);
}

TEST_CASE("p exactly 0.05 is not significant") {
    // Tie pattern chosen so the exact path counts 6 of C(10,3)=120
    // assignments at least as extreme: p is exactly 1/20.
    std::vector<double> a{0, 0, 1};
    std::vector<double> b{1, 1, 1, 1, 2, 2, 2};
    auto mw = stats::mann_whitney_u(a, b);
    REQUIRE(mw.exact);
    CHECK(mw.p_value == 0.05);
    auto r = compare("afl", b, "newfuzz", a);
    CHECK(r.p_value == 0.05);
    CHECK_FALSE(r.significant);
}

TEST_CASE("a12 exactly at the large-effect threshold counts as large") {
    // 71 challenger wins out of 100 pairings, no ties.
    std::vector<double> b{0, 10, 20, 30, 40, 50, 60, 70, 80, 90};
    std::vector<double> a(10, 95.0);
    a[7] = 7;
    a[8] = -5;
    a[9] = -5;
    REQUIRE(stats::a12(a, b) == 0.71);
    auto r = compare("afl", b, "newfuzz", a);
    CHECK(r.a12 == 0.71);
    CHECK(r.large_effect);
    auto nudged = a;
    nudged[7] = 0;  // the win over b's 0 becomes a tie: 70.5 of 100
    auto below = compare("afl", b, "newfuzz", nudged);
    CHECK(below.a12 == 0.705);
    CHECK_FALSE(below.large_effect);
}

TEST_CASE("rare bugs are those with a single finder") {
    std::map<BugKey, std::set<std::string>> incidence{
        {numbered_key(1), {"q"}},
        {numbered_key(2), {"afl", "q"}},
        {numbered_key(3), {"afl"}},
        {numbered_key(4), {"mopt"}},
    };
    auto rare = rare_bugs(incidence);
    CHECK(rare.size() == 3);
    CHECK(rare["q"] == std::set<BugKey>{numbered_key(1)});
    CHECK(rare["afl"] == std::set<BugKey>{numbered_key(3)});
    CHECK(rare["mopt"] == std::set<BugKey>{numbered_key(4)});
    CHECK_FALSE(rare.contains(""));
}

TEST_CASE("rare-bug sets are pairwise disjoint and match a recount") {
    std::mt19937_64 rng(11);
    std::vector<std::string> fuzzers{"afl", "aflfast", "mopt", "qsym"};
    for (int trial = 0; trial < 200; ++trial) {
        std::map<BugKey, std::set<std::string>> incidence;
        int bugs = 1 + static_cast<int>(util::bounded_rand(rng, 12));
        for (int i = 0; i < bugs; ++i) {
            std::set<std::string> finders;
            int n = 1 + static_cast<int>(util::bounded_rand(rng, fuzzers.size()));
            while (static_cast<int>(finders.size()) < n)
                finders.insert(fuzzers[util::bounded_rand(rng, fuzzers.size())]);
            incidence[numbered_key(i)] = finders;
        }
        auto rare = rare_bugs(incidence);

        std::size_t expected_total = 0;
        for (const auto& [key, finders] : incidence) {
            if (finders.size() != 1) continue;
            ++expected_total;
            CHECK(rare.at(*finders.begin()).contains(key));
        }
        std::set<BugKey> all;
        std::size_t total = 0;
        for (const auto& [fuzzer, keys] : rare) {
            total += keys.size();
            for (const auto& k : keys) CHECK(all.insert(k).second);
        }
        CHECK(total == expected_total);
    }
}

TEST_CASE("bug timing takes the first sighting per repetition") {
    auto bug = numbered_key(1);
    auto other = numbered_key(2);
    std::vector<TrialEvents> reps{
        {{bug, 3600.0}, {other, 10.0}},
        {{other, 5.0}},
    };
    auto t = bug_timings(reps, bug);
    REQUIRE(t.tte_s.size() == 2);
    CHECK(t.tte_s[0] == 3600.0);
    CHECK_FALSE(t.tte_s[1].has_value());
    CHECK(t.success_count == 1);
    CHECK(t.mean_tte_s() == 3600.0);
}

TEST_CASE("out-of-order events do not disturb the TTE") {
    auto bug = numbered_key(1);
    std::vector<TrialEvents> reps{{{bug, 10.0}, {bug, 5.0}, {bug, 7.0}}};
    auto t = bug_timings(reps, bug);
    CHECK(t.tte_s[0] == 5.0);
    CHECK(t.success_count == 1);
}

TEST_CASE("a bug absent everywhere is fully censored") {
    std::vector<TrialEvents> reps{{}, {}, {}};
    auto t = bug_timings(reps, numbered_key(1));
    CHECK(t.success_count == 0);
    CHECK(t.tte_s.size() == 3);
    CHECK_FALSE(t.mean_tte_s().has_value());
    for (const auto& e : t.tte_s) CHECK_FALSE(e.has_value());
}

TEST_CASE("mean TTE ignores censored repetitions") {
    auto bug = numbered_key(1);
    std::vector<TrialEvents> reps{{{bug, 100.0}}, {}, {{bug, 300.0}}};
    auto t = bug_timings(reps, bug);
    CHECK(t.success_count == 2);
    CHECK(t.mean_tte_s() == 200.0);
}

TEST_CASE("cumulative curve counts bugs first seen up to each grid point") {
    std::vector<TrialEvents> reps{{{numbered_key(1), 10.0}, {numbered_key(2), 100.0}}};
    auto curve = cumulative_curve(reps, {50.0, 200.0});
    CHECK(curve == std::vector<double>{1.0, 2.0});
}

TEST_CASE("no bugs means an all-zero curve") {
    std::vector<TrialEvents> reps{{}, {}};
    auto curve = cumulative_curve(reps, {1.0, 2.0, 3.0});
    CHECK(curve == std::vector<double>{0.0, 0.0, 0.0});
    CHECK(cumulative_curve({}, {1.0, 2.0}) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("curve matches an independent recount on random campaigns") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<TrialEvents> reps(1 + util::bounded_rand(rng, 5));
        for (auto& events : reps) {
            int n = static_cast<int>(util::bounded_rand(rng, 20));
            for (int i = 0; i < n; ++i)
                events.push_back({numbered_key(static_cast<int>(util::bounded_rand(rng, 8))),
                                  std::floor(util::uniform01(rng) * 1000.0)});
        }
        std::vector<double> grid;
        double t = 0.0;
        int points = 1 + static_cast<int>(util::bounded_rand(rng, 8));
        for (int i = 0; i < points; ++i) {
            t += 1.0 + std::floor(util::uniform01(rng) * 200.0);
            grid.push_back(t);
        }
        auto curve = cumulative_curve(reps, grid);
        auto expect = curve_oracle(reps, grid);
        REQUIRE(curve.size() == expect.size());
        for (std::size_t i = 0; i < curve.size(); ++i)
            CHECK(curve[i] == doctest::Approx(expect[i]).epsilon(1e-12));
        for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] >= curve[i - 1]);
    }
}

TEST_CASE("curve final value equals the mean unique-bug count") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TrialEvents> reps(2 + util::bounded_rand(rng, 4));
        double uniques = 0.0;
        for (auto& events : reps) {
            std::set<int> planted;
            int n = static_cast<int>(util::bounded_rand(rng, 15));
            for (int i = 0; i < n; ++i) {
                int id = static_cast<int>(util::bounded_rand(rng, 6));
                planted.insert(id);
                events.push_back({numbered_key(id), util::uniform01(rng) * 500.0});
            }
            uniques += static_cast<double>(planted.size());
        }
        auto curve = cumulative_curve(reps, {250.0, 600.0});
        CHECK(curve.back() ==
              doctest::Approx(uniques / static_cast<double>(reps.size())).epsilon(1e-12));
    }
}

TEST_CASE("a non-increasing grid is rejected") {
    CHECK_THROWS_AS(cumulative_curve({}, {1.0, 1.0}), SchemaError);
    CHECK_THROWS_AS(cumulative_curve({}, {2.0, 1.0}), SchemaError);
}

TEST_CASE("exploitable summary deduplicates by classifier hash per rep") {
    std::vector<std::vector<ExploitabilityRecord>> reps{
        {{Exploitability::Exploitable, "h1", ""},
         {Exploitability::Unknown, "h2", ""}},
    };
    CHECK(exploitable_summary(reps) == 1.0);

    reps.push_back({{Exploitability::Exploitable, "h1", ""},
                    {Exploitability::Exploitable, "h1", ""},
                    {Exploitability::Exploitable, "h3", ""},
                    {Exploitability::Exploitable, "h4", ""},
                    {Exploitability::ProbablyExploitable, "h5", ""}});
    CHECK(exploitable_summary(reps) == 2.0);
    CHECK(exploitable_summary({}) == 0.0);
}

TEST_CASE("exploitable summary matches a planted 30-rep recount") {
    std::mt19937_64 rng(47);
    std::vector<std::vector<ExploitabilityRecord>> reps(30);
    double expected = 0.0;
    for (auto& records : reps) {
        std::set<std::string> distinct;
        int n = static_cast<int>(util::bounded_rand(rng, 12));
        for (int i = 0; i < n; ++i) {
            std::string hash = "h" + std::to_string(util::bounded_rand(rng, 6));
            auto cat = static_cast<Exploitability>(util::bounded_rand(rng, 4));
            records.push_back({cat, hash, ""});
            if (cat == Exploitability::Exploitable) distinct.insert(hash);
        }
        expected += static_cast<double>(distinct.size());
    }
    expected /= 30.0;
    CHECK(exploitable_summary(reps) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("overhead of a constant trace is the constant") {
    ResourceTrace trace;
    for (int i = 0; i < 10; ++i) trace.samples.push_back({double(i), 100.0, 100.0});
    trace.disk_read_mb = 12.5;
    trace.disk_write_mb = 800.0;
    auto s = overhead_summary(trace);
    CHECK(s.cpu_util_avg == 100.0);
    CHECK(s.mem_avg_mb == 100.0);
    CHECK(s.mem_max_mb == 100.0);
    CHECK(s.disk_read_mb == 12.5);
    CHECK(s.disk_write_mb == 800.0);
}

TEST_CASE("two equally spaced samples average to their midpoint") {
    ResourceTrace trace;
    trace.samples = {{0.0, 40.0, 10.0}, {1.0, 60.0, 30.0}};
    auto s = overhead_summary(trace);
    CHECK(s.mem_avg_mb == 20.0);
    CHECK(s.mem_max_mb == 30.0);
    CHECK(s.cpu_util_avg == 50.0);
}

TEST_CASE("jittered sampling intervals are weighted by their span") {
    ResourceTrace trace;
    trace.samples = {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {10.0, 100.0, 100.0}};
    auto s = overhead_summary(trace);
    CHECK(s.mem_avg_mb == doctest::Approx(45.0).epsilon(1e-12));
    CHECK(s.cpu_util_avg == doctest::Approx(45.0).epsilon(1e-12));
}

TEST_CASE("sawtooth traces match a numeric integration oracle") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        ResourceTrace trace;
        double t = 0.0;
        int n = 2 + static_cast<int>(util::bounded_rand(rng, 30));
        for (int i = 0; i < n; ++i) {
            trace.samples.push_back(
                {t, util::uniform01(rng) * 100.0, util::uniform01(rng) * 2048.0});
            t += 0.25 + util::uniform01(rng) * 3.0;
        }
        auto s = overhead_summary(trace);
        CHECK(s.cpu_util_avg ==
              doctest::Approx(weighted_avg_oracle(trace.samples, &ResourceSample::cpu_percent))
                  .epsilon(1e-4));
        CHECK(s.mem_avg_mb ==
              doctest::Approx(weighted_avg_oracle(trace.samples, &ResourceSample::rss_mb))
                  .epsilon(1e-4));
        CHECK(s.mem_max_mb >= s.mem_avg_mb);
        CHECK(s.mem_avg_mb >= 0.0);
    }
}

TEST_CASE("single-sample and zero-span traces fall back to plain means") {
    ResourceTrace one;
    one.samples = {{3.0, 75.0, 512.0}};
    auto s = overhead_summary(one);
    CHECK(s.cpu_util_avg == 75.0);
    CHECK(s.mem_avg_mb == 512.0);
    CHECK(s.mem_max_mb == 512.0);

    ResourceTrace flat;
    flat.samples = {{2.0, 10.0, 100.0}, {2.0, 30.0, 200.0}};
    auto f = overhead_summary(flat);
    CHECK(f.cpu_util_avg == 20.0);
    CHECK(f.mem_avg_mb == 150.0);
}

TEST_CASE("empty and backwards traces are rejected") {
    CHECK_THROWS_AS(overhead_summary(ResourceTrace{}), EmptyTrace);
    ResourceTrace bad;
    bad.samples = {{5.0, 0.0, 0.0}, {4.0, 0.0, 0.0}};
    CHECK_THROWS_AS(overhead_summary(bad), SchemaError);
}
