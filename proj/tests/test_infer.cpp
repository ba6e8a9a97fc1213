#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "survquack/error.hpp"
#include "survquack/infer.hpp"

using namespace survquack;

namespace {

SurvivalSample two_arm(const std::vector<double>& rx, const std::vector<double>& c)
{
    SurvivalSample s;
    for (double t : rx) s.records.push_back({t, true, Arm::Rx, {}});
    for (double t : c) s.records.push_back({t, true, Arm::C, {}});
    return s;
}

SurvivalSample weibull_arms(double scale_rx, double scale_c, std::size_t n, std::uint64_t seed)
{
    SplitMix64 g(seed);
    return two_arm(sample_times(WeibullDist(1.0, scale_rx), g, n), sample_times(WeibullDist(1.0, scale_c), g, n));
}

} // namespace

TEST_CASE("normal p-values")
{
    CHECK(normal_two_sided_p(0.0) == 1.0);
    CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(normal_two_sided_p(-1.959963984540054) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("log-rank on identical arms")
{
    const auto s = two_arm({1, 2, 3}, {1, 2, 3});
    const LogRankResult r = logrank_test(s);
    CHECK(r.observed_minus_expected == doctest::Approx(0.0).scale(1.0));
    CHECK(r.p_two_sided == doctest::Approx(1.0));
}

TEST_CASE("log-rank four-time hand table")
{
    // Rx {1,3}, C {2,4}: at risk (Rx, total) = (2,4), (1,3), (1,2), (0,1)
    const auto r = logrank_test(two_arm({1, 3}, {2, 4}));
    const double oe = (1 - 2.0 / 4) + (0 - 1.0 / 3) + (1 - 1.0 / 2) + 0.0;
    const double v = (2.0 / 4) * (2.0 / 4) + (1.0 / 3) * (2.0 / 3) + (1.0 / 2) * (1.0 / 2);
    CHECK(r.observed_minus_expected == doctest::Approx(oe).epsilon(1e-14));
    CHECK(r.variance == doctest::Approx(v).epsilon(1e-14));
}

TEST_CASE("log-rank matches the hypergeometric oracle with ties and censoring")
{
    SplitMix64 g(5);
    for (int rep = 0; rep < 300; ++rep) {
        SurvivalSample s;
        std::vector<double> t;
        std::vector<int> d, grp;
        const int n = 2 + static_cast<int>(g.uniform() * 30);
        for (int i = 0; i < n; ++i) {
            const Arm a = i % 2 ? Arm::Rx : Arm::C;
            const double time = 1 + std::floor(g.uniform() * 6);
            const bool ev = g.uniform() < 0.75;
            s.records.push_back({time, ev, a, {}});
            t.push_back(time);
            d.push_back(ev);
            grp.push_back(a == Arm::Rx);
        }
        const auto want = oracle::logrank(t, d, grp);
        const auto got = logrank_test(s);
        REQUIRE(got.observed_minus_expected == doctest::Approx(want.o_minus_e).epsilon(1e-12).scale(1.0));
        REQUIRE(got.variance == doctest::Approx(want.var).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("log-rank z is antisymmetric under relabeling")
{
    const auto s = weibull_arms(8, 10, 200, 3);
    CHECK(logrank_test(s.swapped_arms()).z == -logrank_test(s).z);
}

TEST_CASE("zero variance gives p = 1")
{
    SurvivalSample s;
    s.records = {{1.0, false, Arm::Rx, {}}, {2.0, false, Arm::C, {}}};
    const auto r = logrank_test(s);
    CHECK(r.zero_variance);
    CHECK(r.p_two_sided == 1.0);
}

TEST_CASE("cox wald power under a strong effect")
{
    const auto s = weibull_arms(20, 10, 2000, 11); // HR 0.5
    CHECK(wald_test_cox(s).p_two_sided < 1e-6);
}

TEST_CASE("weibull wald for the log time ratio")
{
    SplitMix64 g(1);
    const auto rx = sample_times(WeibullDist(1.2, 20.0), g, 3000);
    const auto c = sample_times(WeibullDist(1.2, 10.0), g, 3000);
    const std::vector<bool> e(3000, true);
    const WaldResult w = wald_test_weibull(weibull_mle(rx, e), weibull_mle(c, e));
    CHECK(w.estimate == doctest::Approx(std::log(2.0)).epsilon(0.05));
    CHECK(w.p_two_sided < 1e-6);
}

TEST_CASE("decision procedure")
{
    CHECK(decision_procedure(two_arm({1, 2, 3}, {1, 2, 3}), 0.05).claim == Claim::NoClaim);
    const auto strong = weibull_arms(12 / std::log(2.0), 6 / std::log(2.0), 500, 17);
    CHECK(decision_procedure(strong, 0.05).claim == Claim::RxLongerMedian);
    CHECK(decision_procedure(strong.swapped_arms(), 0.05).claim == Claim::CLongerMedian);

    SplitMix64 g(23);
    for (int rep = 0; rep < 300; ++rep) {
        const auto s = weibull_arms(1.0, 1.0 + 0.3 * g.uniform(), 30, rep);
        const Decision d = decision_procedure(s, 0.05);
        if (d.logrank.p_two_sided >= 0.05) REQUIRE(d.claim == Claim::NoClaim);
    }
}

TEST_CASE("mann-whitney doubled counts")
{
    const std::vector<double> a{2, 4}, b{1, 3}, s{1, 2};
    CHECK(mw_doubled_count(a, b) == 6);
    CHECK(mw_doubled_count(s, s) == 4); // two ties, one win
}

TEST_CASE("log grid")
{
    const auto g = log_grid(0.02, 50, 200);
    CHECK(g.size() == 200);
    CHECK(g.front() == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(g.back() == doctest::Approx(50).epsilon(1e-14));
    CHECK(default_theta_grid() == g);
}

TEST_CASE("parallel null table equals the serial reference")
{
    const auto grid = log_grid(0.1, 10, 17);
    const auto serial = build_mw_null_table_serial(7, 5, grid, 2000, 99);
    for (int w : {1, 2, 3, 8}) CHECK(build_mw_null_table(7, 5, grid, 2000, 99, w) == serial);
}

TEST_CASE("monte carlo null matches exact enumeration at theta = 1 and 2")
{
    for (double theta : {1.0, 2.0}) {
        const auto table = build_mw_null_table(4, 3, {theta}, 40000, 5);
        const auto pmf = oracle::mw_exact_pmf(4, 3, theta);
        double cum = 0.0;
        for (std::size_t c = 0; c < pmf.size(); c += 2) {
            cum += pmf[c];
            const auto tails = mw_tails(table, 0, c);
            const double se = std::sqrt(cum * (1 - cum) / 40000) + 1e-12;
            CHECK(std::abs(tails.lower - cum) < 5 * se);
        }
    }
}

TEST_CASE("pivot ci basics")
{
    const auto grid = default_theta_grid();
    const std::vector<double> s{1, 2, 3, 4, 5, 6, 7, 8};
    const ConfidenceSet same = mw_pivot_ci(s, s, 0.95, grid, 2000, 1);
    CHECK(same.lo <= 1.0);
    CHECK(same.hi >= 1.0);
    CHECK(same.llp_observed == 0.5);

    std::vector<double> longer;
    for (double t : s) longer.push_back(t + 20);
    const ConfidenceSet fav = mw_pivot_ci(longer, s, 0.95, grid, 2000, 1);
    CHECK(fav.hi < 1.0);
}

TEST_CASE("pivot ci validation")
{
    const std::vector<double> s{1, 2, 3};
    const auto grid = default_theta_grid();
    CHECK_THROWS_AS(mw_pivot_ci(s, s, 1.0, grid, 2000, 1), ValidationError);
    CHECK_THROWS_AS(mw_pivot_ci(s, s, 0.0, grid, 2000, 1), ValidationError);
    CHECK_THROWS_AS(mw_pivot_ci(s, s, 0.95, grid, 100, 1), ValidationError);
    CHECK_THROWS_AS(mw_pivot_ci({}, s, 0.95, grid, 2000, 1), ValidationError);
}

TEST_CASE("accepted hull moves down as rx times grow")
{
    SplitMix64 g(4);
    auto rx = sample_times(WeibullDist(1, 1), g, 20);
    const auto c = sample_times(WeibullDist(1, 1), g, 20);
    const auto grid = log_grid(0.05, 20, 60);
    const auto table = build_mw_null_table(20, 20, grid, 2000, 3);
    double prev_lo = 1e9, prev_hi = 1e9;
    for (int step = 0; step < 6; ++step) {
        const ConfidenceSet cs = pivot_from_table(table, mw_doubled_count(rx, c), 0.95);
        CHECK(cs.lo <= prev_lo);
        CHECK(cs.hi <= prev_hi);
        prev_lo = cs.lo;
        prev_hi = cs.hi;
        for (double& t : rx) t *= 1.5;
    }
}
