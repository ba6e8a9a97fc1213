#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "survquack/error.hpp"
#include "survquack/estim.hpp"
#include "survquack/sim.hpp"

using namespace survquack;

namespace {

SurvivalSample two_arm(const std::vector<double>& rx, const std::vector<double>& c,
                       std::vector<bool> rx_ev = {}, std::vector<bool> c_ev = {})
{
    SurvivalSample s;
    for (std::size_t i = 0; i < rx.size(); ++i) s.records.push_back({rx[i], rx_ev.empty() || rx_ev[i], Arm::Rx, {}});
    for (std::size_t i = 0; i < c.size(); ++i) s.records.push_back({c[i], c_ev.empty() || c_ev[i], Arm::C, {}});
    return s;
}

SurvivalSample lehmann_sample(double theta, std::size_t n, std::uint64_t seed)
{
    const WeibullDist c(1.0, 10.0);
    const WeibullDist rx(1.0, 10.0 * std::pow(theta, -1.0));
    SplitMix64 g(seed);
    return two_arm(sample_times(rx, g, n), sample_times(c, g, n));
}

} // namespace

TEST_CASE("km small cases")
{
    const std::vector<double> t{1, 2, 3};
    const KMCurve all = km_fit(t, {true, true, true});
    CHECK(all.survival(2.0) == doctest::Approx(1.0 / 3));
    const KMCurve mixed = km_fit(t, {true, false, true});
    CHECK(mixed.survival(1.0) == doctest::Approx(2.0 / 3));
    CHECK(mixed.survival(3.0) == 0.0);
    const std::vector<double> one{5.0};
    const KMCurve single = km_fit(one, {true});
    CHECK(single.survival(4.999) == 1.0);
    CHECK(single.survival(5.0) == 0.0);
}

TEST_CASE("km median")
{
    const std::vector<double> t{1, 2, 3, 4};
    CHECK(km_median(km_fit(t, {true, true, true, true})) == 2.0);
    CHECK_FALSE(km_median(km_fit(t, {false, false, false, false})).has_value());
}

TEST_CASE("km against the hand product-limit with ties and censoring")
{
    SplitMix64 g(101);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 1 + static_cast<std::size_t>(g.uniform() * 25);
        std::vector<double> t;
        std::vector<bool> e;
        std::vector<int> d;
        for (std::size_t i = 0; i < n; ++i) {
            t.push_back(1.0 + std::floor(g.uniform() * 8)); // heavy ties
            e.push_back(g.uniform() < 0.7);
            d.push_back(e.back());
        }
        const KMCurve km = km_fit(t, e);
        for (double at = 0.5; at < 10; at += 0.5)
            REQUIRE(km.survival(at) == doctest::Approx(oracle::product_limit(t, d, at)).epsilon(1e-12));
    }
}

TEST_CASE("km median of an equal-median arm sample is near 8")
{
    const ResolvedScenario r = resolve(build_section3_scenario());
    SplitMix64 g(4242);
    std::vector<double> t;
    for (int i = 0; i < 500; ++i) {
        const bool plus = g.uniform() < 0.5;
        t.push_back((plus ? r.subgroups[0].rx : r.subgroups[1].rx).sample(g));
    }
    const auto med = km_median(km_fit(t, std::vector<bool>(t.size(), true)));
    REQUIRE(med.has_value());
    CHECK(std::abs(*med - 8.0) < 1.0);
}

TEST_CASE("weibull gradient matches finite differences")
{
    SplitMix64 g(7);
    const WeibullDist d(1.3, 4.0);
    const auto t = sample_times(d, g, 60);
    std::vector<bool> e;
    for (std::size_t i = 0; i < t.size(); ++i) e.push_back(g.uniform() < 0.8);
    for (int rep = 0; rep < 50; ++rep) {
        const double a = -1.0 + 2.0 * g.uniform();
        const double b = 0.5 + 2.0 * g.uniform();
        const auto grad = weibull_gradient(t, e, a, b);
        const double h = 1e-6;
        const double fa = (weibull_loglik(t, e, a + h, b) - weibull_loglik(t, e, a - h, b)) / (2 * h);
        const double fb = (weibull_loglik(t, e, a, b + h) - weibull_loglik(t, e, a, b - h)) / (2 * h);
        CHECK(grad[0] == doctest::Approx(fa).epsilon(1e-5).scale(1.0));
        CHECK(grad[1] == doctest::Approx(fb).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("weibull mle consistency and optimum")
{
    SplitMix64 g(2024);
    const auto t = sample_times(WeibullDist(1.2, 10.0), g, 10000);
    const std::vector<bool> e(t.size(), true);
    const WeibullFit fit = weibull_mle(t, e);
    CHECK(std::abs(fit.dist.shape() - 1.2) < 0.05);
    CHECK(fit.grad_norm <= 1e-8);
    const auto grad = weibull_gradient(t, e, std::log(fit.dist.shape()), std::log(fit.dist.scale()));
    CHECK(std::hypot(grad[0], grad[1]) <= 1e-8);
    CHECK(fit.se_log_scale() > 0.0);
}

TEST_CASE("exponential scale is the mean time without censoring")
{
    const std::vector<double> t{0.5, 1.5, 4.0, 2.0};
    const WeibullDist d = weibull_mle_fixed_shape(t, {true, true, true, true}, 1.0);
    CHECK(d.scale() == doctest::Approx(2.0));
}

TEST_CASE("weibull mle rejects degenerate samples")
{
    const std::vector<double> t{3.0, 3.0};
    CHECK_THROWS_AS(weibull_mle(t, {true, true}), DegenerateSample);
    const std::vector<double> u{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(weibull_mle(u, {true, false, false}), DegenerateSample);
}

TEST_CASE("empirical llp")
{
    const std::vector<double> a{2, 4}, b{1, 3}, s{1, 2, 3};
    CHECK(empirical_llp(a, b) == doctest::Approx(0.75));
    CHECK(empirical_llp(s, s) == doctest::Approx(0.5));
    SplitMix64 g(3);
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = sample_times(WeibullDist(1.0, 1.0), g, 13);
        const auto y = sample_times(WeibullDist(2.0, 1.5), g, 7);
        CHECK(empirical_llp(x, y) + empirical_llp(y, x) == 1.0);
    }
    const auto big = lehmann_sample(2.0, 4000, 5);
    CHECK(empirical_llp(big.times(Arm::Rx), big.times(Arm::C)) == doctest::Approx(1.0 / 3).epsilon(0.05));
}

TEST_CASE("empirical llp on a censored sample is refused")
{
    const SurvivalSample s = two_arm({1, 2}, {3, 4}, {true, false});
    CHECK_THROWS_AS(empirical_llp(s), UnsupportedCensoring);
}

TEST_CASE("hr and llp")
{
    CHECK(llp_from_hr(2.0 / 3) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(hr_from_llp(0.5) == 1.0);
    CHECK(hr_from_llp(llp_from_hr(0.767)) == doctest::Approx(0.767).epsilon(1e-12));
    CHECK_THROWS_AS(hr_from_llp(1.0), DomainError);
    CHECK_THROWS_AS(llp_from_hr(-1.0), DomainError);
}

TEST_CASE("tr and hr")
{
    CHECK(tr_to_hr(1.0, 1.7) == 1.0);
    CHECK(tr_to_hr(2.0, 1.0) == doctest::Approx(0.5));
    CHECK(tr_to_hr(2.0, 1.2) == doctest::Approx(0.4353).epsilon(1e-4));
    const WeibullDist a = weibull_from_median(1.2, 12), b = weibull_from_median(1.2, 6);
    for (double t = 0.5; t < 40; t += 1.7)
        CHECK(a.hazard(t) / b.hazard(t) == doctest::Approx(std::pow(2.0, -1.2)).epsilon(1e-12));
    SplitMix64 g(8);
    for (int i = 0; i < 1000; ++i) {
        const double h = std::exp(6 * g.uniform() - 3), k = 0.2 + 3 * g.uniform();
        REQUIRE(tr_to_hr(hr_to_tr(h, k), k) == doctest::Approx(h).epsilon(1e-12));
    }
}

TEST_CASE("efficacy summary domain")
{
    CHECK_THROWS_AS(EfficacySummary(Measure::LLP, 1.2), DomainError);
    CHECK_THROWS_AS(EfficacySummary(Measure::HR, 0.0), DomainError);
    CHECK(EfficacySummary(Measure::TR, 1.5).value == 1.5);
}

TEST_CASE("cox antisymmetry and consistency")
{
    const auto s = lehmann_sample(0.5, 2000, 99);
    const CoxFit f = cox_fit_two_arm(s);
    const CoxFit r = cox_fit_two_arm(s.swapped_arms());
    CHECK(r.log_hr == doctest::Approx(-f.log_hr).epsilon(1e-12));
    CHECK(r.se == doctest::Approx(f.se).epsilon(1e-10));
    CHECK(std::abs(f.log_hr - std::log(0.5)) < 0.1);
}

TEST_CASE("stratified cox on iid copies matches the pooled fit")
{
    const auto a = lehmann_sample(0.7, 300, 1);
    SurvivalSample s;
    s.factors = {"copy"};
    for (const char* lvl : {"x", "y"})
        for (auto r : a.records) {
            r.levels = {lvl};
            s.records.push_back(r);
        }
    CHECK(cox_fit_two_arm(s, std::string("copy")).log_hr ==
          doctest::Approx(cox_fit_two_arm(a).log_hr).epsilon(1e-6));
    CHECK(cox_fit_two_arm(s, std::string("copy")).strata == 2);
}

TEST_CASE("cox with no overlap is refused")
{
    const SurvivalSample s = two_arm({10, 11, 12}, {1, 2, 3});
    CHECK_THROWS_AS(cox_fit_two_arm(s), NumericalError);
}

TEST_CASE("sample time ratio")
{
    const std::vector<double> rx{1, 2, 3}, c{2, 4, 6};
    const std::vector<bool> ev(3, true);
    CHECK(sample_tr(rx, ev, c, ev).value == doctest::Approx(0.5));
    CHECK(sample_tr(rx, ev, rx, ev).value == 1.0);
    CHECK_THROWS_AS(sample_tr(rx, {false, false, false}, c, ev), NotReached);
    const ResolvedScenario r = resolve(build_section3_scenario());
    SplitMix64 g(12);
    const auto trx = sample_times(r.subgroups[0].rx, g, 20000);
    const auto tc = sample_times(r.subgroups[0].c, g, 20000);
    const std::vector<bool> all(20000, true);
    CHECK(sample_tr(trx, all, tc, all).value == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("dataset validation")
{
    SurvivalSample s = two_arm({1, -2}, {3});
    CHECK_THROWS_AS(s.validate(), ValidationError);
    SurvivalSample t = two_arm({1}, {3});
    t.factors = {"sex"};
    CHECK_THROWS_AS(t.validate(), ValidationError);
}
