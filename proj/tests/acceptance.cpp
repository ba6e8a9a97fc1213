// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "survquack/config.hpp"
#include "survquack/dataset.hpp"
#include "survquack/infer.hpp"
#include "survquack/sim.hpp"
#include "survquack/sme.hpp"

using namespace survquack;

namespace {

const std::string kRoot = SURVQUACK_SOURCE_DIR;
int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

void report(const char* id, bool ok, const std::string& detail, double secs)
{
    std::printf("[%s] %s  %s  (%.2fs)\n", ok ? "PASS" : "FAIL", id, detail.c_str(), secs);
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

ScenarioConfig shipped_section3()
{
    return simulation_config_from_ini(parse_ini_file(kRoot + "/configs/section3.cfg")).scenario;
}

void ac1()
{
    Timer t;
    const std::vector<WeightedRatio> s{{0.521, 0.5}, {0.983, 0.5}};
    const double v = naive_stratified_ratio(s);
    report("AC1 naive pooling", std::abs(v - 0.716) < 0.0005, fmt("value %.6f, target 0.716", v), t.seconds());
}

void ac2()
{
    Timer t;
    ScenarioConfig c = shipped_section3();
    c.replications = 1000;
    const auto r1 = run_study(c);
    ScenarioConfig c10 = c;
    c10.replications = 10000;
    const auto r10 = run_study(c10);
    const double a = r1.rejection_rate.rate, b = r10.rejection_rate.rate, m = r10.max_directional_rate;
    const bool ok = a >= 0.25 && a <= 0.36 && b >= 0.27 && b <= 0.34 && m > 0.12;
    report("AC2 equal-median scenario simulation", ok,
           fmt("1000 reps %.4f in [0.25,0.36]; 10000 reps %.4f in [0.27,0.34]; max directional %.4f > 0.12", a, b, m),
           t.seconds());
}

void ac3()
{
    Timer t;
    const ResolvedScenario r = resolve(shipped_section3());
    const double mrx = quantile(*r.mixture_rx, 0.5), mc = quantile(*r.mixture_c, 0.5);
    const auto& plus = r.subgroups[0];
    const auto& minus = r.subgroups[1];
    const double k = minus.rx.shape();
    const auto solve = [&](const WeibullDist& p) {
        return oracle::bisect(
            [&](double lam) {
                return 0.5 * oracle::weibull_s(8.0, p.shape(), p.scale()) + 0.5 * oracle::weibull_s(8.0, k, lam) - 0.5;
            },
            1e-3, 1e4);
    };
    const double orx = solve(plus.rx), oc = solve(plus.c);
    const double e1 = std::max(std::abs(mrx - 8), std::abs(mc - 8));
    const double e2 = std::max(std::abs(minus.rx.scale() - orx), std::abs(minus.c.scale() - oc));
    report("AC3 scenario construction", e1 < 1e-6 && e2 < 1e-6,
           fmt("median error %.2e; g- scales %.6f/%.6f, oracle error %.2e", e1, minus.rx.scale(), minus.c.scale(), e2),
           t.seconds());
}

void ac4()
{
    Timer t;
    ScenarioConfig c = build_null_scenario();
    c.replications = 10000;
    const auto r = run_study(c);
    const double lr = r.rejection_rate.rate, cw = r.cox_wald_rejection_rate.rate;
    const bool ok = std::abs(lr - 0.05) <= 0.015 && std::abs(cw - 0.05) <= 0.015;
    report("AC4 null calibration", ok, fmt("log-rank %.4f, Cox-Wald %.4f, target 0.05 +- 0.015", lr, cw), t.seconds());
}

void ac5()
{
    Timer t;
    SplitMix64 g(make_stream(1, "ac5", 0));
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double hr = std::exp(16 * g.uniform() - 8);
        worst = std::max(worst, std::abs(hr_from_llp(llp_from_hr(hr)) - hr) / hr);
        const double llp = g.uniform();
        worst = std::max(worst, std::abs(llp_from_hr(hr_from_llp(llp)) - llp) / llp);
    }
    double worst_theta = 0.0;
    const auto c = make_curve(weibull_from_median(1.3, 10.0));
    for (double theta : {0.25, 0.5, 2.0, 4.0}) {
        const std::vector<CurveRow> rows{{"all", 1.0, lehmann_transform(c, theta), c}};
        worst_theta = std::max(worst_theta, std::abs(sme_overall_hr(rows).value - theta));
    }
    report("AC5 HR-LLP bijection", worst < 1e-12 && worst_theta < 1e-6,
           fmt("round-trip max rel error %.2e; SME-HR max error %.2e", worst, worst_theta), t.seconds());
}

void ac6()
{
    Timer t;
    SplitMix64 g(make_stream(1, "ac6", 0));
    int rr_bad = 0, tr_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const int groups = 2 + static_cast<int>(g.uniform() * 3);
        std::vector<ResponseRow> rows;
        double total = 0.0;
        for (int k = 0; k < groups; ++k) {
            rows.push_back({"g" + std::to_string(k), 0.05 + g.uniform(), 0.01 + 0.98 * g.uniform(), 0.01 + 0.98 * g.uniform()});
            total += rows.back().prevalence;
        }
        double lo = 1e300, hi = 0;
        for (auto& r : rows) {
            r.prevalence /= total;
            lo = std::min(lo, r.p_rx / r.p_c);
            hi = std::max(hi, r.p_rx / r.p_c);
        }
        const double v = sme_overall_rr(rows).value;
        rr_bad += v < lo * (1 - 1e-12) || v > hi * (1 + 1e-12);
    }
    for (int i = 0; i < 500; ++i) {
        const double p = 0.05 + 0.9 * g.uniform();
        std::vector<CurveRow> rows;
        double lo = 1e300, hi = 0;
        for (double prev : {p, 1 - p}) {
            const double k = 0.5 + 2.5 * g.uniform();
            const double mc = 2 + 20 * g.uniform(), mrx = mc * std::exp(2 * g.uniform() - 1);
            rows.push_back({"g", prev, make_curve(weibull_from_median(k, mrx)), make_curve(weibull_from_median(k, mc))});
            lo = std::min(lo, mrx / mc);
            hi = std::max(hi, mrx / mc);
        }
        const double v = sme_overall_tr(rows).value;
        tr_bad += v < lo * (1 - 1e-9) || v > hi * (1 + 1e-9);
    }
    report("AC6 logic-respecting", rr_bad == 0 && tr_bad == 0,
           fmt("RR violations %.0f/1000, TR violations %.0f/500", rr_bad, tr_bad), t.seconds());
}

void ac7()
{
    Timer t;
    int inside = 0;
    for (double theta : {0.3, 0.5, 0.8})
        for (double ratio : {2.0, 3.0, 5.0}) {
            const auto c1 = make_curve(weibull_from_median(1.0, 6.0));
            const auto c2 = make_curve(weibull_from_median(1.0, 6.0 * ratio));
            const std::vector<CurveRow> rows{{"a", 0.5, lehmann_transform(c1, theta), c1},
                                             {"b", 0.5, lehmann_transform(c2, theta), c2}};
            const double hr = sme_overall_hr(rows).value;
            inside += hr > theta && hr < 1.0;
        }
    report("AC7 HR dilution", inside == 9, fmt("%.0f/9 cases strictly inside (theta, 1)", inside), t.seconds());
}

void ac8()
{
    Timer t;
    const LoadedDataset d = read_dataset_file(kRoot + "/data/oak_analog.csv");
    const AuditResult a = stratified_audit(d.sample, d.sample.factors, Measure::HR);
    double nlo = 1e9, nhi = -1e9, slo = 1e9, shi = -1e9, to_marg = 0;
    for (const auto& c : a.comparisons) {
        nlo = std::min(nlo, c.naive_value);
        nhi = std::max(nhi, c.naive_value);
        slo = std::min(slo, c.sme_value);
        shi = std::max(shi, c.sme_value);
        to_marg = std::max(to_marg, std::abs(c.sme_value - c.marginal_value));
    }
    const bool ok = a.comparisons.size() >= 3 && nhi - nlo > 0.05 && shi - slo < 0.02 && to_marg < 0.02;
    report("AC8 stratified fixture", ok,
           fmt("naive spread %.4f > 0.05; SME spread %.4f, max |SME - marginal| %.4f < 0.02 over %.0f factors",
               nhi - nlo, shi - slo, to_marg, static_cast<double>(a.comparisons.size())),
           t.seconds());
}

void ac9()
{
    Timer t;
    const std::size_t n = 50;
    const auto grid = default_theta_grid();
    const MwNullTable table = build_mw_null_table(n, n, grid, 4000, 909);
    const WeibullDist c(1.0, 1.0), rx(1.0, 0.5); // hazard ratio 2
    int covered = 0;
    for (std::uint64_t i = 0; i < 500; ++i) {
        SplitMix64 g = make_stream(2718, "ac9-data", i);
        const auto trx = sample_times(rx, g, n);
        const auto tc = sample_times(c, g, n);
        const ConfidenceSet cs = pivot_from_table(table, mw_doubled_count(trx, tc), 0.95);
        covered += cs.lo <= 2.0 && 2.0 <= cs.hi;
    }
    const double cov = covered / 500.0;

    // exact-enumeration agreement for every n, m <= 6
    const double half = 0.025;
    const std::size_t reps = 20000;
    const double se = std::sqrt(half * (1 - half) / reps);
    const auto small_grid = log_grid(0.02, 50, 25);
    long checked = 0, borderline = 0, disagree = 0;
    for (int nr = 1; nr <= 6; ++nr)
        for (int nc = 1; nc <= 6; ++nc) {
            const MwNullTable tab = build_mw_null_table(nr, nc, small_grid, reps, 77);
            for (std::size_t gi = 0; gi < small_grid.size(); ++gi) {
                const auto pmf = oracle::mw_exact_pmf(nr, nc, small_grid[gi]);
                for (std::size_t obs = 0; obs < pmf.size(); obs += 2) {
                    double lower = 0, upper = 0;
                    for (std::size_t k = 0; k < pmf.size(); ++k) {
                        if (k <= obs) lower += pmf[k];
                        if (k >= obs) upper += pmf[k];
                    }
                    const bool exact = lower > half && upper > half;
                    const bool mc = mw_accepts(mw_tails(tab, gi, obs), 0.95);
                    ++checked;
                    if (exact == mc) continue;
                    if (std::abs(lower - half) < 4 * se || std::abs(upper - half) < 4 * se) ++borderline;
                    else ++disagree;
                }
            }
        }
    const bool ok = cov >= 0.93 && cov <= 0.98 && disagree == 0;
    report("AC9 pivot CI", ok,
           fmt("coverage %.3f in [0.93,0.98]; exact oracle: %.0f decisions, %.0f borderline (within 4 MC SE), %.0f disagreements",
               cov, static_cast<double>(checked), static_cast<double>(borderline), static_cast<double>(disagree)),
           t.seconds());
}

void ac10()
{
    Timer t;
    SplitMix64 g(make_stream(1, "ac10", 0));
    long km_bad = 0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + static_cast<std::size_t>(g.uniform() * 60);
        std::vector<double> x;
        for (std::size_t j = 0; j < n; ++j) x.push_back(g.uniform() < 0.3 ? std::ceil(g.uniform() * 5) : 10 * g.uniform());
        const KMCurve km = km_fit(x, std::vector<bool>(n, true));
        for (double at : x) km_bad += km.survival(at) != oracle::empirical_survival(x, at);
    }

    // every multiset of at most 8 subjects over 4 distinct times, both event
    // states and both arms, with at most 6 events and both arms present
    long lr_checked = 0, lr_bad = 0;
    std::vector<int> codes;
    const auto visit = [&] {
        std::vector<double> tt;
        std::vector<int> dd, gg;
        SurvivalSample s;
        int events = 0, rx = 0;
        for (int code : codes) {
            const double time = 1 + code % 4;
            const int ev = code / 4 % 2, arm = code / 8;
            tt.push_back(time);
            dd.push_back(ev);
            gg.push_back(arm);
            events += ev;
            rx += arm;
            s.records.push_back({time, ev == 1, arm ? Arm::Rx : Arm::C, {}});
        }
        if (events > 6 || rx == 0 || rx == static_cast<int>(codes.size())) return;
        const auto want = oracle::logrank(tt, dd, gg);
        const auto got = logrank_test(s);
        ++lr_checked;
        lr_bad += std::abs(got.observed_minus_expected - want.o_minus_e) > 1e-12 || std::abs(got.variance - want.var) > 1e-12;
    };
    const auto rec = [&](auto&& self, int start, int left) -> void {
        if (!codes.empty()) visit();
        if (left == 0) return;
        for (int c = start; c < 16; ++c) {
            codes.push_back(c);
            self(self, c, left - 1);
            codes.pop_back();
        }
    };
    rec(rec, 0, 8);
    report("AC10 oracle equivalence", km_bad == 0 && lr_bad == 0,
           fmt("KM vs empirical mismatches %.0f over 200 samples; log-rank mismatches %.0f of %.0f small samples",
               static_cast<double>(km_bad), static_cast<double>(lr_bad), static_cast<double>(lr_checked)),
           t.seconds());
}

} // namespace

int main()
{
    const auto guard = [](const char* id, void (*f)()) {
        try {
            f();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what(), 0.0);
        }
    };
    guard("AC1", ac1);
    guard("AC2", ac2);
    guard("AC3", ac3);
    guard("AC4", ac4);
    guard("AC5", ac5);
    guard("AC6", ac6);
    guard("AC7", ac7);
    guard("AC8", ac8);
    guard("AC9", ac9);
    guard("AC10", ac10);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
