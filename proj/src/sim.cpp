#include "survquack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <omp.h>

#include "survquack/error.hpp"
#include "survquack/rng.hpp"

namespace survquack {

void validate(const ScenarioConfig& config)
{
    std::vector<std::string> problems;
    if (config.subgroups.empty()) problems.push_back("subgroups: at least one subgroup is required");
    if (config.n_total < 20) problems.push_back("n_total: must be at least 20");
    if (!(config.alpha > 0.0 && config.alpha <= 0.5)) problems.push_back("alpha: must lie in (0, 0.5]");
    if (config.replications < 1) problems.push_back("replications: must be at least 1");
    if (!(config.allocation > 0.0 && config.allocation < 1.0)) problems.push_back("allocation: must lie in (0, 1)");
    if (config.censoring != "none") problems.push_back("censoring: only 'none' is supported");

    double total = 0.0;
    for (const auto& g : config.subgroups) {
        const std::string where = "subgroup '" + g.label + "'";
        if (!(g.prevalence > 0.0 && g.prevalence <= 1.0)) problems.push_back(where + ".prevalence: must lie in (0, 1]");
        if (!(g.shape > 0.0)) problems.push_back(where + ".shape: must be positive");
        total += g.prevalence;
        const bool solved = config.overall_median && config.overall_median->solved_subgroup == g.label;
        const auto check_arm = [&](const char* arm, const std::optional<double>& median,
                                   const std::optional<double>& scale) {
            if (solved) {
                if (median || scale)
                    problems.push_back(where + "." + arm + ": solved subgroup must not set a median or scale");
                return;
            }
            if (median.has_value() == scale.has_value())
                problems.push_back(where + "." + arm + ": set exactly one of median or scale");
            else if (!(median.value_or(scale.value_or(0.0)) > 0.0))
                problems.push_back(where + "." + arm + ": median/scale must be positive");
        };
        check_arm("rx", g.rx_median, g.rx_scale);
        check_arm("c", g.c_median, g.c_scale);
        for (const auto& h : config.subgroups)
            if (&h != &g && h.label == g.label) {
                problems.push_back(where + ": duplicate label");
                break;
            }
    }
    if (!config.subgroups.empty() && std::abs(total - 1.0) > 1e-12)
        problems.push_back("subgroups: prevalences sum to " + std::to_string(total) + ", not 1");
    if (config.overall_median) {
        if (!(config.overall_median->time > 0.0)) problems.push_back("overall_median: must be positive");
        const auto& lbl = config.overall_median->solved_subgroup;
        if (std::none_of(config.subgroups.begin(), config.subgroups.end(),
                         [&](const SubgroupSpec& g) { return g.label == lbl; }))
            problems.push_back("solve_subgroup: no subgroup labelled '" + lbl + "'");
    }
    if (!problems.empty()) {
        std::ostringstream os;
        os << "invalid scenario '" << config.name << "':";
        for (const auto& p : problems) os << "\n  - " << p;
        throw ValidationError(os.str());
    }
}

namespace {

WeibullDist arm_law(double shape, const std::optional<double>& median, const std::optional<double>& scale)
{
    return median ? weibull_from_median(shape, *median) : WeibullDist(shape, *scale);
}

} // namespace

ResolvedScenario resolve(const ScenarioConfig& config)
{
    validate(config);
    const std::string solved = config.overall_median ? config.overall_median->solved_subgroup : std::string{};

    std::vector<MixtureComponent> others_rx;
    std::vector<MixtureComponent> others_c;
    for (const auto& g : config.subgroups) {
        if (g.label == solved) continue;
        others_rx.push_back({g.prevalence, make_curve(arm_law(g.shape, g.rx_median, g.rx_scale))});
        others_c.push_back({g.prevalence, make_curve(arm_law(g.shape, g.c_median, g.c_scale))});
    }

    ResolvedScenario out{config, {}, 0.0, 0.0, nullptr, nullptr};
    std::vector<MixtureComponent> mix_rx;
    std::vector<MixtureComponent> mix_c;
    for (const auto& g : config.subgroups) {
        std::optional<WeibullDist> rx;
        std::optional<WeibullDist> c;
        if (g.label == solved) {
            const double m = config.overall_median->time;
            if (g.prevalence >= 1.0) {
                rx = c = weibull_from_median(g.shape, m);
            } else {
                rx = WeibullDist(g.shape, solve_scale_for_mixture_median(g.shape, m, g.prevalence, others_rx));
                c = WeibullDist(g.shape, solve_scale_for_mixture_median(g.shape, m, g.prevalence, others_c));
            }
        } else {
            rx = arm_law(g.shape, g.rx_median, g.rx_scale);
            c = arm_law(g.shape, g.c_median, g.c_scale);
        }
        out.subgroups.push_back({g.label, g.prevalence, *rx, *c});
        mix_rx.push_back({g.prevalence, make_curve(*rx)});
        mix_c.push_back({g.prevalence, make_curve(*c)});
    }
    out.mixture_rx = make_mixture(std::move(mix_rx));
    out.mixture_c = make_mixture(std::move(mix_c));
    out.overall_median_rx = quantile(*out.mixture_rx, 0.5);
    out.overall_median_c = quantile(*out.mixture_c, 0.5);

    if (config.overall_median) {
        const double m = config.overall_median->time;
        if (std::abs(out.overall_median_rx - m) > 1e-6 || std::abs(out.overall_median_c - m) > 1e-6)
            throw NumericalError("scenario '" + config.name + "': mixture medians " +
                                 std::to_string(out.overall_median_rx) + " / " +
                                 std::to_string(out.overall_median_c) + " miss the constraint " + std::to_string(m));
    }
    return out;
}

ScenarioConfig build_section3_scenario(Section3Assignment assignment)
{
    const bool plus_shallow = assignment == Section3Assignment::PlusShallow;
    ScenarioConfig cfg;
    cfg.name = plus_shallow ? "section3" : "section3_minus105";
    SubgroupSpec plus;
    plus.label = "g+";
    plus.prevalence = 0.5;
    plus.shape = plus_shallow ? 1.05 : 1.20;
    plus.rx_median = 12.0;
    plus.c_median = 6.0;
    SubgroupSpec minus;
    minus.label = "g-";
    minus.prevalence = 0.5;
    minus.shape = plus_shallow ? 1.20 : 1.05;
    cfg.subgroups = {plus, minus};
    cfg.overall_median = MedianConstraint{8.0, "g-"};
    cfg.n_total = 1000;
    cfg.allocation = 0.5;
    cfg.alpha = 0.05;
    cfg.replications = 1000;
    return cfg;
}

ScenarioConfig build_null_scenario(double shape, double median)
{
    ScenarioConfig cfg;
    cfg.name = "null";
    SubgroupSpec all;
    all.label = "all";
    all.prevalence = 1.0;
    all.shape = shape;
    all.rx_median = median;
    all.c_median = median;
    cfg.subgroups = {all};
    return cfg;
}

// ---------------------------------------------------------------------------
// Replications

namespace {

std::size_t pick_subgroup(const std::vector<ResolvedSubgroup>& groups, double u)
{
    double acc = 0.0;
    for (std::size_t g = 0; g + 1 < groups.size(); ++g) {
        acc += groups[g].prevalence;
        if (u < acc) return g;
    }
    return groups.size() - 1;
}

// Largest-remainder split of `n` subjects by prevalence.
std::vector<std::size_t> quota_counts(const std::vector<ResolvedSubgroup>& groups, std::size_t n)
{
    std::vector<std::size_t> counts(groups.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t used = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double exact = groups[g].prevalence * static_cast<double>(n);
        counts[g] = static_cast<std::size_t>(std::floor(exact));
        used += counts[g];
        remainders.push_back({exact - std::floor(exact), g});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; used < n; ++i, ++used) ++counts[remainders[i % remainders.size()].second];
    return counts;
}

} // namespace

SurvivalSample simulate_sample(const ResolvedScenario& scenario, std::uint64_t replication_index)
{
    const auto& cfg = scenario.config;
    const std::uint64_t seed = cfg.master_seed;
    SplitMix64 membership = make_stream(seed, "membership", replication_index);
    SplitMix64 times = make_stream(seed, "times", replication_index);

    const auto n_rx = static_cast<std::size_t>(std::llround(static_cast<double>(cfg.n_total) * cfg.allocation));
    const std::size_t n_c = cfg.n_total - n_rx;

    SurvivalSample sample;
    sample.factors = {"subgroup"};
    sample.records.reserve(cfg.n_total);

    const auto fill_arm = [&](Arm arm, std::size_t n) {
        std::vector<std::size_t> quota;
        if (cfg.membership == Membership::FixedQuota) quota = quota_counts(scenario.subgroups, n);
        std::size_t g_fixed = 0;
        std::size_t used = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t g;
            if (cfg.membership == Membership::FixedQuota) {
                while (used >= quota[g_fixed]) {
                    ++g_fixed;
                    used = 0;
                }
                g = g_fixed;
                ++used;
            } else {
                g = pick_subgroup(scenario.subgroups, membership.uniform());
            }
            const auto& law = arm == Arm::Rx ? scenario.subgroups[g].rx : scenario.subgroups[g].c;
            sample.records.push_back(Record{law.sample(times), true, arm, {scenario.subgroups[g].label}});
        }
    };
    fill_arm(Arm::Rx, n_rx);
    fill_arm(Arm::C, n_c);
    return sample;
}

ReplicationResult run_replication(const ResolvedScenario& scenario, std::uint64_t replication_index)
{
    const SurvivalSample sample = simulate_sample(scenario, replication_index);
    ReplicationResult res;
    res.decision = decision_procedure(sample, scenario.config.alpha);
    res.degenerate = res.decision.logrank.zero_variance;
    try {
        res.cox_wald_p = wald_test_cox(sample).p_two_sided;
    } catch (const Error&) {
        res.cox_wald_p.reset();
    }
    return res;
}

RateEstimate binomial_rate(std::size_t successes, std::size_t trials)
{
    RateEstimate r;
    if (trials == 0) return r;
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    r.rate = p;
    r.ci_lo = std::max(0.0, centre - half);
    r.ci_hi = std::min(1.0, centre + half);
    return r;
}

DirectionalErrorReport summarize(const ResolvedScenario& scenario, const std::vector<ReplicationResult>& results)
{
    const double alpha = scenario.config.alpha;
    DirectionalErrorReport rep;
    rep.scenario = scenario.config.name;
    rep.replications = results.size();
    rep.alpha = alpha;
    rep.master_seed = scenario.config.master_seed;
    rep.overall_median_rx = scenario.overall_median_rx;
    rep.overall_median_c = scenario.overall_median_c;
    rep.directional_claims_are_errors = std::abs(scenario.overall_median_rx - scenario.overall_median_c) <= 1e-6;
    for (const auto& r : results) {
        if (r.degenerate) ++rep.degenerate;
        if (r.decision.rejected(alpha)) {
            ++rep.rejections;
            switch (r.decision.claim) {
            case Claim::RxLongerMedian: ++rep.claims_rx_longer; break;
            case Claim::CLongerMedian: ++rep.claims_c_longer; break;
            case Claim::NoClaim: ++rep.ties; break;
            }
        }
        if (!r.cox_wald_p)
            ++rep.cox_wald_failures;
        else if (*r.cox_wald_p < alpha)
            ++rep.cox_wald_rejections;
    }
    rep.rejection_rate = binomial_rate(rep.rejections, rep.replications);
    rep.rx_longer_rate = binomial_rate(rep.claims_rx_longer, rep.replications);
    rep.c_longer_rate = binomial_rate(rep.claims_c_longer, rep.replications);
    rep.cox_wald_rejection_rate = binomial_rate(rep.cox_wald_rejections, rep.replications - rep.cox_wald_failures);
    rep.directional_sum = rep.rx_longer_rate.rate + rep.c_longer_rate.rate;
    rep.max_directional_rate = std::max(rep.rx_longer_rate.rate, rep.c_longer_rate.rate);
    return rep;
}

DirectionalErrorReport run_study_serial(const ResolvedScenario& scenario)
{
    std::vector<ReplicationResult> results(scenario.config.replications);
    for (std::size_t r = 0; r < results.size(); ++r) results[r] = run_replication(scenario, r);
    return summarize(scenario, results);
}

DirectionalErrorReport run_study(const ResolvedScenario& scenario, int workers)
{
    std::vector<ReplicationResult> results(scenario.config.replications);
    const int threads = workers > 0 ? workers : omp_get_max_threads();
    const auto n = static_cast<std::ptrdiff_t>(results.size());
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
    for (std::ptrdiff_t r = 0; r < n; ++r)
        results[static_cast<std::size_t>(r)] = run_replication(scenario, static_cast<std::uint64_t>(r));
    return summarize(scenario, results);
}

DirectionalErrorReport run_study(const ScenarioConfig& config, int workers)
{
    return run_study(resolve(config), workers);
}

std::vector<SweepEntry> sweep(const std::vector<ScenarioConfig>& configs, int workers)
{
    std::vector<SweepEntry> out;
    out.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        ScenarioConfig cfg = configs[i];
        cfg.master_seed = derive_stream_seed(cfg.master_seed, "sweep", i);
        SweepEntry e;
        try {
            e.report = run_study(cfg, workers);
        } catch (const Error& err) {
            e.error = err.what();
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<ScenarioConfig> prevalence_sweep(const ScenarioConfig& base, const std::string& label,
                                             const std::vector<double>& prevalences)
{
    const auto it = std::find_if(base.subgroups.begin(), base.subgroups.end(),
                                 [&](const SubgroupSpec& g) { return g.label == label; });
    if (it == base.subgroups.end()) throw ValidationError("prevalence sweep: no subgroup labelled '" + label + "'");
    const double rest = 1.0 - it->prevalence;
    std::vector<ScenarioConfig> out;
    for (double p : prevalences) {
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("prevalence sweep values must lie in (0, 1)");
        ScenarioConfig cfg = base;
        std::ostringstream name;
        name << base.name << "[" << label << "=" << p << "]";
        cfg.name = name.str();
        double assigned = 0.0;
        SubgroupSpec* last_other = nullptr;
        for (auto& g : cfg.subgroups) {
            if (g.label == label) {
                g.prevalence = p;
            } else {
                g.prevalence = rest > 0.0 ? g.prevalence / rest * (1.0 - p) : (1.0 - p);
                assigned += g.prevalence;
                last_other = &g;
            }
        }
        // Absorb rounding so the prevalences sum to exactly one.
        if (last_other) last_other->prevalence += (1.0 - p) - assigned;
        out.push_back(std::move(cfg));
    }
    return out;
}

} // namespace survquack
