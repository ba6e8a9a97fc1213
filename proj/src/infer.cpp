#include "survquack/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <omp.h>

#include "survquack/error.hpp"
#include "survquack/rng.hpp"

namespace survquack {

double normal_two_sided_p(double z)
{
    if (std::isnan(z)) return 1.0;
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

std::string_view to_string(Claim claim) noexcept
{
    switch (claim) {
    case Claim::NoClaim: return "NoClaim";
    case Claim::RxLongerMedian: return "RxLongerMedian";
    case Claim::CLongerMedian: return "CLongerMedian";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Log-rank

LogRankResult logrank_test(const SurvivalSample& sample)
{
    const std::size_t n_rx = sample.count(Arm::Rx);
    if (n_rx == 0 || n_rx == sample.size()) throw DegenerateSample("logrank_test: both arms must be present");

    std::vector<const Record*> sorted;
    sorted.reserve(sample.size());
    for (const auto& r : sample.records) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const Record* a, const Record* b) { return a->time < b->time; });

    double n = static_cast<double>(sample.size());
    double n1 = static_cast<double>(n_rx);
    double oe = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i]->time;
        double d = 0.0, d1 = 0.0, gone = 0.0, gone1 = 0.0;
        while (i < sorted.size() && sorted[i]->time == t) {
            const Record* r = sorted[i];
            const bool rx = r->arm == Arm::Rx;
            if (r->event) {
                d += 1.0;
                d1 += rx ? 1.0 : 0.0;
            }
            gone += 1.0;
            gone1 += rx ? 1.0 : 0.0;
            ++i;
        }
        if (d > 0.0) {
            const double frac = n1 / n;
            oe += d1 - d * frac;
            if (n > 1.0) var += d * frac * (1.0 - frac) * (n - d) / (n - 1.0);
        }
        n -= gone;
        n1 -= gone1;
    }
    LogRankResult res;
    res.observed_minus_expected = oe;
    res.variance = var;
    if (var > 0.0) {
        res.z = oe / std::sqrt(var);
        res.p_two_sided = normal_two_sided_p(res.z);
    } else {
        res.zero_variance = true;
        res.z = 0.0;
        res.p_two_sided = 1.0;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Wald

WaldResult wald_test_cox(const SurvivalSample& sample)
{
    const CoxFit fit = cox_fit_two_arm(sample);
    WaldResult w;
    w.estimate = fit.log_hr;
    w.se = fit.se;
    w.z = fit.log_hr / fit.se;
    w.p_two_sided = normal_two_sided_p(w.z);
    return w;
}

WaldResult wald_test_weibull(const WeibullFit& rx, const WeibullFit& c)
{
    WaldResult w;
    w.estimate = std::log(rx.dist.scale()) - std::log(c.dist.scale());
    w.se = std::sqrt(rx.cov[1][1] + c.cov[1][1]);
    if (!(w.se > 0.0)) throw NumericalError("wald_test_weibull: zero standard error");
    w.z = w.estimate / w.se;
    w.p_two_sided = normal_two_sided_p(w.z);
    return w;
}

// ---------------------------------------------------------------------------
// Decision procedure

Decision decision_procedure(const SurvivalSample& sample, double alpha)
{
    Decision dec;
    try {
        dec.logrank = logrank_test(sample);
    } catch (const DegenerateSample&) {
        dec.logrank = LogRankResult{};
        dec.logrank.zero_variance = true;
        return dec;
    }
    if (!(dec.logrank.p_two_sided < alpha)) return dec;

    dec.median_rx = km_median(km_fit(sample.times(Arm::Rx), sample.events(Arm::Rx)));
    dec.median_c = km_median(km_fit(sample.times(Arm::C), sample.events(Arm::C)));
    if (!dec.median_rx || !dec.median_c || *dec.median_rx == *dec.median_c) {
        dec.tie = true;
        return dec;
    }
    dec.claim = *dec.median_rx > *dec.median_c ? Claim::RxLongerMedian : Claim::CLongerMedian;
    return dec;
}

// ---------------------------------------------------------------------------
// Mann-Whitney pivot

std::vector<double> log_grid(double lo, double hi, std::size_t points)
{
    if (!(lo > 0.0) || !(hi >= lo) || points == 0) throw DomainError("log_grid: need 0 < lo <= hi and points >= 1");
    std::vector<double> g(points);
    if (points == 1) {
        g[0] = lo;
        return g;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<double> default_theta_grid() { return log_grid(1.0 / 50.0, 50.0, 200); }

namespace {

struct MwDraws {
    std::size_t n_rx;
    std::size_t n_c;
    // Sorted log control values and sorted log treated uniforms, per rep.
    std::vector<double> log_c;
    std::vector<double> log_w;
};

void fill_draws(MwDraws& d, std::size_t r, std::uint64_t seed)
{
    SplitMix64 rng = make_stream(seed, "mw-null", r);
    double* c = d.log_c.data() + r * d.n_c;
    double* w = d.log_w.data() + r * d.n_rx;
    for (std::size_t j = 0; j < d.n_c; ++j) c[j] = std::log(rng.uniform());
    for (std::size_t i = 0; i < d.n_rx; ++i) w[i] = std::log(rng.uniform());
    std::sort(c, c + d.n_c);
    std::sort(w, w + d.n_rx);
}

// Pairs with treated value W^(1/theta) below the control value, i.e.
// log(w)/theta < log(c), by merging two sorted sequences.
std::uint32_t count_pairs(const double* log_c, std::size_t n_c, const double* log_w, std::size_t n_rx,
                          double inv_theta)
{
    std::uint64_t pairs = 0;
    std::size_t i = 0;
    for (std::size_t j = 0; j < n_c; ++j) {
        while (i < n_rx && log_w[i] * inv_theta < log_c[j]) ++i;
        pairs += i;
    }
    return static_cast<std::uint32_t>(2 * pairs);
}

void fill_counts(const MwDraws& d, double theta, std::size_t reps, std::vector<std::uint32_t>& out)
{
    out.resize(reps);
    const double inv = 1.0 / theta;
    for (std::size_t r = 0; r < reps; ++r)
        out[r] = count_pairs(d.log_c.data() + r * d.n_c, d.n_c, d.log_w.data() + r * d.n_rx, d.n_rx, inv);
    std::sort(out.begin(), out.end());
}

MwNullTable make_table_shell(std::size_t n_rx, std::size_t n_c, std::vector<double>&& grid, std::size_t reps,
                             std::uint64_t seed, MwDraws& draws)
{
    if (n_rx == 0 || n_c == 0) throw DomainError("Mann-Whitney null table needs non-empty samples");
    if (reps == 0) throw DomainError("Mann-Whitney null table needs at least one replication");
    if (2.0 * static_cast<double>(n_rx) * static_cast<double>(n_c) >= 4294967295.0)
        throw DomainError("Mann-Whitney null table: samples too large for 32-bit counts");
    for (double th : grid)
        if (!(th > 0.0) || !std::isfinite(th)) throw DomainError("theta grid values must be positive");
    MwNullTable t;
    t.n_rx = n_rx;
    t.n_c = n_c;
    t.grid = std::move(grid);
    t.reps = reps;
    t.seed = seed;
    t.sorted_counts.resize(t.grid.size());
    draws.n_rx = n_rx;
    draws.n_c = n_c;
    draws.log_c.resize(reps * n_c);
    draws.log_w.resize(reps * n_rx);
    return t;
}

} // namespace

MwNullTable build_mw_null_table_serial(std::size_t n_rx, std::size_t n_c, std::vector<double> grid,
                                       std::size_t reps, std::uint64_t seed)
{
    MwDraws draws{};
    MwNullTable t = make_table_shell(n_rx, n_c, std::move(grid), reps, seed, draws);
    for (std::size_t r = 0; r < reps; ++r) fill_draws(draws, r, seed);
    for (std::size_t g = 0; g < t.grid.size(); ++g) fill_counts(draws, t.grid[g], reps, t.sorted_counts[g]);
    return t;
}

MwNullTable build_mw_null_table(std::size_t n_rx, std::size_t n_c, std::vector<double> grid, std::size_t reps,
                                std::uint64_t seed, int workers)
{
    MwDraws draws{};
    MwNullTable t = make_table_shell(n_rx, n_c, std::move(grid), reps, seed, draws);
    const int threads = workers > 0 ? workers : omp_get_max_threads();
    const auto nreps = static_cast<std::ptrdiff_t>(reps);
    const auto ngrid = static_cast<std::ptrdiff_t>(t.grid.size());

#pragma omp parallel num_threads(threads)
    {
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < nreps; ++r) fill_draws(draws, static_cast<std::size_t>(r), seed);

#pragma omp for schedule(dynamic, 1)
        for (std::ptrdiff_t g = 0; g < ngrid; ++g)
            fill_counts(draws, t.grid[static_cast<std::size_t>(g)], reps, t.sorted_counts[static_cast<std::size_t>(g)]);
    }
    return t;
}

std::uint64_t mw_doubled_count(std::span<const double> rx_times, std::span<const double> c_times)
{
    std::vector<double> c(c_times.begin(), c_times.end());
    std::sort(c.begin(), c.end());
    std::uint64_t total = 0;
    for (double t : rx_times) {
        const auto [lo, hi] = std::equal_range(c.begin(), c.end(), t);
        total += 2 * static_cast<std::uint64_t>(lo - c.begin()) + static_cast<std::uint64_t>(hi - lo);
    }
    return total;
}

TailProbabilities mw_tails(const MwNullTable& table, std::size_t grid_index, std::uint64_t doubled_obs)
{
    const auto& counts = table.sorted_counts.at(grid_index);
    const double reps = static_cast<double>(counts.size());
    // Compare in 64 bits; observed counts may exceed the stored range.
    const auto le = std::upper_bound(counts.begin(), counts.end(), doubled_obs,
                                     [](std::uint64_t v, std::uint32_t c) { return v < c; });
    const auto lt = std::lower_bound(counts.begin(), counts.end(), doubled_obs,
                                     [](std::uint32_t c, std::uint64_t v) { return c < v; });
    return {static_cast<double>(le - counts.begin()) / reps, static_cast<double>(counts.end() - lt) / reps};
}

bool mw_accepts(const TailProbabilities& tails, double level)
{
    const double half_alpha = 0.5 * (1.0 - level);
    return tails.lower > half_alpha && tails.upper > half_alpha;
}

ConfidenceSet pivot_from_table(const MwNullTable& table, std::uint64_t doubled_obs, double level)
{
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
    ConfidenceSet cs;
    cs.level = level;
    cs.llp_observed = static_cast<double>(doubled_obs) /
                      (2.0 * static_cast<double>(table.n_rx) * static_cast<double>(table.n_c));
    std::vector<std::size_t> idx;
    for (std::size_t g = 0; g < table.grid.size(); ++g)
        if (mw_accepts(mw_tails(table, g, doubled_obs), level)) {
            cs.accepted.push_back(table.grid[g]);
            idx.push_back(g);
        }
    if (cs.accepted.empty()) {
        cs.empty_acceptance = true;
        cs.lo = table.grid.empty() ? 0.0 : *std::min_element(table.grid.begin(), table.grid.end());
        cs.hi = table.grid.empty() ? 0.0 : *std::max_element(table.grid.begin(), table.grid.end());
        std::ostringstream os;
        os << "no grid value accepted (observed LLP " << cs.llp_observed << ", grid of " << table.grid.size()
           << " points); reporting the widest grid interval. Widen the grid or raise the replication count.";
        cs.diagnostics = os.str();
        return cs;
    }
    cs.lo = *std::min_element(cs.accepted.begin(), cs.accepted.end());
    cs.hi = *std::max_element(cs.accepted.begin(), cs.accepted.end());
    cs.nonconvex = idx.back() - idx.front() + 1 != idx.size();
    if (cs.nonconvex) cs.diagnostics = "accepted grid points are not contiguous; the reported hull over-covers";
    return cs;
}

ConfidenceSet mw_pivot_ci(std::span<const double> rx_times, std::span<const double> c_times, double level,
                          const std::vector<double>& grid, std::size_t mc_reps, std::uint64_t seed, int workers)
{
    if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must lie in (0, 1)");
    if (mc_reps < 2000) throw ValidationError("mw_pivot_ci: at least 2000 Monte Carlo replications are required");
    if (rx_times.empty() || c_times.empty()) throw ValidationError("mw_pivot_ci: both samples must be non-empty");
    if (grid.empty()) throw ValidationError("mw_pivot_ci: empty theta grid");
    const MwNullTable table = build_mw_null_table(rx_times.size(), c_times.size(), grid, mc_reps, seed, workers);
    return pivot_from_table(table, mw_doubled_count(rx_times, c_times), level);
}

} // namespace survquack
