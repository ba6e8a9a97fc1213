#include "survquack/sme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <omp.h>

#include "survquack/error.hpp"

namespace survquack {

double naive_stratified_ratio(std::span<const WeightedRatio> strata)
{
    if (strata.empty()) throw DomainError("naive_stratified_ratio: no strata");
    double wsum = 0.0;
    double acc = 0.0;
    for (const auto& s : strata) {
        if (!(s.ratio > 0.0) || !std::isfinite(s.ratio))
            throw DomainError("naive_stratified_ratio: ratios must be positive");
        if (!(s.weight >= 0.0)) throw DomainError("naive_stratified_ratio: weights must be nonnegative");
        wsum += s.weight;
        acc += s.weight * std::log(s.ratio);
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw DomainError("naive_stratified_ratio: weights must sum to 1");
    return std::exp(acc);
}

EfficacySummary sme_overall_rr(std::span<const ResponseRow> rows)
{
    if (rows.empty()) throw DomainError("sme_overall_rr: empty table");
    double psum = 0.0;
    double rx = 0.0;
    double c = 0.0;
    for (const auto& r : rows) {
        if (!(r.prevalence >= 0.0 && r.prevalence <= 1.0)) throw DomainError("prevalence must lie in [0, 1]");
        if (!(r.p_rx >= 0.0 && r.p_rx <= 1.0) || !(r.p_c >= 0.0 && r.p_c <= 1.0))
            throw DomainError("response probabilities must lie in [0, 1]");
        psum += r.prevalence;
        rx += r.prevalence * r.p_rx;
        c += r.prevalence * r.p_c;
    }
    if (std::abs(psum - 1.0) > 1e-12) throw DomainError("sme_overall_rr: prevalences must sum to 1");
    if (!(c > 0.0)) throw DomainError("sme_overall_rr: overall control response is zero");
    return EfficacySummary(Measure::RR, rx / c);
}

std::pair<CurvePtr, CurvePtr> mix_arms(std::span<const CurveRow> rows)
{
    if (rows.empty()) throw DomainError("empty subgroup table");
    std::vector<MixtureComponent> rx;
    std::vector<MixtureComponent> c;
    for (const auto& r : rows) {
        if (r.prevalence == 0.0) continue;
        rx.push_back({r.prevalence, r.rx});
        c.push_back({r.prevalence, r.c});
    }
    return {make_mixture(std::move(rx)), make_mixture(std::move(c))};
}

EfficacySummary sme_overall_tr(std::span<const CurveRow> rows)
{
    const auto [rx, c] = mix_arms(rows);
    return EfficacySummary(Measure::TR, quantile(*rx, 0.5) / quantile(*c, 0.5));
}

// ---------------------------------------------------------------------------
// LLP

namespace {

template <class F>
struct Simpson {
    const F& f;
    double tol;
    int max_depth;
    bool failed = false;

    double recurse(double a, double b, double fa, double fm, double fb, double whole, double eps, int depth)
    {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double diff = left + right - whole;
        if (std::abs(diff) <= 15.0 * eps) return left + right + diff / 15.0;
        if (depth >= max_depth) {
            failed = true;
            return left + right + diff / 15.0;
        }
        return recurse(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1) +
               recurse(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1);
    }

    double integrate(double a, double b, double eps)
    {
        const double fa = f(a);
        const double fb = f(b);
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        return recurse(a, b, fa, fm, fb, whole, eps, 0);
    }
};

LlpResult llp_step_control(const SurvivalCurve& rx, const SurvivalCurve& c)
{
    LlpResult res;
    double acc = 0.0;
    for (double t : c.jump_times()) {
        const double mass = c.survival_left(t) - c.survival(t);
        if (mass <= 0.0) continue;
        acc += mass * 0.5 * (rx.survival(t) + rx.survival_left(t));
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double c_rest = c.survival(inf);
    const double rx_rest = rx.survival(inf);
    if (c_rest > 0.0 || rx_rest > 0.0) res.truncated = true;
    acc += 0.5 * c_rest * rx_rest;
    res.llp = acc;
    return res;
}

} // namespace

LlpResult llp_between(const SurvivalCurve& rx, const SurvivalCurve& c, const QuadratureOptions& opts)
{
    if (c.is_step()) return llp_step_control(rx, c);

    // Integration window [t_lo, t_hi] holding all but tail_mass of the control law.
    const double half_tail = 0.5 * opts.tail_mass;
    double t_hi = std::max(c.scale_hint(), rx.scale_hint());
    for (int i = 0; c.survival(t_hi) > half_tail; ++i) {
        t_hi *= 2.0;
        if (i > 2000 || !std::isfinite(t_hi)) throw NumericalError("llp_between: control tail never vanishes");
    }
    double t_lo = std::min(c.scale_hint(), rx.scale_hint());
    for (int i = 0; 1.0 - c.survival(t_lo) > half_tail; ++i) {
        t_lo *= 0.5;
        if (i > 2000 || !(t_lo > 0.0)) throw NumericalError("llp_between: control mass near zero never vanishes");
    }

    const auto integrand = [&](double x) {
        const double t = std::exp(x);
        const double v = rx.survival(t) * c.density(t) * t;
        return std::isfinite(v) ? v : 0.0;
    };

    std::vector<double> breaks;
    const double a = std::log(t_lo);
    const double b = std::log(t_hi);
    const int panels = std::max(1, opts.initial_panels);
    for (int i = 0; i <= panels; ++i) breaks.push_back(a + (b - a) * i / panels);
    if (rx.is_step()) {
        for (double t : rx.jump_times())
            if (t > t_lo && t < t_hi) breaks.push_back(std::log(t));
        std::sort(breaks.begin(), breaks.end());
        breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    }

    Simpson<decltype(integrand)> simpson{integrand, opts.abs_tol, opts.max_depth};
    const double eps = opts.abs_tol / static_cast<double>(breaks.size() - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) acc += simpson.integrate(breaks[i], breaks[i + 1], eps);
    if (simpson.failed)
        throw NumericalError("llp_between: adaptive Simpson did not reach tolerance " + std::to_string(opts.abs_tol));

    LlpResult res;
    res.llp = acc;
    res.truncated = rx.is_step() && rx.survival(std::numeric_limits<double>::infinity()) > 0.0;
    return res;
}

EfficacySummary sme_overall_hr(std::span<const CurveRow> rows, const QuadratureOptions& opts)
{
    const auto [rx, c] = mix_arms(rows);
    const LlpResult llp = llp_between(*rx, *c, opts);
    return EfficacySummary(Measure::HR, hr_from_llp(llp.llp));
}

// ---------------------------------------------------------------------------
// Stratified audit

namespace {

struct LevelData {
    std::string label;
    double count = 0.0;
    double value = 1.0;
    CurvePtr rx;
    CurvePtr c;
};

bool has_events(const SurvivalSample& s, Arm arm)
{
    return std::any_of(s.records.begin(), s.records.end(), [arm](const Record& r) { return r.arm == arm && r.event; });
}

double tr_of(const SurvivalSample& s)
{
    return sample_tr(s.times(Arm::Rx), s.events(Arm::Rx), s.times(Arm::C), s.events(Arm::C)).value;
}

struct FactorOutcome {
    std::optional<StratifiedComparison> comparison;
    std::vector<std::string> warnings;
};

FactorOutcome audit_factor(const SurvivalSample& sample, const std::string& factor, Measure measure,
                           double marginal, std::optional<double> marginal_cox)
{
    FactorOutcome out;
    std::vector<LevelData> kept;
    for (const auto& level : sample.levels(factor)) {
        const SurvivalSample sub = sample.subset(factor, level);
        if (!has_events(sub, Arm::Rx) || !has_events(sub, Arm::C)) {
            out.warnings.push_back("factor '" + factor + "': level '" + level +
                                   "' dropped (needs an event in each arm)");
            continue;
        }
        LevelData d;
        d.label = level;
        d.count = static_cast<double>(sub.size());
        try {
            d.value = measure == Measure::HR ? std::exp(cox_fit_two_arm(sub).log_hr) : tr_of(sub);
        } catch (const Error& e) {
            out.warnings.push_back("factor '" + factor + "': level '" + level + "' dropped (" + e.what() + ")");
            continue;
        }
        d.rx = km_fit(sub.times(Arm::Rx), sub.events(Arm::Rx)).curve();
        d.c = km_fit(sub.times(Arm::C), sub.events(Arm::C)).curve();
        kept.push_back(std::move(d));
    }
    if (kept.empty()) {
        out.warnings.push_back("factor '" + factor + "': no usable levels, factor skipped");
        return out;
    }

    double total = 0.0;
    for (const auto& d : kept) total += d.count;

    StratifiedComparison cmp;
    cmp.factor = factor;
    cmp.measure = measure;
    std::vector<WeightedRatio> pooled;
    std::vector<CurveRow> rows;
    for (const auto& d : kept) {
        const double prev = d.count / total;
        cmp.levels.push_back(d.label);
        cmp.prevalences.push_back(prev);
        cmp.level_values.push_back(d.value);
        pooled.push_back({d.value, prev});
        rows.push_back({d.label, prev, d.rx, d.c});
    }
    // Renormalize so the mixture check sees an exact unit sum.
    double psum = 0.0;
    for (const auto& r : rows) psum += r.prevalence;
    for (auto& r : rows) r.prevalence /= psum;
    for (auto& p : pooled) p.weight /= psum;

    try {
        cmp.naive_value = naive_stratified_ratio(pooled);
        cmp.sme_value = measure == Measure::HR ? sme_overall_hr(rows).value : sme_overall_tr(rows).value;
    } catch (const Error& e) {
        out.warnings.push_back("factor '" + factor + "': " + e.what());
        return out;
    }
    cmp.marginal_value = marginal;
    cmp.marginal_cox = marginal_cox;
    out.comparison = std::move(cmp);
    return out;
}

} // namespace

AuditResult stratified_audit(const SurvivalSample& sample, std::span<const std::string> factors, Measure measure,
                             int workers)
{
    if (measure != Measure::HR && measure != Measure::TR)
        throw DomainError("stratified_audit supports HR and TR only");
    for (const auto& f : factors) (void)sample.factor_index(f);

    double marginal = 1.0;
    std::optional<double> marginal_cox;
    const CurveRow whole{"all", 1.0, km_fit(sample.times(Arm::Rx), sample.events(Arm::Rx)).curve(),
                         km_fit(sample.times(Arm::C), sample.events(Arm::C)).curve()};
    if (measure == Measure::HR) {
        marginal = sme_overall_hr(std::span<const CurveRow>(&whole, 1)).value;
        marginal_cox = std::exp(cox_fit_two_arm(sample).log_hr);
    } else {
        marginal = tr_of(sample);
    }

    std::vector<FactorOutcome> outcomes(factors.size());
    const auto nf = static_cast<std::ptrdiff_t>(factors.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, workers))
    for (std::ptrdiff_t i = 0; i < nf; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            outcomes[k] = audit_factor(sample, factors[k], measure, marginal, marginal_cox);
        } catch (const std::exception& e) {
            outcomes[k].warnings.push_back("factor '" + factors[k] + "': " + e.what());
        }
    }

    AuditResult result;
    for (auto& o : outcomes) {
        if (o.comparison) result.comparisons.push_back(std::move(*o.comparison));
        for (auto& w : o.warnings) result.warnings.push_back(std::move(w));
    }
    return result;
}

} // namespace survquack
