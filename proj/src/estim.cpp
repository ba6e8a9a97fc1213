#include "survquack/estim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survquack/error.hpp"

namespace survquack {

std::string_view to_string(Arm arm) noexcept { return arm == Arm::Rx ? "Rx" : "C"; }

std::string_view to_string(Measure m) noexcept
{
    switch (m) {
    case Measure::RR: return "RR";
    case Measure::TR: return "TR";
    case Measure::HR: return "HR";
    case Measure::LLP: return "LLP";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// SurvivalSample

std::size_t SurvivalSample::count(Arm arm) const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [arm](const Record& r) { return r.arm == arm; }));
}

std::size_t SurvivalSample::censored() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const Record& r) { return !r.event; }));
}

std::vector<double> SurvivalSample::times(Arm arm) const
{
    std::vector<double> out;
    for (const auto& r : records)
        if (r.arm == arm) out.push_back(r.time);
    return out;
}

std::vector<bool> SurvivalSample::events(Arm arm) const
{
    std::vector<bool> out;
    for (const auto& r : records)
        if (r.arm == arm) out.push_back(r.event);
    return out;
}

std::size_t SurvivalSample::factor_index(std::string_view factor) const
{
    const auto it = std::find(factors.begin(), factors.end(), factor);
    if (it == factors.end()) throw ValidationError("unknown stratification factor '" + std::string(factor) + "'");
    return static_cast<std::size_t>(it - factors.begin());
}

std::vector<std::string> SurvivalSample::levels(std::string_view factor) const
{
    const std::size_t k = factor_index(factor);
    std::vector<std::string> out;
    for (const auto& r : records)
        if (std::find(out.begin(), out.end(), r.levels[k]) == out.end()) out.push_back(r.levels[k]);
    return out;
}

SurvivalSample SurvivalSample::subset(std::string_view factor, std::string_view level) const
{
    const std::size_t k = factor_index(factor);
    SurvivalSample out;
    out.factors = factors;
    for (const auto& r : records)
        if (r.levels[k] == level) out.records.push_back(r);
    return out;
}

SurvivalSample SurvivalSample::swapped_arms() const
{
    SurvivalSample out = *this;
    for (auto& r : out.records) r.arm = r.arm == Arm::Rx ? Arm::C : Arm::Rx;
    return out;
}

void SurvivalSample::validate() const
{
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!(r.time > 0.0) || !std::isfinite(r.time))
            throw ValidationError("record " + std::to_string(i) + ": time must be positive and finite");
        if (r.levels.size() != factors.size())
            throw ValidationError("record " + std::to_string(i) + ": strata do not match the factor list");
    }
}

// ---------------------------------------------------------------------------
// Kaplan-Meier

KMCurve::KMCurve(std::vector<KMStep> steps) : steps_(std::move(steps)) {}

double KMCurve::survival(double t) const
{
    const auto it = std::upper_bound(steps_.begin(), steps_.end(), t,
                                     [](double v, const KMStep& s) { return v < s.time; });
    if (it == steps_.begin()) return 1.0;
    return std::prev(it)->survival;
}

bool KMCurve::terminates_above_zero() const noexcept
{
    return steps_.empty() || steps_.back().survival > 0.0;
}

CurvePtr KMCurve::curve() const
{
    std::vector<double> t;
    std::vector<double> s;
    t.reserve(steps_.size());
    s.reserve(steps_.size());
    for (const auto& step : steps_) {
        t.push_back(step.time);
        s.push_back(step.survival);
    }
    return std::make_shared<StepCurve>(std::move(t), std::move(s));
}

KMCurve km_fit(std::span<const double> times, const std::vector<bool>& events)
{
    if (times.empty()) throw DomainError("km_fit: empty sample");
    if (times.size() != events.size()) throw DomainError("km_fit: times and events differ in length");
    for (double t : times)
        if (!(t > 0.0)) throw DomainError("km_fit: times must be positive");

    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    // Between censorings the factors (n - d) / n telescope, so the estimate is
    // kept as base * (at risk now) / (at risk when the run began). Uncensored
    // data then reduce to one division, identical to the empirical survival.
    std::vector<KMStep> steps;
    std::size_t at_risk = times.size();
    std::size_t run_start = at_risk;
    double base = 1.0;
    for (std::size_t i = 0; i < order.size();) {
        const double t = times[order[i]];
        std::size_t d = 0;
        std::size_t all = 0;
        while (i < order.size() && times[order[i]] == t) {
            d += events[order[i]] ? 1 : 0;
            ++all;
            ++i;
        }
        if (d > 0) {
            const double s = base * static_cast<double>(at_risk - d) / static_cast<double>(run_start);
            steps.push_back({t, at_risk, d, s});
        }
        if (all > d) {
            if (d > 0) base = steps.back().survival;
            else base *= static_cast<double>(at_risk) / static_cast<double>(run_start);
            run_start = at_risk - all;
        }
        at_risk -= all;
    }
    return KMCurve(std::move(steps));
}

std::optional<double> km_median(const KMCurve& curve)
{
    for (const auto& step : curve.steps())
        if (step.survival <= 0.5) return step.time;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Weibull MLE

namespace {

struct WeibullDerivs {
    double loglik;
    std::array<double, 2> grad;
    std::array<std::array<double, 2>, 2> hess;
};

// loglik = sum_i d_i (a + z_i - log t_i) - exp(z_i), z_i = e^a (log t_i - b),
// a = log shape, b = log scale.
WeibullDerivs weibull_derivs(std::span<const double> times, const std::vector<bool>& events,
                             double a, double b)
{
    const double k = std::exp(a);
    double ll = 0.0;
    double d = 0.0;
    double sum_dz = 0.0;
    double sum_ez = 0.0;
    double sum_ezz = 0.0;
    double sum_ezzz = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double lt = std::log(times[i]);
        const double z = k * (lt - b);
        const double ez = std::exp(z);
        if (events[i]) {
            ll += a + z - lt;
            d += 1.0;
            sum_dz += z;
        }
        ll -= ez;
        sum_ez += ez;
        sum_ezz += ez * z;
        sum_ezzz += ez * z * z;
    }
    WeibullDerivs out;
    out.loglik = ll;
    out.grad = {d + sum_dz - sum_ezz, k * (sum_ez - d)};
    out.hess[0][0] = sum_dz - sum_ezzz - sum_ezz;
    out.hess[0][1] = out.hess[1][0] = -k * d + k * (sum_ezz + sum_ez);
    out.hess[1][1] = -k * k * sum_ez;
    return out;
}

} // namespace

double WeibullFit::se_log_scale() const { return std::sqrt(cov[1][1]); }

double weibull_loglik(std::span<const double> times, const std::vector<bool>& events, double log_shape,
                      double log_scale)
{
    return weibull_derivs(times, events, log_shape, log_scale).loglik;
}

std::array<double, 2> weibull_gradient(std::span<const double> times, const std::vector<bool>& events,
                                       double log_shape, double log_scale)
{
    return weibull_derivs(times, events, log_shape, log_scale).grad;
}

WeibullFit weibull_mle(std::span<const double> times, const std::vector<bool>& events)
{
    if (times.size() != events.size()) throw DomainError("weibull_mle: times and events differ in length");
    double tmin_event = INFINITY;
    double tmax_event = -INFINITY;
    std::size_t d = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw DomainError("weibull_mle: times must be positive");
        if (events[i]) {
            ++d;
            tmin_event = std::min(tmin_event, times[i]);
            tmax_event = std::max(tmax_event, times[i]);
        }
    }
    if (d < 2) throw DegenerateSample("weibull_mle: at least 2 events are required");
    if (tmin_event == tmax_event) throw DegenerateSample("weibull_mle: event times have no spread");

    // Start: least squares of log(-log S_KM) on log t.
    double a = 0.0;
    double b = 0.0;
    {
        const KMCurve km = km_fit(times, events);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t m = 0;
        for (const auto& step : km.steps()) {
            if (step.survival <= 0.0 || step.survival >= 1.0) continue;
            const double x = std::log(step.time);
            const double y = std::log(-std::log(step.survival));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++m;
        }
        const double denom = static_cast<double>(m) * sxx - sx * sx;
        double slope = 0.0;
        if (m >= 2 && denom > 0.0) slope = (static_cast<double>(m) * sxy - sx * sy) / denom;
        if (slope > 0.0 && std::isfinite(slope)) {
            const double intercept = (sy - slope * sx) / static_cast<double>(m);
            a = std::log(slope);
            b = -intercept / slope;
        } else {
            double total = 0.0;
            for (double t : times) total += t;
            a = 0.0;
            b = std::log(total / static_cast<double>(d));
        }
    }

    WeibullDerivs cur = weibull_derivs(times, events, a, b);
    int iter = 0;
    for (; iter < 100; ++iter) {
        const double gnorm = std::hypot(cur.grad[0], cur.grad[1]);
        if (gnorm <= 1e-8) break;

        const auto& h = cur.hess;
        const double det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        std::array<double, 2> step;
        if (h[0][0] < 0.0 && det > 0.0) {
            // Newton: solve H step = -g.
            step[0] = (-cur.grad[0] * h[1][1] + cur.grad[1] * h[0][1]) / det;
            step[1] = (-cur.grad[1] * h[0][0] + cur.grad[0] * h[1][0]) / det;
        } else {
            const double scale = 1.0 / (1.0 + gnorm);
            step = {cur.grad[0] * scale, cur.grad[1] * scale};
        }

        double frac = 1.0;
        WeibullDerivs next{};
        bool accepted = false;
        for (int half = 0; half < 60; ++half, frac *= 0.5) {
            const double na = a + frac * step[0];
            const double nb = b + frac * step[1];
            if (std::abs(na) > 20.0 || std::abs(nb) > 700.0) continue;
            next = weibull_derivs(times, events, na, nb);
            if (std::isfinite(next.loglik) && next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) {
                a = na;
                b = nb;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        cur = next;
    }

    const double gnorm = std::hypot(cur.grad[0], cur.grad[1]);
    if (!(gnorm <= 1e-8))
        throw NumericalError("weibull_mle did not converge: |gradient| = " + std::to_string(gnorm) +
                             " after " + std::to_string(iter) + " iterations at shape " +
                             std::to_string(std::exp(a)) + ", scale " + std::to_string(std::exp(b)));

    const auto& h = cur.hess;
    const double det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if (!(det > 0.0) || !(h[0][0] < 0.0))
        throw NumericalError("weibull_mle: information matrix is not positive definite");

    WeibullFit fit;
    fit.dist = WeibullDist(std::exp(a), std::exp(b));
    // cov = (-H)^-1
    fit.cov[0][0] = -h[1][1] / det;
    fit.cov[1][1] = -h[0][0] / det;
    fit.cov[0][1] = fit.cov[1][0] = h[0][1] / det;
    fit.loglik = cur.loglik;
    fit.grad_norm = gnorm;
    fit.iterations = iter;
    return fit;
}

WeibullDist weibull_mle_fixed_shape(std::span<const double> times, const std::vector<bool>& events,
                                    double shape)
{
    if (!(shape > 0.0)) throw DomainError("weibull_mle_fixed_shape: shape must be positive");
    if (times.size() != events.size()) throw DomainError("weibull_mle_fixed_shape: length mismatch");
    double sum = 0.0;
    std::size_t d = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0)) throw DomainError("weibull_mle_fixed_shape: times must be positive");
        sum += std::pow(times[i], shape);
        d += events[i] ? 1 : 0;
    }
    if (d == 0) throw DegenerateSample("weibull_mle_fixed_shape: no events");
    return WeibullDist(shape, std::pow(sum / static_cast<double>(d), 1.0 / shape));
}

// ---------------------------------------------------------------------------
// Efficacy measures

EfficacySummary::EfficacySummary(Measure m, double v, std::optional<double> se)
    : measure(m), value(v), log_se(se)
{
    if (!std::isfinite(v)) throw DomainError("efficacy value must be finite");
    if (m == Measure::LLP ? !(v > 0.0 && v < 1.0) : !(v > 0.0))
        throw DomainError(std::string(to_string(m)) + " value out of range: " + std::to_string(v));
    if (se && !(*se >= 0.0)) throw DomainError("standard error must be nonnegative");
}

double empirical_llp(std::span<const double> rx_times, std::span<const double> c_times)
{
    if (rx_times.empty() || c_times.empty()) throw DomainError("empirical_llp: both samples must be non-empty");
    std::vector<double> c(c_times.begin(), c_times.end());
    std::sort(c.begin(), c.end());
    double wins = 0.0;
    for (double t : rx_times) {
        const auto [lo, hi] = std::equal_range(c.begin(), c.end(), t);
        wins += static_cast<double>(lo - c.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return wins / (static_cast<double>(rx_times.size()) * static_cast<double>(c.size()));
}

double empirical_llp(const SurvivalSample& sample)
{
    if (const std::size_t n = sample.censored(); n > 0)
        throw UnsupportedCensoring("empirical_llp requires uncensored data; " + std::to_string(n) +
                                       " censored records",
                                   n);
    return empirical_llp(sample.times(Arm::Rx), sample.times(Arm::C));
}

double hr_from_llp(double llp)
{
    if (!(llp > 0.0 && llp < 1.0)) throw DomainError("hr_from_llp: LLP must lie in (0, 1)");
    return (1.0 - llp) / llp;
}

double llp_from_hr(double hr)
{
    if (!(hr > 0.0) || !std::isfinite(hr)) throw DomainError("llp_from_hr: HR must be positive and finite");
    return 1.0 / (1.0 + hr);
}

double tr_to_hr(double tr, double shape)
{
    if (!(tr > 0.0) || !(shape > 0.0)) throw DomainError("tr_to_hr: inputs must be positive");
    return std::pow(tr, -shape);
}

double hr_to_tr(double hr, double shape)
{
    if (!(hr > 0.0) || !(shape > 0.0)) throw DomainError("hr_to_tr: inputs must be positive");
    return std::pow(hr, -1.0 / shape);
}

// ---------------------------------------------------------------------------
// Cox

namespace {

struct RiskTerm {
    double n0; // control at risk
    double n1; // Rx at risk
    double d;  // events
    double d1; // Rx events
};

void append_risk_terms(const std::vector<const Record*>& recs, std::vector<RiskTerm>& out)
{
    std::vector<const Record*> sorted = recs;
    std::sort(sorted.begin(), sorted.end(), [](const Record* a, const Record* b) { return a->time < b->time; });
    double n0 = 0.0;
    double n1 = 0.0;
    for (const Record* r : sorted) (r->arm == Arm::Rx ? n1 : n0) += 1.0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i]->time;
        double d = 0.0, d1 = 0.0, gone0 = 0.0, gone1 = 0.0;
        while (i < sorted.size() && sorted[i]->time == t) {
            const Record* r = sorted[i];
            if (r->event) {
                d += 1.0;
                if (r->arm == Arm::Rx) d1 += 1.0;
            }
            (r->arm == Arm::Rx ? gone1 : gone0) += 1.0;
            ++i;
        }
        if (d > 0.0) out.push_back({n0, n1, d, d1});
        n0 -= gone0;
        n1 -= gone1;
    }
}

struct CoxEval {
    double loglik = 0.0;
    double score = 0.0;
    double info = 0.0;
};

CoxEval cox_eval(const std::vector<RiskTerm>& terms, double beta)
{
    CoxEval e;
    const double eb = std::exp(beta);
    for (const auto& t : terms) {
        const double denom = t.n0 + t.n1 * eb;
        const double p = t.n1 * eb / denom;
        e.loglik += t.d1 * beta - t.d * std::log(denom);
        e.score += t.d1 - t.d * p;
        e.info += t.d * p * (1.0 - p);
    }
    return e;
}

} // namespace

CoxFit cox_fit_two_arm(const SurvivalSample& sample, const std::optional<std::string>& strata_factor)
{
    if (sample.count(Arm::Rx) == 0 || sample.count(Arm::C) == 0)
        throw DegenerateSample("cox_fit_two_arm: both arms must be present");

    std::vector<RiskTerm> terms;
    std::size_t strata = 1;
    if (strata_factor) {
        const std::size_t k = sample.factor_index(*strata_factor);
        const auto levels = sample.levels(*strata_factor);
        strata = levels.size();
        for (const auto& level : levels) {
            std::vector<const Record*> recs;
            for (const auto& r : sample.records)
                if (r.levels[k] == level) recs.push_back(&r);
            append_risk_terms(recs, terms);
        }
    } else {
        std::vector<const Record*> recs;
        recs.reserve(sample.records.size());
        for (const auto& r : sample.records) recs.push_back(&r);
        append_risk_terms(recs, terms);
    }
    if (terms.empty()) throw DegenerateSample("cox_fit_two_arm: no events");

    // The score is decreasing in beta; a finite root needs its limits at
    // -inf and +inf to straddle zero.
    double score_lo = 0.0, score_hi = 0.0;
    for (const auto& t : terms) {
        score_lo += t.d1 - (t.n0 == 0.0 ? t.d : 0.0);
        score_hi += t.d1 - (t.n1 > 0.0 ? t.d : 0.0);
    }
    if (!(score_lo > 1e-12) || !(score_hi < -1e-12))
        throw NumericalError("cox_fit_two_arm: partial likelihood is monotone (log HR estimate is infinite)");

    double beta = 0.0;
    CoxEval cur = cox_eval(terms, beta);
    int iter = 0;
    for (; iter < 100 && std::abs(cur.score) > 1e-10; ++iter) {
        if (!(cur.info > 1e-300)) break;
        double step = cur.score / cur.info;
        step = std::clamp(step, -5.0, 5.0);
        CoxEval next{};
        double nb = beta;
        for (int half = 0; half < 60; ++half, step *= 0.5) {
            nb = beta + step;
            next = cox_eval(terms, nb);
            if (next.loglik >= cur.loglik - 1e-12 * std::abs(cur.loglik)) break;
        }
        beta = nb;
        cur = next;
        if (std::abs(beta) > 30.0) break;
    }
    if (std::abs(beta) > 30.0 || !(cur.info > 1e-12) || std::abs(cur.score) > 1e-10)
        throw NumericalError("cox_fit_two_arm: partial likelihood is monotone or Newton failed (beta = " +
                             std::to_string(beta) + ", score = " + std::to_string(cur.score) + ")");

    CoxFit fit;
    fit.log_hr = beta;
    fit.se = 1.0 / std::sqrt(cur.info);
    fit.loglik = cur.loglik;
    fit.iterations = iter;
    fit.strata = strata;
    return fit;
}

EfficacySummary sample_tr(std::span<const double> rx_times, const std::vector<bool>& rx_events,
                          std::span<const double> c_times, const std::vector<bool>& c_events)
{
    const auto mrx = km_median(km_fit(rx_times, rx_events));
    if (!mrx) throw NotReached("Rx arm: Kaplan-Meier median not reached");
    const auto mc = km_median(km_fit(c_times, c_events));
    if (!mc) throw NotReached("C arm: Kaplan-Meier median not reached");
    return EfficacySummary(Measure::TR, *mrx / *mc);
}

} // namespace survquack
