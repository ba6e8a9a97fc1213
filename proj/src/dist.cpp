#include "survquack/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "survquack/error.hpp"

namespace survquack {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

} // namespace

double SurvivalCurve::density(double) const
{
    throw DomainError("density is undefined for a step survival curve");
}

// ---------------------------------------------------------------------------
// WeibullDist

WeibullDist::WeibullDist(double shape, double scale) : shape_(shape), scale_(scale)
{
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale))
        throw DomainError("Weibull shape and scale must be positive and finite");
}

double WeibullDist::survival(double t) const
{
    if (t <= 0.0) return 1.0;
    return std::exp(-std::pow(t / scale_, shape_));
}

double WeibullDist::density(double t) const
{
    if (t <= 0.0) {
        if (shape_ < 1.0) return std::numeric_limits<double>::infinity();
        return shape_ == 1.0 ? 1.0 / scale_ : 0.0;
    }
    const double z = std::pow(t / scale_, shape_);
    return shape_ / t * z * std::exp(-z);
}

double WeibullDist::hazard(double t) const
{
    if (t <= 0.0) return shape_ == 1.0 ? 1.0 / scale_ : (shape_ < 1.0 ? std::numeric_limits<double>::infinity() : 0.0);
    return shape_ / scale_ * std::pow(t / scale_, shape_ - 1.0);
}

double WeibullDist::median() const { return scale_ * std::pow(kLn2, 1.0 / shape_); }

double WeibullDist::sample(SplitMix64& rng) const
{
    return scale_ * std::pow(-std::log(rng.uniform()), 1.0 / shape_);
}

// ---------------------------------------------------------------------------
// StepCurve

StepCurve::StepCurve(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values))
{
    if (times_.size() != values_.size())
        throw DomainError("step curve times and values differ in length");
    double prev_t = 0.0;
    double prev_v = 1.0;
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!(times_[i] > prev_t) && !(i == 0 && times_[i] >= 0.0))
            throw DomainError("step curve times must be nonnegative and strictly increasing");
        if (values_[i] > prev_v || values_[i] < 0.0)
            throw DomainError("step curve values must be nonincreasing within [0, 1]");
        prev_t = times_[i];
        prev_v = values_[i];
    }
}

double StepCurve::survival(double t) const
{
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepCurve::survival_left(double t) const
{
    const auto it = std::lower_bound(times_.begin(), times_.end(), t);
    if (it == times_.begin()) return 1.0;
    return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepCurve::scale_hint() const { return times_.empty() ? 1.0 : times_.back(); }

bool StepCurve::terminates_above_zero() const noexcept
{
    return values_.empty() || values_.back() > 0.0;
}

// ---------------------------------------------------------------------------
// LehmannCurve

LehmannCurve::LehmannCurve(CurvePtr reference, double hr) : reference_(std::move(reference)), hr_(hr)
{
    if (!reference_) throw DomainError("Lehmann transform needs a reference curve");
    if (!(hr > 0.0) || !std::isfinite(hr)) throw DomainError("hazard ratio must be positive");
}

double LehmannCurve::survival(double t) const { return std::pow(reference_->survival(t), hr_); }

double LehmannCurve::survival_left(double t) const
{
    return std::pow(reference_->survival_left(t), hr_);
}

double LehmannCurve::density(double t) const
{
    const double s = reference_->survival(t);
    if (s <= 0.0) return 0.0;
    return hr_ * std::pow(s, hr_ - 1.0) * reference_->density(t);
}

// ---------------------------------------------------------------------------
// MixtureCurve

MixtureCurve::MixtureCurve(std::vector<MixtureComponent> components) : components_(std::move(components))
{
    if (components_.empty()) throw DomainError("mixture needs at least one component");
    double total = 0.0;
    std::size_t steps = 0;
    for (const auto& c : components_) {
        if (!c.curve) throw DomainError("mixture component without a curve");
        if (!(c.prevalence > 0.0) || c.prevalence > 1.0)
            throw DomainError("mixture prevalence must lie in (0, 1]");
        total += c.prevalence;
        steps += c.curve->is_step() ? 1 : 0;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw DomainError("mixture prevalences sum to " + std::to_string(total) + ", not 1");
    if (steps != 0 && steps != components_.size())
        throw DomainError("cannot mix step and continuous curves");
    step_ = steps != 0;
}

double MixtureCurve::survival(double t) const
{
    double s = 0.0;
    for (const auto& c : components_) s += c.prevalence * c.curve->survival(t);
    return s;
}

double MixtureCurve::survival_left(double t) const
{
    double s = 0.0;
    for (const auto& c : components_) s += c.prevalence * c.curve->survival_left(t);
    return s;
}

double MixtureCurve::density(double t) const
{
    double f = 0.0;
    for (const auto& c : components_) f += c.prevalence * c.curve->density(t);
    return f;
}

std::vector<double> MixtureCurve::jump_times() const
{
    std::vector<double> all;
    for (const auto& c : components_) {
        auto j = c.curve->jump_times();
        all.insert(all.end(), j.begin(), j.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

double MixtureCurve::scale_hint() const
{
    double h = 0.0;
    for (const auto& c : components_) h = std::max(h, c.curve->scale_hint());
    return h > 0.0 ? h : 1.0;
}

// ---------------------------------------------------------------------------
// Free functions

CurvePtr make_curve(const WeibullDist& dist) { return std::make_shared<WeibullCurve>(dist); }

CurvePtr make_mixture(std::vector<MixtureComponent> components)
{
    return std::make_shared<MixtureCurve>(std::move(components));
}

double survival_at(const SurvivalCurve& curve, double t)
{
    if (!(t >= 0.0)) throw DomainError("survival_at: time must be nonnegative");
    return curve.survival(t);
}

double quantile(const SurvivalCurve& curve, double p)
{
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: probability must lie in (0, 1)");

    if (curve.is_step()) {
        for (double t : curve.jump_times())
            if (curve.survival(t) <= p) return t;
        throw NotReached("step curve never falls to " + std::to_string(p));
    }

    double lo = 0.0;
    double hi = curve.scale_hint();
    int grow = 0;
    while (curve.survival(hi) > p) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 1100 || !std::isfinite(hi))
            throw NotReached("curve never falls to " + std::to_string(p));
    }
    // Invariant: S(lo) > p >= S(hi).
    for (int iter = 0; iter < 400; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= 1e-12 * std::max(1.0, hi) || mid == lo || mid == hi) break;
        if (curve.survival(mid) > p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

WeibullDist weibull_from_median(double shape, double median)
{
    if (!(shape > 0.0) || !(median > 0.0))
        throw DomainError("weibull_from_median: shape and median must be positive");
    return WeibullDist(shape, median / std::pow(kLn2, 1.0 / shape));
}

double solve_scale_for_mixture_median(double shape, double overall_median, double prevalence,
                                      std::span<const MixtureComponent> others)
{
    if (!(shape > 0.0) || !(overall_median > 0.0))
        throw DomainError("shape and overall median must be positive");
    if (!(prevalence > 0.0 && prevalence < 1.0))
        throw DomainError("solved subgroup prevalence must lie in (0, 1)");
    double others_mass = 0.0;
    double total = prevalence;
    for (const auto& c : others) {
        others_mass += c.prevalence * c.curve->survival(overall_median);
        total += c.prevalence;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("prevalences do not sum to 1");
    const double target = (0.5 - others_mass) / prevalence;
    if (!(target > 0.0 && target < 1.0))
        throw InfeasibleScenario("required subgroup survival " + std::to_string(target) +
                                 " at the overall median is outside (0, 1)");
    return overall_median / std::pow(-std::log(target), 1.0 / shape);
}

double solve_complement_scale(double shape_minus, double overall_median, double prevalence_plus,
                              const SurvivalCurve& plus_curve)
{
    if (!(prevalence_plus > 0.0 && prevalence_plus < 1.0))
        throw DomainError("prevalence_plus must lie in (0, 1)");
    // Non-owning handle; the component only lives for this call.
    const MixtureComponent plus{prevalence_plus, CurvePtr(CurvePtr{}, &plus_curve)};
    return solve_scale_for_mixture_median(shape_minus, overall_median, 1.0 - prevalence_plus,
                                          std::span<const MixtureComponent>(&plus, 1));
}

CurvePtr lehmann_transform(CurvePtr reference, double hr)
{
    return std::make_shared<LehmannCurve>(std::move(reference), hr);
}

std::vector<double> sample_times(const WeibullDist& dist, SplitMix64& rng, std::size_t n)
{
    std::vector<double> out(n);
    for (auto& t : out) t = dist.sample(rng);
    return out;
}

} // namespace survquack
