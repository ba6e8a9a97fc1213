#pragma once

// Parametric survival laws, step-function curves, Lehmann transforms and
// prevalence-weighted mixtures. All curve objects are immutable once built and
// are shared through CurvePtr, so evaluation is safe from any thread.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "survquack/rng.hpp"

namespace survquack {

class SurvivalCurve {
public:
    virtual ~SurvivalCurve() = default;

    /// Right-continuous S(t) for t >= 0.
    virtual double survival(double t) const = 0;

    /// S(t-). Equal to survival(t) for continuous curves.
    virtual double survival_left(double t) const { return survival(t); }

    /// -dS/dt. Step curves have no density and throw DomainError.
    virtual double density(double t) const;

    virtual bool is_step() const { return false; }

    /// Sorted jump locations of a step curve; empty for continuous curves.
    virtual std::vector<double> jump_times() const { return {}; }

    /// A time of the order of the curve's bulk, used to seed bracket searches.
    virtual double scale_hint() const { return 1.0; }
};

using CurvePtr = std::shared_ptr<const SurvivalCurve>;

class WeibullDist {
public:
    /// Throws DomainError unless shape > 0 and scale > 0.
    WeibullDist(double shape, double scale);

    double shape() const noexcept { return shape_; }
    double scale() const noexcept { return scale_; }

    double survival(double t) const;
    double density(double t) const;
    double hazard(double t) const;
    double median() const;

    /// Inverse-CDF draw consuming exactly one uniform.
    double sample(SplitMix64& rng) const;

    friend bool operator==(const WeibullDist&, const WeibullDist&) = default;

private:
    double shape_;
    double scale_;
};

class WeibullCurve final : public SurvivalCurve {
public:
    explicit WeibullCurve(WeibullDist dist) : dist_(dist) {}
    double survival(double t) const override { return dist_.survival(t); }
    double density(double t) const override { return dist_.density(t); }
    double scale_hint() const override { return dist_.scale(); }
    const WeibullDist& dist() const noexcept { return dist_; }

private:
    WeibullDist dist_;
};

/// Right-continuous step function: value values[i] on [times[i], times[i+1]),
/// 1 before times[0]. Times strictly increasing, values nonincreasing in [0,1].
class StepCurve final : public SurvivalCurve {
public:
    StepCurve(std::vector<double> times, std::vector<double> values);

    double survival(double t) const override;
    double survival_left(double t) const override;
    bool is_step() const override { return true; }
    std::vector<double> jump_times() const override { return times_; }
    double scale_hint() const override;

    /// True when the last value is above zero (estimate ended by censoring).
    bool terminates_above_zero() const noexcept;

private:
    std::vector<double> times_;
    std::vector<double> values_;
};

/// The reference curve raised pointwise to the exponent `hr`.
class LehmannCurve final : public SurvivalCurve {
public:
    LehmannCurve(CurvePtr reference, double hr);

    double survival(double t) const override;
    double survival_left(double t) const override;
    double density(double t) const override;
    bool is_step() const override { return reference_->is_step(); }
    std::vector<double> jump_times() const override { return reference_->jump_times(); }
    double scale_hint() const override { return reference_->scale_hint(); }

    double hr() const noexcept { return hr_; }
    const CurvePtr& reference() const noexcept { return reference_; }

private:
    CurvePtr reference_;
    double hr_;
};

struct MixtureComponent {
    double prevalence;
    CurvePtr curve;
};

/// S(t) = sum_g prevalence_g * S_g(t). Prevalences lie in (0, 1] and sum to 1
/// within 1e-12; components must be either all step or all continuous.
class MixtureCurve final : public SurvivalCurve {
public:
    explicit MixtureCurve(std::vector<MixtureComponent> components);

    double survival(double t) const override;
    double survival_left(double t) const override;
    double density(double t) const override;
    bool is_step() const override { return step_; }
    std::vector<double> jump_times() const override;
    double scale_hint() const override;

    const std::vector<MixtureComponent>& components() const noexcept { return components_; }

private:
    std::vector<MixtureComponent> components_;
    bool step_ = false;
};

CurvePtr make_curve(const WeibullDist& dist);
CurvePtr make_mixture(std::vector<MixtureComponent> components);

/// S(t); DomainError for t < 0.
double survival_at(const SurvivalCurve& curve, double t);

/// Time t with S(t) = p. Continuous curves: geometric bracket growth from
/// [0, scale_hint] then bisection to an interval of width 1e-12 * max(1, t)
/// (so |S(t) - p| <= 1e-10 in practice). Step curves: smallest jump time with
/// S <= p. NotReached when the curve never falls to p.
double quantile(const SurvivalCurve& curve, double p);

/// Weibull with the given median: scale = median / (ln 2)^(1/shape).
WeibullDist weibull_from_median(double shape, double median);

/// Scale for a subgroup of the given shape such that a two-subgroup mixture
/// (complement + plus_curve at prevalence_plus) has S = 0.5 at overall_median.
/// InfeasibleScenario when the required subgroup survival is outside (0, 1).
double solve_complement_scale(double shape_minus, double overall_median,
                              double prevalence_plus, const SurvivalCurve& plus_curve);

/// General form: the solved subgroup has `prevalence`; `others` are the
/// remaining components whose prevalences together with it sum to one.
double solve_scale_for_mixture_median(double shape, double overall_median, double prevalence,
                                      std::span<const MixtureComponent> others);

CurvePtr lehmann_transform(CurvePtr reference, double hr);

/// n i.i.d. draws, one uniform per draw, in order.
std::vector<double> sample_times(const WeibullDist& dist, SplitMix64& rng, std::size_t n);

} // namespace survquack
