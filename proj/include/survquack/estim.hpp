#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "survquack/dist.hpp"

namespace survquack {

enum class Arm { Rx, C };

std::string_view to_string(Arm arm) noexcept;

struct Record {
    double time = 0.0;
    bool event = true;
    Arm arm = Arm::C;
    /// Level label per factor, aligned with SurvivalSample::factors.
    std::vector<std::string> levels;
};

/// Patient-level two-arm dataset. Every record carries one level per factor.
struct SurvivalSample {
    std::vector<std::string> factors;
    std::vector<Record> records;

    std::size_t size() const noexcept { return records.size(); }
    std::size_t count(Arm arm) const noexcept;
    std::size_t censored() const noexcept;

    std::vector<double> times(Arm arm) const;
    std::vector<bool> events(Arm arm) const;

    /// Column index of a factor; ValidationError if absent.
    std::size_t factor_index(std::string_view factor) const;

    /// Distinct levels of a factor in order of first appearance.
    std::vector<std::string> levels(std::string_view factor) const;

    /// Records whose level for `factor` equals `level`; factor columns kept.
    SurvivalSample subset(std::string_view factor, std::string_view level) const;

    /// Same data with the arm labels exchanged.
    SurvivalSample swapped_arms() const;

    /// Checks times > 0 and the level vectors match the factor list.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Kaplan-Meier

struct KMStep {
    double time;
    std::size_t at_risk;
    std::size_t events;
    double survival; // estimate just after `time`
};

class KMCurve {
public:
    KMCurve() = default;
    explicit KMCurve(std::vector<KMStep> steps);

    const std::vector<KMStep>& steps() const noexcept { return steps_; }
    double survival(double t) const;
    bool terminates_above_zero() const noexcept;

    /// The estimate as a StepCurve, usable in mixtures and LLP integrals.
    CurvePtr curve() const;

private:
    std::vector<KMStep> steps_;
};

/// Product-limit estimate over distinct event times. Events at a tied time
/// are removed from the risk set before censorings at that time.
KMCurve km_fit(std::span<const double> times, const std::vector<bool>& events);

/// Smallest event time with estimate <= 0.5; nullopt when not reached.
std::optional<double> km_median(const KMCurve& curve);

// ---------------------------------------------------------------------------
// Weibull maximum likelihood in (log shape, log scale)

struct WeibullFit {
    WeibullDist dist{1.0, 1.0};
    /// Covariance of (log shape, log scale) from the observed information.
    std::array<std::array<double, 2>, 2> cov{};
    double loglik = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;

    double se_log_scale() const;
};

double weibull_loglik(std::span<const double> times, const std::vector<bool>& events,
                      double log_shape, double log_scale);

std::array<double, 2> weibull_gradient(std::span<const double> times, const std::vector<bool>& events,
                                       double log_shape, double log_scale);

/// Newton-Raphson with backtracking, at most 100 iterations, converged when
/// the gradient norm is <= 1e-8. Start from a least-squares line through
/// (log t, log(-log S_KM)). DegenerateSample for fewer than 2 events or no
/// spread in event times; NumericalError on non-convergence.
WeibullFit weibull_mle(std::span<const double> times, const std::vector<bool>& events);

/// Closed-form scale MLE with the shape held fixed. shape = 1 gives the
/// exponential estimate total time / events.
WeibullDist weibull_mle_fixed_shape(std::span<const double> times, const std::vector<bool>& events,
                                    double shape);

// ---------------------------------------------------------------------------
// Efficacy measures

enum class Measure { RR, TR, HR, LLP };

std::string_view to_string(Measure m) noexcept;

struct EfficacySummary {
    Measure measure;
    double value;
    std::optional<double> log_se;

    /// DomainError unless the value suits the measure (LLP in (0,1), others > 0).
    EfficacySummary(Measure measure, double value, std::optional<double> log_se = std::nullopt);
};

/// Pair count (#{rx > c} + 0.5 #{ties}) / (n m).
double empirical_llp(std::span<const double> rx_times, std::span<const double> c_times);

/// UnsupportedCensoring if any record is censored.
double empirical_llp(const SurvivalSample& sample);

double hr_from_llp(double llp);
double llp_from_hr(double hr);

/// Weibull with a common shape: hr = tr^-shape.
double tr_to_hr(double tr, double shape);
double hr_to_tr(double hr, double shape);

// ---------------------------------------------------------------------------
// Two-arm Cox model

struct CoxFit {
    double log_hr = 0.0; // Rx relative to C
    double se = 0.0;
    double loglik = 0.0;
    int iterations = 0;
    std::size_t strata = 1;
};

/// Partial likelihood for the single Rx indicator, Breslow ties, optionally
/// stratified by a factor. Newton until |score| <= 1e-10. NumericalError for
/// a monotone likelihood; DegenerateSample when an arm or all events are
/// missing.
CoxFit cox_fit_two_arm(const SurvivalSample& sample,
                       const std::optional<std::string>& strata_factor = std::nullopt);

/// TR = KM median(Rx) / KM median(C). NotReached names the arm.
EfficacySummary sample_tr(std::span<const double> rx_times, const std::vector<bool>& rx_events,
                          std::span<const double> c_times, const std::vector<bool>& c_events);

} // namespace survquack
