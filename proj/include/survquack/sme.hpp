#pragma once

// Subgroup-to-overall aggregation of efficacy.
//
// The naive estimator averages log ratios across strata (what common
// stratified procedures do). Subgroup mixable estimation instead mixes the
// arm-level ingredients (response probabilities or survival curves) over the
// subgroup prevalences first and forms the ratio afterwards.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survquack/dist.hpp"
#include "survquack/estim.hpp"

namespace survquack {

struct WeightedRatio {
    double ratio;
    double weight;
};

/// exp(sum_g w_g log r_g). Weights must sum to 1 (1e-9); ratios positive.
double naive_stratified_ratio(std::span<const WeightedRatio> strata);

struct ResponseRow {
    std::string label;
    double prevalence;
    double p_rx;
    double p_c;
};

/// (sum pi_g p_rx,g) / (sum pi_g p_c,g).
EfficacySummary sme_overall_rr(std::span<const ResponseRow> rows);

struct CurveRow {
    std::string label;
    double prevalence;
    CurvePtr rx;
    CurvePtr c;
};

/// Per-arm mixture curves of a table.
std::pair<CurvePtr, CurvePtr> mix_arms(std::span<const CurveRow> rows);

/// Ratio of the medians of the per-arm mixtures. NotReached propagates.
EfficacySummary sme_overall_tr(std::span<const CurveRow> rows);

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double tail_mass = 1e-12; // mass of the control law left outside [t_lo, T*]
    int max_depth = 48;
    int initial_panels = 64;
};

struct LlpResult {
    double llp = 0.5;
    /// Step curves only: control or Rx estimate ended above zero, residual
    /// mass counted as ties.
    bool truncated = false;
};

/// P(T_rx > T_c) + 0.5 P(T_rx = T_c).
/// Continuous curves: adaptive Simpson of S_rx(t) f_c(t) in log time.
/// Step curves: exact sum over the control jump points.
/// NumericalError when the quadrature does not reach the tolerance.
LlpResult llp_between(const SurvivalCurve& rx, const SurvivalCurve& c, const QuadratureOptions& opts = {});

/// LLP of the per-arm mixtures mapped to HR = (1 - LLP) / LLP.
EfficacySummary sme_overall_hr(std::span<const CurveRow> rows, const QuadratureOptions& opts = {});

// ---------------------------------------------------------------------------
// Stratified audit

struct StratifiedComparison {
    std::string factor;
    Measure measure = Measure::HR;
    std::vector<std::string> levels;
    std::vector<double> prevalences;
    std::vector<double> level_values;
    double naive_value = 1.0;
    double sme_value = 1.0;
    double marginal_value = 1.0; // unstratified SME value
    std::optional<double> marginal_cox; // HR audits only
};

struct AuditResult {
    std::vector<StratifiedComparison> comparisons;
    std::vector<std::string> warnings;
};

/// Per factor: naive pooled value of per-level estimates (Cox HR or KM
/// median TR) with pooled prevalence weights, SME value from per-level KM
/// curves mixed by pooled prevalence, and the marginal value. Levels without
/// an event in each arm are dropped with a warning and prevalences
/// renormalized. Measure must be HR or TR.
AuditResult stratified_audit(const SurvivalSample& sample, std::span<const std::string> factors,
                             Measure measure, int workers = 1);

} // namespace survquack
