#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survquack/estim.hpp"

namespace survquack {

/// 2 * (1 - Phi(|z|)).
double normal_two_sided_p(double z);

// ---------------------------------------------------------------------------
// Log-rank

struct LogRankResult {
    double observed_minus_expected = 0.0; // Rx arm
    double variance = 0.0;
    double z = 0.0;
    double p_two_sided = 1.0;
    bool zero_variance = false;

    bool operator==(const LogRankResult&) const = default;
};

/// Unweighted log-rank score test with hypergeometric variance and a normal
/// p-value. Zero variance yields p = 1 with the flag set.
LogRankResult logrank_test(const SurvivalSample& sample);

// ---------------------------------------------------------------------------
// Wald

struct WaldResult {
    double estimate = 0.0; // log HR (Cox) or log TR (Weibull)
    double se = 0.0;
    double z = 0.0;
    double p_two_sided = 1.0;
};

WaldResult wald_test_cox(const SurvivalSample& sample);

/// log TR = log scale(Rx) - log scale(C), variances added (independent arms).
WaldResult wald_test_weibull(const WeibullFit& rx, const WeibullFit& c);

// ---------------------------------------------------------------------------
// Log-rank then compare medians

enum class Claim { NoClaim, RxLongerMedian, CLongerMedian };

std::string_view to_string(Claim claim) noexcept;

struct Decision {
    Claim claim = Claim::NoClaim;
    /// Rejected, but medians tied or a median was not reached.
    bool tie = false;
    LogRankResult logrank;
    std::optional<double> median_rx;
    std::optional<double> median_c;

    bool rejected(double alpha) const noexcept { return logrank.p_two_sided < alpha; }
    bool operator==(const Decision&) const = default;
};

/// NoClaim when p >= alpha. Otherwise the arm with the longer KM median is
/// declared to have the longer median; equal or unreached medians give
/// NoClaim with `tie` set.
Decision decision_procedure(const SurvivalSample& sample, double alpha);

// ---------------------------------------------------------------------------
// Mann-Whitney pivot under the Lehmann family
//
// On the survival-probability scale of the control law, control values are
// U(0,1) and treated values are W^(1/theta) with W ~ U(0,1). The statistic is
// the number of pairs where the treated value is smaller (treated lives
// longer). Counts are stored doubled so half-weight ties stay integral.

struct MwNullTable {
    std::size_t n_rx = 0;
    std::size_t n_c = 0;
    std::vector<double> grid;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    /// Per grid point, sorted doubled counts (2 * pairs), length reps each.
    std::vector<std::vector<std::uint32_t>> sorted_counts;

    bool operator==(const MwNullTable&) const = default;
};

/// Log-spaced grid of `points` values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

/// Default grid: 200 points log-spaced over [1/50, 50].
std::vector<double> default_theta_grid();

/// Replication r draws n_c control uniforms then n_rx treated uniforms from
/// stream (seed, "mw-null", r); the same draws serve every grid point. Grid
/// points run in parallel with OpenMP (workers = 0 keeps the runtime default).
MwNullTable build_mw_null_table(std::size_t n_rx, std::size_t n_c, std::vector<double> grid,
                                std::size_t reps, std::uint64_t seed, int workers = 0);

/// Single-threaded reference of build_mw_null_table; identical output.
MwNullTable build_mw_null_table_serial(std::size_t n_rx, std::size_t n_c, std::vector<double> grid,
                                       std::size_t reps, std::uint64_t seed);

/// Doubled observed count: 2 * #{rx > c} + #{rx == c}.
std::uint64_t mw_doubled_count(std::span<const double> rx_times, std::span<const double> c_times);

struct TailProbabilities {
    double lower; // P(count <= observed)
    double upper; // P(count >= observed)
};

TailProbabilities mw_tails(const MwNullTable& table, std::size_t grid_index, std::uint64_t doubled_obs);

/// Two-sided acceptance: both tails exceed (1 - level) / 2. The observed
/// count is included in each tail, which keeps boundary counts accepted.
bool mw_accepts(const TailProbabilities& tails, double level);

struct ConfidenceSet {
    std::vector<double> accepted;
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
    double llp_observed = 0.5;
    bool empty_acceptance = false;
    bool nonconvex = false;
    std::string diagnostics;
};

/// Inverts the table at an observed doubled count. An empty acceptance set
/// reports the whole grid with `empty_acceptance` and a diagnostic.
ConfidenceSet pivot_from_table(const MwNullTable& table, std::uint64_t doubled_obs, double level);

/// Full construction: validates inputs (level in (0,1), mc_reps >= 2000,
/// non-empty samples), builds the null table for the sample sizes and inverts.
ConfidenceSet mw_pivot_ci(std::span<const double> rx_times, std::span<const double> c_times, double level,
                          const std::vector<double>& grid, std::size_t mc_reps, std::uint64_t seed,
                          int workers = 0);

} // namespace survquack
