#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fracwalk/generators.hpp"
#include "fracwalk/parallel.hpp"
#include "fracwalk/sequence.hpp"

namespace fracwalk {

// ---------------------------------------------------------------------------
// Deviation statistics

inline constexpr std::size_t kMinDeviationTrials = 100;

/// Aggregates of |h| over one batch of sampled heights.
struct DeviationRow {
    std::uint64_t T = 0;
    std::size_t trials = 0;
    double mean_dev = 0.0;    ///< E|h|
    double median_dev = 0.0;
    double rms_dev = 0.0;     ///< sqrt(E h^2)
    double second_moment = 0.0;
    double fourth_moment = 0.0;
    double median_se = 0.0;   ///< bootstrap standard error of median_dev
    double mean_se = 0.0;
    /// Pr[|h| >= 0.25 E|h|].
    double anti_concentration = 0.0;
};

DeviationRow summarize_heights(std::uint64_t T, std::span<const std::int64_t> heights, std::uint64_t bootstrap_seed,
                               std::size_t bootstrap_reps = 200);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y = a + b x; slope_se from residuals (0 for two points).
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least squares y = b x. r2 is the centered coefficient 1 - SSres / SS(y - mean y).
LinearFit fit_through_origin(std::span<const double> x, std::span<const double> y);

struct DeviationReport {
    GeneratorSpec spec;   ///< total_len is the first T; rows carry their own T
    std::vector<DeviationRow> rows;
    double fitted_exponent = 0.0;   ///< slope of log median_dev on log T
    double exponent_se = 0.0;
    /// median <= 3 mean and mean <= rms on every row.
    bool ordering_ok() const;
};

/// Heights of `trials` samples at length T; trial i is seeded from
/// derive_seed(derive_seed(spec.seed, {T}), i).
std::vector<std::int64_t> sample_heights(GeneratorSpec spec, std::uint64_t T, std::size_t trials,
                                         Exec exec = Exec::Parallel);

/// Refuses trials < 100 with ConfigError.
DeviationReport deviation_stats(const GeneratorSpec& spec, std::span<const std::uint64_t> T_list, std::size_t trials,
                                Exec exec = Exec::Parallel);

/// (1 + (1 + delta)^2)^i * l.
double afrw_moment_oracle(double delta, std::uint64_t l, unsigned depth_i);

/// sqrt(T) (1 + (delta / 2) log2 T). Requires T to be a power of two.
double upper_bound_rms(double delta, std::uint64_t T);

// ---------------------------------------------------------------------------
// Exact enumeration of the augmented recursion for tiny instances

/// Height value -> probability.
using HeightDistribution = std::map<double, double>;

/// Law of h for the augmented recursion with exact (real-valued) increments,
/// h = (1 + delta) h(s1) + h(s2), enumerated over all 2^(l 2^i) base fillings.
HeightDistribution afrw_recursion_distribution(double delta, unsigned l, unsigned depth_i);

/// Law of sum_U (1 + delta)^|U| h(X_U) over the same fillings, where X_U is
/// the base block reached by taking the first half at exactly the levels in U.
HeightDistribution decomposition_distribution(double delta, unsigned l, unsigned depth_i);

double total_variation(const HeightDistribution& a, const HeightDistribution& b);
double second_moment(const HeightDistribution& d);

// ---------------------------------------------------------------------------
// Inversion ratio

inline constexpr std::size_t kDefaultMinLen = 8;
inline constexpr std::size_t kMaxExhaustiveLen = std::size_t{1} << 14;

struct InversionWitness {
    std::size_t x_lo = 0, x_hi = 0;
    std::size_t y_lo = 0, y_hi = 0;
    std::int64_t x_height = 0;
    std::int64_t y_height = 0;
};

struct LengthRatio {
    std::size_t length = 0;
    double ratio = 0.0;
};

struct InversionReport {
    std::size_t min_len = kDefaultMinLen;
    bool dyadic_only = false;
    std::size_t intervals_scanned = 0;   ///< intervals X with |X| >= min_len and h(X) != 0
    /// min over X of (largest opposite-sign subinterval height / |h(X)|);
    /// +inf when no interval qualifies.
    double overall_ratio = std::numeric_limits<double>::infinity();
    std::int64_t ratio_num = 0;   ///< overall_ratio = ratio_num / ratio_den
    std::int64_t ratio_den = 0;
    std::optional<InversionWitness> certificate;
    /// Worst ratio among scanned intervals of each length.
    std::vector<LengthRatio> per_length;
};

/// Ties go to the first X in (lo, hi) order. Serial is the reference; the
/// parallel scan reduces per-thread results with the same tie rule.
/// Throws ConfigError when the sequence exceeds 2^14 without dyadic_only.
InversionReport inversion_ratio(std::span<const std::int64_t> prefix, std::size_t min_len = kDefaultMinLen,
                                bool dyadic_only = false, Exec exec = Exec::Serial);
InversionReport inversion_ratio(const BitSequence& seq, std::size_t min_len = kDefaultMinLen,
                                bool dyadic_only = false, Exec exec = Exec::Serial);

/// Largest and smallest subinterval heights inside [lo, hi), with the first
/// subinterval attaining each (0 and an empty range when none is positive or
/// negative).
struct SubintervalExtremes {
    std::int64_t max_height = 0;
    std::size_t max_lo = 0, max_hi = 0;
    std::int64_t min_height = 0;
    std::size_t min_lo = 0, min_hi = 0;
};
SubintervalExtremes subinterval_extremes(std::span<const std::int64_t> prefix, std::size_t lo, std::size_t hi);

// ---------------------------------------------------------------------------
// (alpha, q)-inversion

struct AlphaQOptions {
    std::size_t first_pass_trials = 1000;
    double floor_constant = 1.0;   ///< Delta must be at least floor_constant * delta * sqrt(|X|)
};

struct AlphaQRow {
    double alpha = 0.0;
    double q_hat = 0.0;
    double stderr = 0.0;
};

struct AlphaQReport {
    GeneratorSpec spec;
    std::size_t x_lo = 0;
    std::size_t x_len = 0;
    double median_dev = 0.0;   ///< Delta, from the first pass
    double floor = 0.0;
    bool threshold_met = false;
    std::size_t trials = 0;
    std::vector<AlphaQRow> rows;
};

/// Pr[exists Y in X with sign opposite to h(X) and |h(Y)| >= alpha Delta]
/// for each alpha, on shared samples (so q_hat is non-increasing in alpha).
/// Samples with h(X) = 0 count as failures. Requires trials >= 1000.
AlphaQReport alpha_q_estimate(const GeneratorSpec& spec, std::size_t x_lo, std::size_t x_len,
                              std::span<const double> alphas, std::size_t trials, const AlphaQOptions& opts = {},
                              Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Staged inversion certificate

struct StageStats {
    std::size_t initiated = 0;
    std::size_t lower_hits = 0;
    std::size_t upper_hits = 0;
};

struct CertifyReport {
    GeneratorSpec spec;
    std::size_t x_lo = 0;
    std::size_t x_len = 0;
    double theta = 0.0;
    unsigned s = 1;
    double alpha = 0.5;
    std::int64_t lower_limit = 0;
    std::int64_t upper_limit = 0;
    std::size_t trials = 0;
    std::size_t high = 0;                ///< trials with |h(X)| >= theta
    std::size_t high_no_inversion = 0;   ///< ... where no stage hit its lower limit
    double joint_no_inversion = 0.0;       ///< high_no_inversion / trials
    double conditional_no_inversion = 0.0; ///< high_no_inversion / high (0 when high = 0)
    std::vector<StageStats> stages;
};

/// Up to s stages of the stopped bettor on X, each with limits
/// {-ceil(alpha theta / s), +ceil(2 alpha theta / s)} on its own running sum;
/// a stage starts only when the previous one hit a limit and bits remain.
/// The bet direction is sign(h(X)) (tie +1). Requires alpha theta / s >= 1.
CertifyReport certify_inversion(const GeneratorSpec& spec, std::size_t x_lo, std::size_t x_len, double theta,
                                unsigned s, std::size_t trials, double alpha = 0.5, Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Unpredictability

enum class DeltaMode { Strict, WeakAveraged };
std::string_view to_string(DeltaMode m);
DeltaMode parse_delta_mode(std::string_view s);

struct DeltaOptions {
    /// Prefix windows; empty selects dyadic 16 .. T/2.
    std::vector<std::size_t> windows;
    /// Target lengths; empty selects dyadic 16 .. T/2.
    std::vector<std::size_t> lengths;
    /// Strict-mode interval starts; empty selects {T/2, 3T/4}.
    std::vector<std::size_t> starts;
    std::size_t bootstrap_reps = 200;
};

struct DeltaCell {
    std::string predictor;    ///< "sign_of_prefix" or "adaptive_bettor"
    std::size_t window = 0;
    std::size_t lo = 0;       ///< strict: interval start; weak: 0 (averaged over starts)
    std::size_t length = 0;
    double param = 0.0;       ///< adaptive bettor alpha
    double mean_payoff = 0.0;
    double normalized = 0.0;  ///< mean payoff / sqrt(|I|) (bettor: / sqrt(E steps))
    double stderr = 0.0;      ///< of normalized
    std::size_t trials = 0;
};

struct UnpredictabilityReport {
    GeneratorSpec spec;
    DeltaMode mode = DeltaMode::Strict;
    std::string warning;
    std::vector<DeltaCell> cells;
    double delta_hat = 0.0;   ///< max(0, max normalized); a lower bound on the true delta
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// Sign-of-prefix family. Strict plants an all-(+1) prefix of each window
/// length before each start by forcing those entries in the base fill;
/// WeakAveraged averages over naturally generated prefixes and all aligned
/// intervals of each length. Each cell is seeded from its coordinates, so
/// adding windows never changes existing cells. Strict mode on
/// EntropyConditioned falls back to WeakAveraged with a warning.
/// Requires trials >= 1000 unless allow_small is set.
UnpredictabilityReport estimate_delta(const GeneratorSpec& spec, DeltaMode mode, std::size_t trials,
                                      const DeltaOptions& opts = {}, Exec exec = Exec::Parallel,
                                      bool allow_small = false);

/// Adaptive stopped bettor on I = [T/2, T/2 + L) betting on the sign of the
/// preceding L bits with theta = sqrt(L), for each length and alpha;
/// normalized by sqrt(E[steps]).
UnpredictabilityReport estimate_delta_adaptive(const GeneratorSpec& spec, std::size_t trials,
                                               std::span<const double> alphas, const DeltaOptions& opts = {},
                                               Exec exec = Exec::Parallel);

struct MeanEstimate {
    double mean = 0.0;
    double stderr = 0.0;
    std::size_t trials = 0;
};

/// Payoff of predicting the second half by the sign of the first half.
MeanEstimate first_half_sign_payoff(const GeneratorSpec& spec, std::size_t trials, Exec exec = Exec::Parallel);

/// Exact expected weighted-majority payoff, averaged over sampled sequences.
MeanEstimate weighted_majority_payoff(const GeneratorSpec& spec, std::size_t trials, Exec exec = Exec::Parallel);

/// Payoff of betting each block on the sign of the previous block.
MeanEstimate block_sign_mean_payoff(const GeneratorSpec& spec, std::size_t block, std::size_t trials,
                                    Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const DeviationRow& r);
nlohmann::json to_json(const DeviationReport& r);
nlohmann::json to_json(const InversionReport& r);
nlohmann::json to_json(const AlphaQReport& r);
nlohmann::json to_json(const CertifyReport& r);
nlohmann::json to_json(const UnpredictabilityReport& r);

}  // namespace fracwalk
