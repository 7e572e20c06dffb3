#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fracwalk/rng.hpp"
#include "fracwalk/sequence.hpp"

namespace fracwalk {

struct StopRule {
    std::int64_t lower_limit = -1;
    std::int64_t upper_limit = 1;
};

enum class StopCause { Lower, Upper, Exhausted };
std::string_view to_string(StopCause c);

/// Predictions for `interval`, committed before any bit in it is seen.
/// per_position[j] is the prediction for bit interval.lo() + j.
struct PredictionPlan {
    Interval interval;
    std::vector<std::int8_t> per_position;
    std::optional<StopRule> stop_rule;

    /// Constant plan. Throws ConfigError for a sign other than +-1 or a stop
    /// rule without lower < 0 < upper.
    static PredictionPlan constant(const Interval& iv, int sign, std::optional<StopRule> stop = std::nullopt);
};

/// Checks the plan invariants; throws ConfigError.
void validate(const PredictionPlan& plan);

struct PayoffLedger {
    std::int64_t payoff = 0;
    std::size_t steps_used = 0;
    bool stopped_early = false;
    StopCause stop_cause = StopCause::Exhausted;
};

/// Payoff of a plan. Bits are read in order and execution halts the first
/// time the running payoff reaches a stop limit. Throws BoundsError when the
/// plan's interval does not fit the sequence.
PayoffLedger run_plan(const BitSequence& seq, const PredictionPlan& plan);
PayoffLedger run_plan(const IntSequence& seq, const PredictionPlan& plan);

/// Same walk over raw values; `values` is the target interval's content.
PayoffLedger run_values(std::span<const std::int8_t> predictions, std::span<const std::int32_t> values,
                        const std::optional<StopRule>& stop);

/// Walk of a constant bet `sign` over values, stopping at the limits.
PayoffLedger run_constant(int sign, std::span<const std::int32_t> values, const std::optional<StopRule>& stop);

/// Sign of a height with the tie rule (zero predicts +1).
constexpr int sign_with_tie(std::int64_t h) noexcept { return h >= 0 ? 1 : -1; }

/// Constant plan predicting the sign of the last w bits before target.lo().
/// Only history[target.lo() - w, target.lo()) is read. Throws ConfigError
/// when target.lo() < w or history is shorter than target.lo().
PredictionPlan sign_of_prefix_plan(const BitSequence& history, std::size_t w, const Interval& target);

/// Stop rule {-ceil(alpha theta), +ceil(2 alpha theta)}. Requires 2 alpha theta >= 1.
StopRule inversion_stop_rule(double theta, double alpha);

/// Constant bet `direction` (default +1) on target, stopped by
/// inversion_stop_rule(theta, alpha).
PayoffLedger adaptive_inversion_bettor(const BitSequence& seq, const Interval& target, double theta, double alpha,
                                       int direction = 1);

/// Learning rate sqrt(8 ln 2 / T) of the two-expert scheme.
double weighted_majority_rate(std::size_t T);

/// Expected payoff of weighted majority over the experts {always +1, always -1}
/// with randomized prediction, computed exactly: after history height H the
/// scheme predicts +1 with probability 1 / (1 + exp(-eta H)), so the expected
/// prediction is tanh(eta H / 2).
double weighted_majority_expected(const BitSequence& seq);
double weighted_majority_expected(std::span<const std::int32_t> values);

/// One randomized run of the same scheme.
std::int64_t weighted_majority_run(const BitSequence& seq, Rng& rng);

/// Mean of `reps` randomized runs.
double weighted_majority_mean(const BitSequence& seq, Rng& rng, std::size_t reps);

/// Regret allowance sqrt(2 T ln 2) in payoff units.
double weighted_majority_regret_bound(std::size_t T);

/// Splits seq into consecutive blocks of length `block` and bets each block
/// on the sign of the block before it (tie +1). The first block is not bet on.
std::int64_t block_sign_payoff(std::span<const std::int32_t> values, std::size_t block);
std::int64_t block_sign_payoff(const BitSequence& seq, std::size_t block);

}  // namespace fracwalk
