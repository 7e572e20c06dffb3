#include "fracwalk/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fracwalk/errors.hpp"

namespace fracwalk {

std::string_view to_string(StopCause c)
{
    switch (c) {
    case StopCause::Lower: return "lower";
    case StopCause::Upper: return "upper";
    case StopCause::Exhausted: return "exhausted";
    }
    return "?";
}

namespace {

void check_stop(const std::optional<StopRule>& stop)
{
    if (stop && !(stop->lower_limit < 0 && stop->upper_limit > 0)) {
        throw ConfigError("stop rule needs lower_limit < 0 < upper_limit");
    }
}

template <typename Pred, typename Value>
PayoffLedger walk(Pred&& pred, std::span<const Value> values, const std::optional<StopRule>& stop)
{
    PayoffLedger led;
    const std::size_t n = values.size();
    if (!stop) {
        std::int64_t sum = 0;
        for (std::size_t j = 0; j < n; ++j) {
            sum += pred(j) * static_cast<std::int64_t>(values[j]);
        }
        led.payoff = sum;
        led.steps_used = n;
        return led;
    }
    const std::int64_t lo = stop->lower_limit;
    const std::int64_t hi = stop->upper_limit;
    for (std::size_t j = 0; j < n; ++j) {
        led.payoff += pred(j) * static_cast<std::int64_t>(values[j]);
        led.steps_used = j + 1;
        if (led.payoff <= lo) {
            led.stop_cause = StopCause::Lower;
            break;
        }
        if (led.payoff >= hi) {
            led.stop_cause = StopCause::Upper;
            break;
        }
    }
    led.stopped_early = led.stop_cause != StopCause::Exhausted;
    return led;
}

template <typename Value>
PayoffLedger run_plan_impl(const BasicSequence<Value>& seq, const PredictionPlan& plan)
{
    validate(plan);
    const Interval& iv = plan.interval;
    if (iv.total_len() != seq.size()) {
        throw BoundsError("plan interval " + iv.to_string() + " belongs to a sequence of length " +
                          std::to_string(iv.total_len()) + ", not " + std::to_string(seq.size()));
    }
    const auto values = seq.values().subspan(iv.lo(), iv.length());
    return walk([&](std::size_t j) { return static_cast<std::int64_t>(plan.per_position[j]); }, values,
                plan.stop_rule);
}

}  // namespace

PredictionPlan PredictionPlan::constant(const Interval& iv, int sign, std::optional<StopRule> stop)
{
    if (sign != 1 && sign != -1) {
        throw ConfigError("plan predictions must be -1 or +1");
    }
    PredictionPlan p{iv, std::vector<std::int8_t>(iv.length(), static_cast<std::int8_t>(sign)), stop};
    validate(p);
    return p;
}

void validate(const PredictionPlan& plan)
{
    if (plan.per_position.size() != plan.interval.length()) {
        throw ConfigError("per_position length must equal the interval length");
    }
    for (auto v : plan.per_position) {
        if (v != 1 && v != -1) {
            throw ConfigError("plan predictions must be -1 or +1");
        }
    }
    check_stop(plan.stop_rule);
}

PayoffLedger run_plan(const BitSequence& seq, const PredictionPlan& plan) { return run_plan_impl(seq, plan); }
PayoffLedger run_plan(const IntSequence& seq, const PredictionPlan& plan) { return run_plan_impl(seq, plan); }

PayoffLedger run_values(std::span<const std::int8_t> predictions, std::span<const std::int32_t> values,
                        const std::optional<StopRule>& stop)
{
    if (predictions.size() != values.size()) {
        throw BoundsError("prediction and value spans differ in length");
    }
    check_stop(stop);
    return walk([&](std::size_t j) { return static_cast<std::int64_t>(predictions[j]); }, values, stop);
}

PayoffLedger run_constant(int sign, std::span<const std::int32_t> values, const std::optional<StopRule>& stop)
{
    check_stop(stop);
    const std::int64_t s = sign;
    return walk([s](std::size_t) { return s; }, values, stop);
}

PredictionPlan sign_of_prefix_plan(const BitSequence& history, std::size_t w, const Interval& target)
{
    if (w == 0) {
        throw ConfigError("window must be positive");
    }
    if (target.lo() < w) {
        throw ConfigError("insufficient history: window " + std::to_string(w) + " exceeds " +
                          std::to_string(target.lo()) + " bits before the target");
    }
    if (history.size() < target.lo()) {
        throw ConfigError("history ends before the target starts");
    }
    const std::int64_t h = history.height(target.lo() - w, target.lo());
    return PredictionPlan::constant(target, sign_with_tie(h));
}

StopRule inversion_stop_rule(double theta, double alpha)
{
    if (!(2.0 * alpha * theta >= 1.0)) {
        throw ConfigError("adaptive bettor needs 2*alpha*theta >= 1");
    }
    const auto lower = static_cast<std::int64_t>(std::ceil(alpha * theta));
    const auto upper = static_cast<std::int64_t>(std::ceil(2.0 * alpha * theta));
    return {-std::max<std::int64_t>(lower, 1), upper};
}

PayoffLedger adaptive_inversion_bettor(const BitSequence& seq, const Interval& target, double theta, double alpha,
                                       int direction)
{
    return run_plan(seq, PredictionPlan::constant(target, direction, inversion_stop_rule(theta, alpha)));
}

double weighted_majority_rate(std::size_t T)
{
    return std::sqrt(8.0 * std::numbers::ln2 / static_cast<double>(std::max<std::size_t>(T, 1)));
}

double weighted_majority_regret_bound(std::size_t T)
{
    return std::sqrt(2.0 * static_cast<double>(T) * std::numbers::ln2);
}

namespace {

template <typename Value>
double wm_expected(std::span<const Value> values)
{
    const double eta = weighted_majority_rate(values.size());
    double payoff = 0.0;
    std::int64_t h = 0;
    for (auto v : values) {
        payoff += std::tanh(0.5 * eta * static_cast<double>(h)) * v;
        h += v;
    }
    return payoff;
}

}  // namespace

double weighted_majority_expected(const BitSequence& seq) { return wm_expected(seq.values()); }
double weighted_majority_expected(std::span<const std::int32_t> values) { return wm_expected(values); }

std::int64_t weighted_majority_run(const BitSequence& seq, Rng& rng)
{
    const double eta = weighted_majority_rate(seq.size());
    std::int64_t payoff = 0;
    std::int64_t h = 0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const double p_plus = 1.0 / (1.0 + std::exp(-eta * static_cast<double>(h)));
        const int guess = rng.bernoulli(p_plus) ? 1 : -1;
        payoff += guess * seq[t];
        h += seq[t];
    }
    return payoff;
}

double weighted_majority_mean(const BitSequence& seq, Rng& rng, std::size_t reps)
{
    if (reps == 0) {
        throw ConfigError("reps must be positive");
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        sum += static_cast<double>(weighted_majority_run(seq, rng));
    }
    return sum / static_cast<double>(reps);
}

std::int64_t block_sign_payoff(std::span<const std::int32_t> values, std::size_t block)
{
    if (block == 0) {
        throw ConfigError("block must be positive");
    }
    std::int64_t payoff = 0;
    std::int64_t prev = 0;
    bool have_prev = false;
    for (std::size_t lo = 0; lo + block <= values.size(); lo += block) {
        std::int64_t h = 0;
        for (std::size_t j = lo; j < lo + block; ++j) {
            h += values[j];
        }
        if (have_prev) {
            payoff += sign_with_tie(prev) * h;
        }
        prev = h;
        have_prev = true;
    }
    return payoff;
}

std::int64_t block_sign_payoff(const BitSequence& seq, std::size_t block)
{
    std::vector<std::int32_t> v(seq.values().begin(), seq.values().end());
    return block_sign_payoff(v, block);
}

}  // namespace fracwalk
