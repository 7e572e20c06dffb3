#include <cmath>

#include "doctest.h"

#include "fracwalk/errors.hpp"
#include "fracwalk/predictors.hpp"
#include "fracwalk/rng.hpp"

using namespace fracwalk;

namespace {

BitSequence random_bits(std::size_t n, Rng& rng)
{
    std::vector<std::int8_t> b(n);
    for (auto& x : b) {
        x = static_cast<std::int8_t>(rng.sign());
    }
    return BitSequence(std::move(b));
}

}  // namespace

TEST_SUITE("predictors")
{
    TEST_CASE("run_plan examples")
    {
        const BitSequence s({1, -1, 1});
        const auto l = run_plan(s, PredictionPlan::constant(s.whole(), 1));
        CHECK(l.payoff == 1);
        CHECK(l.steps_used == 3);
        CHECK(l.stop_cause == StopCause::Exhausted);

        PredictionPlan same{s.whole(), {1, -1, 1}, std::nullopt};
        CHECK(run_plan(s, same).payoff == 3);

        const BitSequence u({1, 1, -1, 1});
        const auto st = run_plan(u, PredictionPlan::constant(u.whole(), 1, StopRule{-1, 2}));
        CHECK(st.payoff == 2);
        CHECK(st.steps_used == 2);
        CHECK(st.stopped_early);
        CHECK(st.stop_cause == StopCause::Upper);
    }

    TEST_CASE("run_plan checks the interval")
    {
        const BitSequence s({1, -1, 1});
        CHECK_THROWS_AS(run_plan(s, PredictionPlan::constant(Interval(0, 2, 4), 1)), BoundsError);
    }

    TEST_CASE("sign of prefix with the tie rule")
    {
        const Interval target(2, 4, 4);
        auto p = sign_of_prefix_plan(BitSequence({1, 1, -1, -1}), 2, target);
        CHECK(p.per_position == std::vector<std::int8_t>{1, 1});
        p = sign_of_prefix_plan(BitSequence({1, -1, -1, -1}), 2, target);
        CHECK(p.per_position == std::vector<std::int8_t>{1, 1});
        p = sign_of_prefix_plan(BitSequence({-1, -1, 1, 1}), 2, target);
        CHECK(p.per_position == std::vector<std::int8_t>{-1, -1});
        CHECK_THROWS_AS(sign_of_prefix_plan(BitSequence({1, 1, 1, 1}), 3, target), ConfigError);
    }

    TEST_CASE("weighted majority on all +1 and alternating sequences")
    {
        const std::size_t T = 1024;
        const auto ones = BitSequence::constant(T, 1);
        const double bound = weighted_majority_regret_bound(T);
        CHECK(weighted_majority_expected(ones) >= 1024.0 - bound);
        Rng rng(1);
        CHECK(weighted_majority_mean(ones, rng, 200) >= 1024.0 - bound);

        std::vector<std::int8_t> alt(T);
        for (std::size_t i = 0; i < T; ++i) {
            alt[i] = i % 2 == 0 ? 1 : -1;
        }
        CHECK(weighted_majority_expected(BitSequence(alt)) >= -bound);
    }

    TEST_CASE("weighted majority expectation matches its randomized runs")
    {
        Rng rng(2);
        const auto s = random_bits(256, rng);
        const double exact = weighted_majority_expected(s);
        CHECK(weighted_majority_mean(s, rng, 20'000) == doctest::Approx(exact).epsilon(0.02).scale(16.0));
    }

    TEST_CASE("adaptive bettor barriers")
    {
        const double theta = 10.0, alpha = 0.5;
        const auto up = adaptive_inversion_bettor(BitSequence::constant(64, 1), Interval(0, 64, 64), theta, alpha);
        CHECK(up.stop_cause == StopCause::Upper);
        CHECK(up.steps_used == 10);
        const auto down = adaptive_inversion_bettor(BitSequence::constant(64, -1), Interval(0, 64, 64), theta, alpha);
        CHECK(down.stop_cause == StopCause::Lower);
        CHECK(down.steps_used == 5);
        CHECK_THROWS_AS(inversion_stop_rule(0.5, 0.5), ConfigError);
    }

    TEST_CASE("gambler's ruin frequency on a uniform walk")
    {
        // Barriers -15 and +30: Pr[lower first] = 30 / 45.
        Rng rng(7);
        int lower = 0, decided = 0;
        for (int t = 0; t < 10'000; ++t) {
            const auto s = random_bits(8192, rng);
            const auto l = adaptive_inversion_bettor(s, s.whole(), 30.0, 0.5);
            if (l.stop_cause != StopCause::Exhausted) {
                ++decided;
                lower += l.stop_cause == StopCause::Lower;
            }
        }
        CHECK(decided > 9'900);
        CHECK(std::fabs(lower / static_cast<double>(decided) - 2.0 / 3.0) < 0.05);
    }

    TEST_CASE("block sign payoff")
    {
        const BitSequence s({1, 1, 1, 1, -1, -1});
        // Blocks of 2 have heights 2, 2, -2; the first block is not bet on.
        CHECK(block_sign_payoff(s, 2) == 2 - 2);
        CHECK(block_sign_payoff(BitSequence({-1, -1, -1, 1}), 2) == 0);
        CHECK(block_sign_payoff(BitSequence({-1, -1, -1, -1}), 2) == 2);
        CHECK_THROWS_AS(block_sign_payoff(s, 0), ConfigError);
    }
}
