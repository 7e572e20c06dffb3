#include <cmath>

#include "doctest.h"

#include "fracwalk/acceptance.hpp"
#include "fracwalk/analysis.hpp"
#include "fracwalk/errors.hpp"
#include "fracwalk/generators.hpp"

using namespace fracwalk;

namespace {

GeneratorSpec make(Family f, double delta, std::uint64_t T, std::uint64_t seed = 1)
{
    GeneratorSpec s;
    s.family = f;
    s.delta = delta;
    s.total_len = T;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_SUITE("analysis")
{
    TEST_CASE("moment oracle and upper bound arithmetic")
    {
        CHECK(afrw_moment_oracle(0.0, 16, 6) == doctest::Approx(1024.0));
        CHECK(afrw_moment_oracle(0.1, 16, 3) == doctest::Approx(2.21 * 2.21 * 2.21 * 16.0).epsilon(1e-14));
        CHECK(upper_bound_rms(0.0, 1024) == doctest::Approx(32.0));
        CHECK(upper_bound_rms(0.1, 1 << 20) == doctest::Approx(2048.0));
        CHECK_THROWS_AS(upper_bound_rms(0.1, 1000), ConfigError);
    }

    TEST_CASE("enumeration at l = 1, i = 2 reproduces the oracle")
    {
        const auto a = afrw_recursion_distribution(0.1, 1, 2);
        const auto b = decomposition_distribution(0.1, 1, 2);
        CHECK(total_variation(a, b) < 1e-9);
        CHECK(second_moment(a) == doctest::Approx(afrw_moment_oracle(0.1, 1, 2)).epsilon(1e-12));
        double mass = 0.0;
        for (const auto& [h, p] : a) {
            mass += p;
        }
        CHECK(mass == doctest::Approx(1.0));
    }

    TEST_CASE("line fits")
    {
        const std::vector<double> x = {1, 2, 3, 4}, y = {3, 5, 7, 9};
        const auto f = fit_line(x, y);
        CHECK(f.slope == doctest::Approx(2.0));
        CHECK(f.intercept == doctest::Approx(1.0));
        CHECK(f.r2 == doctest::Approx(1.0));
        const std::vector<double> y2 = {2, 4, 6, 8}, one = {1};
        const auto g = fit_through_origin(x, y2);
        CHECK(g.slope == doctest::Approx(2.0));
        CHECK(g.r2 == doctest::Approx(1.0));
        CHECK_THROWS_AS(fit_line(one, one), ConfigError);
    }

    TEST_CASE("deviation statistics on uniform walks")
    {
        const std::uint64_t Ts[] = {1024, 4096, 16384};
        const auto rep = deviation_stats(make(Family::Uniform, 0.0, 1024), Ts, 4000);
        CHECK(std::fabs(rep.fitted_exponent - 0.5) < 0.04);
        CHECK(rep.ordering_ok());
        for (const auto& r : rep.rows) {
            CHECK(r.rms_dev == doctest::Approx(std::sqrt(static_cast<double>(r.T))).epsilon(0.04));
            CHECK(r.mean_dev == doctest::Approx(std::sqrt(2.0 * r.T / M_PI)).epsilon(0.05));
        }
        CHECK_THROWS_AS(deviation_stats(make(Family::Uniform, 0.0, 1024), Ts, 50), ConfigError);
    }

    TEST_CASE("inversion ratio examples")
    {
        CHECK(inversion_ratio(BitSequence::constant(32, 1), 1).overall_ratio == 0.0);
        const auto r = inversion_ratio(BitSequence({1, 1, -1, -1, 1, 1}), 6);
        CHECK(r.intervals_scanned == 1);
        CHECK(r.overall_ratio == 1.0);
        REQUIRE(r.certificate);
        CHECK(r.certificate->x_lo == 0);
        CHECK(r.certificate->x_hi == 6);
        CHECK(r.certificate->y_lo == 2);
        CHECK(r.certificate->y_hi == 4);
        CHECK(std::isinf(inversion_ratio(BitSequence({1, -1}), 2).overall_ratio));
    }

    TEST_CASE("inversion ratio against the brute-force oracle")
    {
        Rng rng(12);
        for (int t = 0; t < 200; ++t) {
            std::vector<std::int8_t> b(40);
            for (auto& x : b) {
                x = static_cast<std::int8_t>(rng.sign());
            }
            const BitSequence s(b);
            for (std::size_t min_len : {1, 5}) {
                const auto fast = inversion_ratio(s, min_len);
                const auto slow = naive_inversion_ratio(s.prefix(), min_len);
                if (slow.den == 0) {
                    CHECK(!fast.certificate);
                    continue;
                }
                CHECK(fast.ratio_num * slow.den == slow.num * fast.ratio_den);
                CHECK(fast.certificate->x_lo == slow.x_lo);
                CHECK(fast.certificate->x_hi == slow.x_hi);
                CHECK(fast.per_length.size() == slow.per_length.size());
            }
        }
    }

    TEST_CASE("serial and parallel inversion scans agree")
    {
        Rng rng(3);
        std::vector<std::int8_t> b(3000);
        for (auto& x : b) {
            x = static_cast<std::int8_t>(rng.sign());
        }
        const BitSequence s(b);
        const auto a = inversion_ratio(s, 8, false, Exec::Serial);
        const auto p = inversion_ratio(s, 8, false, Exec::Parallel);
        CHECK(a.ratio_num == p.ratio_num);
        CHECK(a.ratio_den == p.ratio_den);
        CHECK(a.certificate->x_lo == p.certificate->x_lo);
        CHECK(a.per_length.size() == p.per_length.size());
        CHECK_THROWS_AS(inversion_ratio(BitSequence::constant(1 << 15, 1), 8), ConfigError);
    }

    TEST_CASE("alpha q decreases in alpha")
    {
        const double alphas[] = {0.2, 0.5, 1.5};
        const auto rep = alpha_q_estimate(make(Family::Uniform, 0.0, 4096, 5), 2048, 256, alphas, 2000);
        REQUIRE(rep.threshold_met);
        REQUIRE(rep.rows.size() == 3);
        CHECK(rep.rows[0].q_hat >= 0.5);
        CHECK(rep.rows[0].q_hat >= rep.rows[1].q_hat);
        CHECK(rep.rows[1].q_hat >= rep.rows[2].q_hat);
        CHECK(rep.rows[2].q_hat < 0.5);
        CHECK(rep.rows[2].q_hat < rep.rows[0].q_hat);
        CHECK_THROWS_AS(alpha_q_estimate(make(Family::Uniform, 0.0, 4096), 4000, 256, alphas, 2000), ConfigError);
    }

    TEST_CASE("certificate with one stage runs the bettor once per trial")
    {
        const auto spec = make(Family::Uniform, 0.0, 2048, 8);
        const auto rep = certify_inversion(spec, 1024, 256, 16.0, 1, 2000, 0.5);
        REQUIRE(rep.stages.size() == 1);
        const auto& st = rep.stages[0];
        CHECK(st.initiated == 2000);
        CHECK(st.lower_hits + st.upper_hits <= st.initiated);
        CHECK(rep.high_no_inversion <= rep.high);
        CHECK(rep.joint_no_inversion <= rep.conditional_no_inversion + 1e-12);
        CHECK_THROWS_AS(certify_inversion(spec, 1024, 256, 16.0, 20, 2000, 0.5), ConfigError);
    }

    TEST_CASE("delta_hat on uniform is near zero")
    {
        const auto spec = make(Family::Uniform, 0.0, 4096, 2);
        const auto strict = estimate_delta(spec, DeltaMode::Strict, 2000);
        CHECK(strict.delta_hat <= 3.0 * 0.05 + 3.0 / std::sqrt(2000.0));
        CHECK(strict.delta_hat >= 0.0);
        CHECK(!strict.cells.empty());
        CHECK_THROWS_AS(estimate_delta(spec, DeltaMode::Strict, 10), ConfigError);
    }

    TEST_CASE("entropy-conditioned strict mode falls back to weak with a warning")
    {
        auto spec = make(Family::EntropyConditioned, 0.0, 1024, 2);
        spec.k = 1.0;
        const auto rep = estimate_delta(spec, DeltaMode::Strict, 1000);
        CHECK(rep.mode == DeltaMode::WeakAveraged);
        CHECK(!rep.warning.empty());
    }

    TEST_CASE("analyses are thread-count independent")
    {
        const auto spec = make(Family::OptFRW, 0.1, 2048, 4);
        const std::uint64_t Ts[] = {1024, 2048};
        const auto a = deviation_stats(spec, Ts, 500, Exec::Serial);
        const auto b = deviation_stats(spec, Ts, 500, Exec::Parallel);
        CHECK(a.rows[1].median_dev == b.rows[1].median_dev);
        CHECK(a.rows[1].median_se == b.rows[1].median_se);
        const auto da = estimate_delta(spec, DeltaMode::Strict, 1000, {}, Exec::Serial);
        const auto db = estimate_delta(spec, DeltaMode::Strict, 1000, {}, Exec::Parallel);
        CHECK(da.delta_hat == db.delta_hat);
    }

    TEST_CASE("entropy-conditioned first half payoff")
    {
        auto spec = make(Family::EntropyConditioned, 0.0, 1024, 3);
        spec.k = 2.0;
        const auto m = first_half_sign_payoff(spec, 2000);
        CHECK(m.mean >= 0.1 * 2.0 * 32.0);
    }
}
