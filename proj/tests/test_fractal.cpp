#include <cmath>

#include "doctest.h"

#include "fracwalk/analysis.hpp"
#include "fracwalk/errors.hpp"
#include "fracwalk/fractal.hpp"

using namespace fracwalk;

TEST_SUITE("fractal")
{
    TEST_CASE("theta anchors")
    {
        CHECK(std::fabs(solve_theta(0.0) - 1.0) < 1e-9);
        CHECK(std::fabs(solve_theta(1.0 / 3.0) - 0.5) < 1e-9);
        CHECK_THROWS_AS(solve_theta(0.6), ConfigError);
        CHECK_THROWS_AS(solve_theta(-0.1), ConfigError);
    }

    TEST_CASE("theta at 0.2 against an independent bisection")
    {
        // f(x) = 2 (0.6)^x + 0.2^x - 1, decreasing in x.
        double lo = 1.0, hi = 64.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (2.0 * std::pow(0.6, mid) + std::pow(0.2, mid) - 1.0 > 0.0 ? lo : hi) = mid;
        }
        CHECK(solve_theta(0.2) == doctest::Approx(1.0 / lo).epsilon(1e-12));
        CHECK(std::fabs(theta_residual(0.2, 1.0 / solve_theta(0.2))) < 1e-10);
    }

    TEST_CASE("theta decreases in alpha")
    {
        double prev = 1.0 + 1e-12;
        for (int k = 0; k <= 20; ++k) {
            const double t = solve_theta(0.5 * k / 20.0);
            CHECK(t < prev);
            prev = t;
        }
    }

    TEST_CASE("base case and split arithmetic")
    {
        FractalParams p;
        p.target_height = 1;
        const auto b = build_fractal(p);
        CHECK(b.sequence.size() == 1);
        CHECK(b.sequence[0] == 1);
        for (std::int64_t h = 1; h <= 4; ++h) {
            p.target_height = h;
            CHECK(fractal_length(p) == static_cast<std::uint64_t>(h));
        }
        for (std::int64_t h = 5; h < 300; ++h) {
            const auto s = fractal_split(1.0 / 3.0, h);
            CHECK(2 * s.outer - s.inner == h);
            CHECK(s.inner >= 0);
            CHECK(s.outer < h);
        }
    }

    TEST_CASE("heights are exact and lengths self-consistent")
    {
        for (double a : {0.05, 0.15, 0.25, 1.0 / 3.0}) {
            for (std::int64_t h : {5, 8, 17, 64, 255, 1024}) {
                FractalParams p;
                p.alpha = a;
                p.target_height = h;
                const auto b = build_fractal(p);
                CHECK(b.sequence.total_height() == h);
                CHECK(b.sequence.size() == fractal_length(p));
                CHECK(b.split_points.front() == 0);
                CHECK(b.split_points.back() == b.sequence.size());
            }
        }
    }

    TEST_CASE("dyadic inversion ratio at alpha 1/3")
    {
        FractalParams p;
        p.target_height = 1 << 10;
        const auto b = build_fractal(p);
        CHECK(inversion_ratio(b.sequence, kDefaultMinLen, true).overall_ratio >= 0.3);
    }

    TEST_CASE("length exponent near 1/theta")
    {
        FractalParams p;
        p.target_height = 1 << 14;
        const double e = std::log(static_cast<double>(fractal_length(p))) / std::log(16384.0);
        CHECK(std::fabs(e / 2.0 - 1.0) < 0.15);
        CHECK(fractal_measured_exponent(p) == doctest::Approx(1.0 / e));
    }

    TEST_CASE("invalid parameters")
    {
        FractalParams p;
        p.target_height = 0;
        CHECK_THROWS_AS(build_fractal(p), ConfigError);
        p.target_height = 10;
        p.alpha = 0.7;
        CHECK_THROWS_AS(build_fractal(p), ConfigError);
    }
}
