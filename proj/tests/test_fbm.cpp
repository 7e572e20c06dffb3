#include <cmath>

#include "doctest.h"

#include "fracwalk/errors.hpp"
#include "fracwalk/fbm.hpp"

using namespace fracwalk;

TEST_SUITE("fbm")
{
    TEST_CASE("covariance examples")
    {
        for (double H : {0.2, 0.5, 0.8}) {
            CHECK(fbm_cov(1.0, 1.0, H) == doctest::Approx(1.0));
            CHECK(fbm_cov(1.0, 0.0, H) == doctest::Approx(0.0));
        }
        CHECK(fbm_cov(2.0, 1.0, 0.5) == doctest::Approx(1.0));
    }

    TEST_CASE("fixed seed gives identical paths")
    {
        FbmParams p;
        p.hurst = 0.7;
        p.grid_len = 50;
        Rng a(3), b(3);
        CHECK(fbm_sample(p, a) == fbm_sample(p, b));
    }

    TEST_CASE("Brownian increments are uncorrelated")
    {
        FbmParams p;
        p.hurst = 0.5;
        p.grid_len = 3;
        const FbmSampler s({1.0, 2.0, 3.0}, 0.5);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (std::uint64_t t = 0; t < 10'000; ++t) {
            Rng rng = Rng::for_stream(9, t);
            const auto b = s.sample(rng);
            const double x = b[1] - b[0], y = b[2] - b[1];
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        CHECK(std::fabs(sxy / std::sqrt(sxx * syy)) < 0.03);
    }

    TEST_CASE("empirical variance grows like n^(2H)")
    {
        FbmParams p;
        p.hurst = 0.7;
        p.grid_len = 64;
        p.seed = 4;
        const auto c = fbm_empirical_covariance(p, 20'000);
        CHECK(c(63, 63) / std::pow(64.0, 1.4) == doctest::Approx(1.0).epsilon(0.05));
        CHECK(c(9, 19) / fbm_cov(10.0, 20.0, 0.7) == doctest::Approx(1.0).epsilon(0.05));
    }

    TEST_CASE("serial and parallel covariance agree")
    {
        FbmParams p;
        p.hurst = 0.6;
        p.grid_len = 16;
        const auto a = fbm_empirical_covariance(p, 3000, Exec::Serial);
        const auto b = fbm_empirical_covariance(p, 3000, Exec::Parallel);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    }

    TEST_CASE("sign predictor")
    {
        FbmParams p;
        p.hurst = 0.5;
        p.grid_len = 32;
        p.seed = 1;
        CHECK(fbm_sign_predictor_closed_form(0.5, 16, 1) == doctest::Approx(0.0));
        const auto e = fbm_sign_predictor_payoff(p, 16, 1, 20'000);
        CHECK(std::fabs(e.estimate) < 4.0 * e.stderr);

        p.hurst = 0.6;
        p.grid_len = 144;
        const std::size_t lags[] = {1, 8};
        const auto est = fbm_sign_predictor_sweep(p, 16, lags, 200'000);
        CHECK(est[0].estimate == doctest::Approx(est[0].closed_form).epsilon(0.1));
        CHECK(est[0].closed_form > est[1].closed_form);
        CHECK(est[0].estimate > est[1].estimate);
    }

    TEST_CASE("invalid parameters")
    {
        FbmParams p;
        p.hurst = 1.0;
        CHECK_THROWS_AS(validate(p), ConfigError);
        p.hurst = 0.5;
        p.grid_len = 5000;
        CHECK_THROWS_AS(validate(p), ConfigError);
        p.grid_len = 16;
        const std::size_t lags[] = {1};
        CHECK_THROWS_AS(fbm_sign_predictor_sweep(p, 16, lags, 100), ConfigError);
    }
}
