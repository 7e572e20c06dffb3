#include <cmath>

#include "doctest.h"

#include "fracwalk/analysis.hpp"
#include "fracwalk/errors.hpp"
#include "fracwalk/generators.hpp"

using namespace fracwalk;

namespace {

GeneratorSpec make(Family f, double delta, std::uint64_t T, std::uint64_t l = 0, std::uint64_t seed = 1)
{
    GeneratorSpec s;
    s.family = f;
    s.delta = delta;
    s.total_len = T;
    s.base_len = l;
    s.seed = seed;
    return s;
}

std::vector<std::int32_t> values_of(const GeneratorSpec& s, std::uint64_t seed, GenerationLog* log = nullptr,
                                    const Planting* plant = nullptr)
{
    Rng rng(seed);
    std::vector<std::int32_t> v;
    sample_values(s, rng, v, log, plant);
    return v;
}

}  // namespace

TEST_SUITE("generators")
{
    TEST_CASE("uniform T=1 is a fair coin")
    {
        const auto s = make(Family::Uniform, 0.0, 1);
        int plus = 0;
        for (std::uint64_t i = 0; i < 4000; ++i) {
            const auto v = values_of(s, i);
            REQUIRE(v.size() == 1);
            CHECK((v[0] == 1 || v[0] == -1));
            plus += v[0] == 1;
        }
        CHECK(std::abs(plus - 2000) < 4 * 32);
    }

    TEST_CASE("uniform bit mean at T=2^20")
    {
        const std::uint64_t T = 1 << 20;
        Rng rng(3);
        const auto seq = gen_uniform(make(Family::Uniform, 0.0, T), rng);
        CHECK(std::fabs(static_cast<double>(seq.total_height()) / T) <= 3.0 / std::sqrt(static_cast<double>(T)));
    }

    TEST_CASE("fixed seed gives identical sequences")
    {
        for (Family f : {Family::Uniform, Family::FRW, Family::OptFRW, Family::AFRW, Family::AOFRW}) {
            const auto s = make(f, 0.1, 4096);
            CHECK(values_of(s, 11) == values_of(s, 11));
            CHECK(values_of(s, 11) != values_of(s, 12));
        }
    }

    TEST_CASE("delta 0 never flips and matches uniform")
    {
        for (Family f : {Family::FRW, Family::OptFRW, Family::AFRW, Family::AOFRW}) {
            GenerationLog log;
            const auto v = values_of(make(f, 0.0, 1024, 4), 5, &log);
            CHECK(!log.merges.empty());
            for (const auto& m : log.merges) {
                CHECK(m.applied == 0);
                CHECK(m.augmented == 0);
            }
            CHECK(v == values_of(make(Family::Uniform, 0.0, 1024), 5));
        }
    }

    TEST_CASE("FRW merge with s1 = [+1, +1] at delta 0.5 spends one unit of height")
    {
        // Budget delta*|h1| = 1 is a height change; each flip moves the height
        // by 2, so the merge flips one -1 of s2 with probability 1/2.
        const auto s = make(Family::FRW, 0.5, 4, 2);
        const Planting plant{0, 2, 1};
        int flips = 0, trials = 0, zero_after_flip = 0;
        for (std::uint64_t seed = 0; seed < 4000; ++seed) {
            GenerationLog log;
            const auto v = values_of(s, seed, &log, &plant);
            REQUIRE(log.merges.size() == 1);
            const auto& m = log.merges[0];
            CHECK(m.requested == doctest::Approx(0.5));
            CHECK(m.direction == 1);
            CHECK(m.applied <= 1);
            CHECK(v[0] == 1);
            CHECK(v[1] == 1);
            if (m.applied == 1) {
                CHECK(m.height_change == 2);
                if (v[2] + v[3] == 0) {
                    ++zero_after_flip;
                }
            }
            flips += static_cast<int>(m.applied);
            ++trials;
        }
        // s2 = [+1, +1] leaves nothing to flip, so E[flips] = 0.5 * 3/4.
        CHECK(std::fabs(flips / static_cast<double>(trials) - 0.375) < 0.03);
        CHECK(zero_after_flip > 0);
    }

    TEST_CASE("augmented merge past the eligible entries")
    {
        // s1 = s2 = [-1, -1]: direction -1, budget 1.8 height, no +1 to flip,
        // so every flip becomes an Augment step taking one entry to -3.
        const auto s = make(Family::AFRW, 0.9, 4, 2);
        const Planting plant{0, 4, -1};
        int augmented = 0;
        const int trials = 4000;
        for (int seed = 0; seed < trials; ++seed) {
            GenerationLog log;
            const auto v = values_of(s, static_cast<std::uint64_t>(seed), &log, &plant);
            const auto& m = log.merges.at(0);
            CHECK(m.applied == 0);
            CHECK(m.augmented <= 1);
            std::int64_t h = 0;
            for (auto x : v) {
                h += x;
            }
            CHECK(h == -4 - 2 * m.augmented);
            if (m.augmented == 1) {
                CHECK((v[2] == -3 || v[3] == -3));
            }
            augmented += static_cast<int>(m.augmented);
        }
        CHECK(std::fabs(augmented / static_cast<double>(trials) - 0.9) < 0.03);
    }

    TEST_CASE("AFRW without Augment is FRW")
    {
        int compared = 0;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            GenerationLog log;
            const auto a = values_of(make(Family::AFRW, 0.1, 1024, 64), seed, &log);
            if (log.total_augmented() != 0) {
                continue;
            }
            for (auto x : a) {
                CHECK((x == 1 || x == -1));
            }
            CHECK(a == values_of(make(Family::FRW, 0.1, 1024, 64), seed));
            ++compared;
        }
        CHECK(compared > 40);
    }

    TEST_CASE("AFRW at the default base length never augments over 10^5 merges")
    {
        const auto s = make(Family::AFRW, 0.1, 1 << 14);
        std::size_t merges = 0;
        std::int64_t augmented = 0;
        for (std::uint64_t seed = 0; merges < 100'000; ++seed) {
            GenerationLog log;
            values_of(s, seed, &log);
            merges += log.merges.size();
            augmented += log.total_augmented();
        }
        CHECK(augmented == 0);
    }

    TEST_CASE("mean FRW height change equals delta |h1|")
    {
        const auto s = make(Family::FRW, 0.3, 256, 128);
        double got = 0.0, want = 0.0;
        for (std::uint64_t seed = 0; seed < 4000; ++seed) {
            GenerationLog log;
            const auto v = values_of(s, seed, &log);
            std::int64_t h1 = 0;
            for (std::size_t i = 0; i < 128; ++i) {
                h1 += v[i];
            }
            got += static_cast<double>(log.merges.at(0).height_change) * (h1 > 0 ? 1 : -1);
            want += 0.3 * static_cast<double>(std::llabs(h1));
        }
        CHECK(got / want == doctest::Approx(1.0).epsilon(0.03));
    }

    TEST_CASE("Bernoulli flip mode matches the mean of ExactCount")
    {
        auto mean_change = [](FlipMode mode) {
            auto s = make(Family::OptFRW, 0.5, 512, 256);
            s.flip_mode = mode;
            double sum = 0.0;
            for (std::uint64_t seed = 0; seed < 4000; ++seed) {
                GenerationLog log;
                values_of(s, seed, &log);
                sum += static_cast<double>(std::abs(log.merges.at(0).height_change));
            }
            return sum / 4000.0;
        };
        const double exact = mean_change(FlipMode::ExactCount);
        CHECK(exact == doctest::Approx(0.5 * 16.0).epsilon(0.05));
        CHECK(mean_change(FlipMode::Bernoulli) == doctest::Approx(exact).epsilon(0.08));
    }

    TEST_CASE("entropy conditioned")
    {
        auto s = make(Family::EntropyConditioned, 0.0, 1024);
        s.k = 0.0;
        CHECK(values_of(s, 4) == values_of(make(Family::Uniform, 0.0, 1024), 4));
        s.k = 1.5;
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            std::int64_t h = 0;
            for (auto x : values_of(s, seed)) {
                h += x;
            }
            CHECK(std::llabs(h) >= 48);
        }
        s.k = 12.0;
        CHECK_THROWS_AS(values_of(s, 1), InfeasibleError);
    }

    TEST_CASE("entropy threshold is lifted to the parity of T")
    {
        CHECK(entropy_threshold(1.0, 8) == 4);
        CHECK(entropy_threshold(1.0, 16) == 4);
        CHECK(entropy_threshold(1.5, 1024) == 48);
        CHECK(entropy_threshold(0.0, 1024) == 0);
    }

    TEST_CASE("spec validation")
    {
        CHECK_THROWS_AS(validate(make(Family::AFRW, 2.0, 1024)), ConfigError);
        CHECK_THROWS_AS(validate(make(Family::FRW, -0.1, 1024)), ConfigError);
        CHECK_THROWS_AS(validate(make(Family::FRW, 0.1, 1000)), ConfigError);
        CHECK_THROWS_AS(validate(make(Family::FRW, 0.1, 1024, 3)), ConfigError);
        CHECK_THROWS_AS(validate(make(Family::FRW, 0.1, 1024, 2048)), ConfigError);
        auto b = make(Family::AOFRW, 0.1, 1024);
        b.flip_mode = FlipMode::Bernoulli;
        CHECK_THROWS_AS(validate(b), ConfigError);
        auto e = make(Family::EntropyConditioned, 0.0, 16);
        e.k = 5.0;
        CHECK_THROWS_AS(validate(e), ConfigError);
    }

    TEST_CASE("default base lengths")
    {
        CHECK(default_base_len(Family::FRW, 1 << 14) == 2048);
        CHECK(default_base_len(Family::OptFRW, 1 << 16) == 4096);
        CHECK(default_base_len(Family::OptFRW, 1 << 10) == 256);
        CHECK(default_base_len(Family::FRW, 64) == 64);
        CHECK(default_base_len(Family::Uniform, 64) == 64);
    }

    TEST_CASE("spec JSON round trip rejects unknown fields")
    {
        auto s = make(Family::AOFRW, 0.25, 2048, 16, 99);
        CHECK(spec_from_json(to_json(s)) == s);
        auto j = to_json(s);
        j["extra"] = 1;
        CHECK_THROWS_AS(spec_from_json(j), ConfigError);
        CHECK(parse_family("Opt-FRW") == Family::OptFRW);
        CHECK_THROWS_AS(parse_family("brownian"), ConfigError);
    }

    TEST_CASE("serial and parallel trial farms agree")
    {
        for (Family f : {Family::Uniform, Family::FRW, Family::AOFRW}) {
            const auto s = make(f, 0.1, 2048);
            CHECK(sample_heights(s, 2048, 300, Exec::Serial) == sample_heights(s, 2048, 300, Exec::Parallel));
        }
    }
}
