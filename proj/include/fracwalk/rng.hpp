#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace fracwalk {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// master seed plus coordinates (trial index, sweep cell, ...).
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for stream `index` under `master`. Distinct indices give
/// statistically independent streams; the mapping is stable across builds.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept
{
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> coords) noexcept
{
    std::uint64_t s = mix64(master);
    for (auto c : coords) {
        s = derive_seed(s, c);
    }
    return s;
}

/// Random stream used by every sampler. Integer and uniform helpers are
/// written out so that sequences are identical across standard libraries;
/// only normal() defers to std::normal_distribution.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

    static Rng for_stream(std::uint64_t master, std::uint64_t index)
    {
        return Rng(derive_seed(master, index));
    }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound)
    {
        // Lemire's multiply-shift with rejection of the biased low range.
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform01() < p; }

    /// +1 or -1 with equal probability.
    int sign() { return (engine_() >> 63) ? 1 : -1; }

    double normal() { return normal_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fracwalk
