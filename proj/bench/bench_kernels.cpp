// Serial reference vs OpenMP kernels. Arg(0) is serial, Arg(1) parallel.

#include <benchmark/benchmark.h>

#include "fracwalk/analysis.hpp"
#include "fracwalk/fbm.hpp"
#include "fracwalk/generators.hpp"

using namespace fracwalk;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::Serial : Exec::Parallel; }

void trial_farm(benchmark::State& st)
{
    GeneratorSpec s;
    s.family = Family::OptFRW;
    s.delta = 0.1;
    s.seed = 1;
    for (auto _ : st) {
        benchmark::DoNotOptimize(sample_heights(s, 1 << 14, 256, exec_of(st)));
    }
    st.SetItemsProcessed(st.iterations() * 256 * (1 << 14));
}
BENCHMARK(trial_farm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void inversion_scan(benchmark::State& st)
{
    Rng rng(2);
    std::vector<std::int8_t> bits(1 << 12);
    for (auto& b : bits) {
        b = static_cast<std::int8_t>(rng.sign());
    }
    const BitSequence seq(bits);
    for (auto _ : st) {
        benchmark::DoNotOptimize(inversion_ratio(seq, kDefaultMinLen, false, exec_of(st)));
    }
}
BENCHMARK(inversion_scan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void strict_delta(benchmark::State& st)
{
    GeneratorSpec s;
    s.family = Family::FRW;
    s.delta = 0.1;
    s.total_len = 1 << 12;
    s.seed = 3;
    for (auto _ : st) {
        benchmark::DoNotOptimize(estimate_delta(s, DeltaMode::Strict, 1000, {}, exec_of(st)));
    }
}
BENCHMARK(strict_delta)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void fbm_covariance(benchmark::State& st)
{
    FbmParams p;
    p.hurst = 0.6;
    p.grid_len = 64;
    for (auto _ : st) {
        benchmark::DoNotOptimize(fbm_empirical_covariance(p, 8192, exec_of(st)));
    }
}
BENCHMARK(fbm_covariance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
