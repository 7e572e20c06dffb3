#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fracwalk {

// Every Monte Carlo estimator is a map over independent trials followed by a
// single-threaded reduction. Trial i always draws from derive_seed(seed, i),
// so the Serial and Parallel paths return identical vectors; the serial path
// is the reference the tests compare against.
enum class Exec { Serial, Parallel };

inline int worker_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

inline void set_worker_count(int n)
{
#ifdef _OPENMP
    if (n > 0) {
        omp_set_num_threads(n);
    }
#else
    (void)n;
#endif
}

template <typename R, typename Fn>
std::vector<R> map_trials_serial(std::size_t n, Fn&& fn)
{
    std::vector<R> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = fn(i);
    }
    return out;
}

template <typename R, typename Fn>
std::vector<R> map_trials_parallel(std::size_t n, Fn&& fn)
{
    std::vector<R> out(n);
    const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    }
    return out;
}

template <typename R, typename Fn>
std::vector<R> map_trials(std::size_t n, Fn&& fn, Exec exec = Exec::Parallel)
{
    if (exec == Exec::Serial) {
        return map_trials_serial<R>(n, fn);
    }
    return map_trials_parallel<R>(n, fn);
}

}  // namespace fracwalk
