#include "fracwalk/fbm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fracwalk/errors.hpp"

namespace fracwalk {

void validate(const FbmParams& p)
{
    if (!(p.hurst > 0.0 && p.hurst < 1.0)) {
        throw ConfigError("hurst must lie in (0, 1)");
    }
    if (p.grid_len == 0 || p.grid_len > kMaxFbmGrid) {
        throw ConfigError("grid_len must lie in [1, 4096]");
    }
}

double fbm_cov(double t, double s, double hurst)
{
    const double e = 2.0 * hurst;
    return 0.5 * (std::pow(std::fabs(t), e) + std::pow(std::fabs(s), e) - std::pow(std::fabs(t - s), e));
}

FbmSampler::FbmSampler(std::vector<double> times, double hurst) : times_(std::move(times)), hurst_(hurst)
{
    const auto n = static_cast<Eigen::Index>(times_.size());
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            cov(i, j) = cov(j, i) = fbm_cov(times_[static_cast<std::size_t>(i)], times_[static_cast<std::size_t>(j)], hurst_);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        cov.diagonal().array() += 1e-10;
        llt.compute(cov);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("fbm covariance is not positive definite even with 1e-10 jitter");
        }
    }
    lower_ = llt.matrixL();
}

void FbmSampler::sample(Rng& rng, std::span<double> out) const
{
    const auto n = static_cast<Eigen::Index>(times_.size());
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = rng.normal();
    }
    Eigen::Map<Eigen::VectorXd>(out.data(), n).noalias() = lower_.triangularView<Eigen::Lower>() * z;
}

std::vector<double> FbmSampler::sample(Rng& rng) const
{
    std::vector<double> out(times_.size());
    sample(rng, out);
    return out;
}

std::vector<double> fbm_sample(const FbmParams& params, Rng& rng)
{
    validate(params);
    std::vector<double> times(params.grid_len);
    for (std::size_t i = 0; i < times.size(); ++i) {
        times[i] = static_cast<double>(i + 1);
    }
    return FbmSampler(std::move(times), params.hurst).sample(rng);
}

Eigen::MatrixXd fbm_empirical_covariance(const FbmParams& params, std::size_t paths, Exec exec)
{
    validate(params);
    if (paths == 0) {
        throw ConfigError("paths must be positive");
    }
    std::vector<double> times(params.grid_len);
    for (std::size_t i = 0; i < times.size(); ++i) {
        times[i] = static_cast<double>(i + 1);
    }
    const FbmSampler sampler(std::move(times), params.hurst);
    const auto n = static_cast<Eigen::Index>(params.grid_len);
    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = (paths + kChunk - 1) / kChunk;
    auto partial = map_trials<Eigen::MatrixXd>(
        chunks,
        [&](std::size_t c) {
            Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
            Eigen::VectorXd path(n);
            const std::size_t end = std::min(paths, (c + 1) * kChunk);
            for (std::size_t t = c * kChunk; t < end; ++t) {
                Rng rng = Rng::for_stream(params.seed, t);
                sampler.sample(rng, std::span<double>(path.data(), static_cast<std::size_t>(n)));
                acc.selfadjointView<Eigen::Lower>().rankUpdate(path);
            }
            return acc;
        },
        exec);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (const auto& p : partial) {
        sum += p;
    }
    sum = sum.selfadjointView<Eigen::Lower>();
    return sum / static_cast<double>(paths);
}

double fbm_sign_predictor_closed_form(double hurst, double window, double lag)
{
    const double e = 2.0 * hurst;
    const double coef = 0.5 * (std::pow(1.0 + 1.0 / lag, e) - 1.0 - std::pow(1.0 / lag, e));
    return coef * std::sqrt(2.0 / std::numbers::pi) * std::pow(lag * window, hurst);
}

std::vector<SignPredictorEstimate> fbm_sign_predictor_sweep(const FbmParams& params, std::size_t window,
                                                            std::span<const std::size_t> lags, std::size_t trials,
                                                            Exec exec)
{
    validate(params);
    if (window == 0 || lags.empty() || trials < 2) {
        throw ConfigError("sign predictor needs a positive window, at least one lag and two trials");
    }
    std::vector<std::size_t> steps;
    for (auto s : lags) {
        if (s == 0 || (s + 1) * window > params.grid_len) {
            throw ConfigError("window (s+1)*x must fit in grid_len");
        }
        steps.push_back(s);
        steps.push_back(s + 1);
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    std::vector<double> times;
    for (auto k : steps) {
        times.push_back(static_cast<double>(k * window));
    }
    const FbmSampler sampler(times, params.hurst);
    auto index_of = [&](std::size_t k) {
        return static_cast<std::size_t>(std::lower_bound(steps.begin(), steps.end(), k) - steps.begin());
    };

    // Trials are reduced in fixed chunks, in chunk order, so the sums do not
    // depend on the thread count.
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (trials + kChunk - 1) / kChunk;
    const std::size_t m = lags.size();
    auto partial = map_trials<std::vector<double>>(
        chunks,
        [&](std::size_t c) {
            std::vector<double> acc(2 * m, 0.0);
            std::vector<double> path(sampler.dimension());
            const std::size_t end = std::min(trials, (c + 1) * kChunk);
            for (std::size_t t = c * kChunk; t < end; ++t) {
                Rng rng = Rng::for_stream(params.seed, t);
                sampler.sample(rng, path);
                for (std::size_t li = 0; li < m; ++li) {
                    const double b = path[index_of(lags[li])];
                    const double next = path[index_of(lags[li] + 1)];
                    const double x = (b >= 0.0 ? 1.0 : -1.0) * (next - b);
                    acc[2 * li] += x;
                    acc[2 * li + 1] += x * x;
                }
            }
            return acc;
        },
        exec);
    std::vector<double> sums(2 * m, 0.0);
    for (const auto& p : partial) {
        for (std::size_t k = 0; k < 2 * m; ++k) {
            sums[k] += p[k];
        }
    }

    std::vector<SignPredictorEstimate> out;
    for (std::size_t li = 0; li < lags.size(); ++li) {
        const double sum = sums[2 * li];
        const double sq = sums[2 * li + 1];
        const double n = static_cast<double>(trials);
        const double mean = sum / n;
        const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
        SignPredictorEstimate e;
        e.lag = lags[li];
        e.estimate = mean;
        e.stderr = std::sqrt(var / n);
        e.closed_form = fbm_sign_predictor_closed_form(params.hurst, static_cast<double>(window),
                                                       static_cast<double>(lags[li]));
        e.trials = trials;
        out.push_back(e);
    }
    return out;
}

SignPredictorEstimate fbm_sign_predictor_payoff(const FbmParams& params, std::size_t window, std::size_t lag,
                                                std::size_t trials, Exec exec)
{
    const std::size_t lags[] = {lag};
    return fbm_sign_predictor_sweep(params, window, lags, trials, exec).front();
}

}  // namespace fracwalk
