#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fracwalk/parallel.hpp"
#include "fracwalk/rng.hpp"

namespace fracwalk {

inline constexpr std::size_t kMaxFbmGrid = 4096;

struct FbmParams {
    double hurst = 0.5;
    std::size_t grid_len = 64;  ///< samples at t = 1..grid_len
    std::uint64_t seed = 0;
};

void validate(const FbmParams& p);

/// E[B_H(t) B_H(s)] = (|t|^2H + |s|^2H - |t-s|^2H) / 2.
double fbm_cov(double t, double s, double hurst);

/// Exact Gaussian sampler for B_H at a fixed set of positive times, via the
/// Cholesky factor of their covariance. The factor is computed once and is
/// read-only afterwards, so one sampler can serve parallel trials.
class FbmSampler {
public:
    FbmSampler(std::vector<double> times, double hurst);

    std::size_t dimension() const noexcept { return times_.size(); }
    std::span<const double> times() const noexcept { return times_; }
    const Eigen::MatrixXd& factor() const noexcept { return lower_; }

    /// Writes one path into out (size dimension()).
    void sample(Rng& rng, std::span<double> out) const;
    std::vector<double> sample(Rng& rng) const;

private:
    std::vector<double> times_;
    double hurst_;
    Eigen::MatrixXd lower_;
};

/// (B_H(1), ..., B_H(n)).
std::vector<double> fbm_sample(const FbmParams& params, Rng& rng);

/// Monte Carlo E[B_H(i) B_H(j)] over `paths` paths at t = 1..grid_len (the
/// mean is known to be zero, so products are not centered).
Eigen::MatrixXd fbm_empirical_covariance(const FbmParams& params, std::size_t paths, Exec exec = Exec::Parallel);

struct SignPredictorEstimate {
    std::size_t lag = 1;      ///< s: the predictor uses the sign of B_H(s x)
    double estimate = 0.0;    ///< Monte Carlo mean of sign(B(sx)) (B((s+1)x) - B(sx))
    double stderr = 0.0;
    double closed_form = 0.0;
    std::size_t trials = 0;
};

/// (1/2)((1 + 1/s)^2H - 1 - (1/s)^2H) sqrt(2/pi) (s x)^H.
double fbm_sign_predictor_closed_form(double hurst, double window, double lag);

/// Predicts the window (s x, (s+1) x] by the sign of B_H(s x). Requires
/// (s + 1) x <= grid_len. Trial i uses derive_seed(params.seed, i).
SignPredictorEstimate fbm_sign_predictor_payoff(const FbmParams& params, std::size_t window, std::size_t lag,
                                                std::size_t trials, Exec exec = Exec::Parallel);

/// Same estimator for several lags on shared paths (common random numbers),
/// so differences between lags are estimated with low variance.
std::vector<SignPredictorEstimate> fbm_sign_predictor_sweep(const FbmParams& params, std::size_t window,
                                                            std::span<const std::size_t> lags, std::size_t trials,
                                                            Exec exec = Exec::Parallel);

}  // namespace fracwalk
