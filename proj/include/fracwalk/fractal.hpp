#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "fracwalk/sequence.hpp"

namespace fracwalk {

inline constexpr double kAlphaMax = 0.5;
inline constexpr std::int64_t kFractalBaseHeight = 4;

/// Root theta in (0, 1] of 2((1+alpha)/2)^(1/theta) + alpha^(1/theta) = 1.
/// Bisection on x = 1/theta over [1, 64]; the left side is strictly
/// decreasing in x. Throws ConfigError for alpha outside [0, 1/2].
double solve_theta(double alpha);

/// Left side of the theta equation minus one, evaluated at x = 1/theta.
double theta_residual(double alpha, double inv_theta);

struct FractalParams {
    double alpha = 1.0 / 3.0;
    std::int64_t target_height = 1;
    std::int64_t base_height = kFractalBaseHeight;
};

/// Heights used by one recursion step for target height h > base:
/// the outer copies get `outer`, the inverted middle gets `inner`, and
/// 2*outer - inner == h.
struct FractalSplit {
    std::int64_t outer = 0;
    std::int64_t inner = 0;
};
FractalSplit fractal_split(double alpha, std::int64_t h);

struct FractalBuild {
    BitSequence sequence;
    /// End of the first outer copy and of the inverted middle at the top level.
    std::size_t first_end = 0;
    std::size_t middle_end = 0;
    /// Sorted boundaries of every node of the recursion, including 0 and the length.
    std::vector<std::size_t> split_points;
    double theta = 1.0;
};

/// Deterministic inverting sequence of height exactly target_height:
/// outer ++ inverted(inner) ++ outer, recursively, down to monotone runs of
/// +1 for heights at or below base_height.
FractalBuild build_fractal(const FractalParams& params);

/// Length of build_fractal(params).sequence without materializing it.
std::uint64_t fractal_length(const FractalParams& params);

/// ln h / ln L for the built length L.
double fractal_measured_exponent(const FractalParams& params);

nlohmann::json fractal_report(const FractalParams& params, std::uint64_t length);

}  // namespace fracwalk
