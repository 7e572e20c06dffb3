#include "fracwalk/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "fracwalk/errors.hpp"

namespace fracwalk {

double theta_residual(double alpha, double inv_theta)
{
    return 2.0 * std::pow((1.0 + alpha) / 2.0, inv_theta) + std::pow(alpha, inv_theta) - 1.0;
}

double solve_theta(double alpha)
{
    if (!(alpha >= 0.0 && alpha <= kAlphaMax)) {
        throw ConfigError("alpha must lie in [0, 1/2]");
    }
    double lo = 1.0;
    double hi = 64.0;
    if (theta_residual(alpha, lo) <= 0.0) {
        return 1.0;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (theta_residual(alpha, mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 2.0 / (lo + hi);
}

FractalSplit fractal_split(double alpha, std::int64_t h)
{
    auto inner = static_cast<std::int64_t>(std::ceil(alpha * static_cast<double>(h) - 1e-12));
    inner = std::max<std::int64_t>(inner, 1);
    // Parity fix so both outer copies are identical.
    if ((h + inner) % 2 != 0) {
        ++inner;
    }
    return {(h + inner) / 2, inner};
}

namespace {

void check(const FractalParams& p)
{
    if (!(p.alpha > 0.0 && p.alpha <= kAlphaMax)) {
        throw ConfigError("fractal alpha must lie in (0, 1/2]");
    }
    if (p.target_height < 1) {
        throw ConfigError("fractal target height must be at least 1");
    }
    if (p.base_height < kFractalBaseHeight) {
        throw ConfigError("fractal base height must be at least 4");
    }
}

class Builder {
public:
    explicit Builder(const FractalParams& p) : p_(p) {}

    // Appends the fractal of height h (sign +1) or its inversion (sign -1).
    void emit(std::int64_t h, int sign, std::vector<std::int8_t>& out)
    {
        splits_.push_back(out.size());
        if (h <= p_.base_height) {
            out.insert(out.end(), static_cast<std::size_t>(h), static_cast<std::int8_t>(sign));
            return;
        }
        const auto [outer, inner] = fractal_split(p_.alpha, h);
        const std::size_t start = out.size();
        const std::size_t first_split = splits_.size();
        emit(outer, sign, out);
        const std::size_t last_split = splits_.size();
        const std::size_t outer_len = out.size() - start;
        emit(inner, -sign, out);
        // Second outer copy is identical to the first, splits included.
        const std::size_t to = out.size();
        out.insert(out.end(), out.begin() + static_cast<std::ptrdiff_t>(start),
                   out.begin() + static_cast<std::ptrdiff_t>(start + outer_len));
        for (std::size_t i = first_split; i < last_split; ++i) {
            splits_.push_back(splits_[i] - start + to);
        }
    }

    std::vector<std::size_t>& splits() { return splits_; }

private:

    const FractalParams& p_;
    std::vector<std::size_t> splits_;
};

std::uint64_t length_memo(const FractalParams& p, std::int64_t h, std::unordered_map<std::int64_t, std::uint64_t>& memo)
{
    if (h <= p.base_height) {
        return static_cast<std::uint64_t>(h);
    }
    if (auto it = memo.find(h); it != memo.end()) {
        return it->second;
    }
    const auto [outer, inner] = fractal_split(p.alpha, h);
    const std::uint64_t len = 2 * length_memo(p, outer, memo) + length_memo(p, inner, memo);
    memo.emplace(h, len);
    return len;
}

}  // namespace

FractalBuild build_fractal(const FractalParams& params)
{
    check(params);
    FractalBuild out;
    out.theta = solve_theta(params.alpha);
    std::vector<std::int8_t> bits;
    bits.reserve(fractal_length(params));
    Builder b(params);
    b.emit(params.target_height, 1, bits);
    if (params.target_height > params.base_height) {
        const auto [outer, inner] = fractal_split(params.alpha, params.target_height);
        FractalParams po = params;
        po.target_height = outer;
        FractalParams pi = params;
        pi.target_height = inner;
        out.first_end = fractal_length(po);
        out.middle_end = out.first_end + fractal_length(pi);
    } else {
        out.first_end = bits.size();
        out.middle_end = bits.size();
    }
    auto& splits = b.splits();
    splits.push_back(bits.size());
    std::sort(splits.begin(), splits.end());
    splits.erase(std::unique(splits.begin(), splits.end()), splits.end());
    out.split_points = std::move(splits);
    out.sequence = BitSequence(std::move(bits));
    return out;
}

std::uint64_t fractal_length(const FractalParams& params)
{
    check(params);
    std::unordered_map<std::int64_t, std::uint64_t> memo;
    return length_memo(params, params.target_height, memo);
}

double fractal_measured_exponent(const FractalParams& params)
{
    const auto len = fractal_length(params);
    if (len <= 1) {
        return 1.0;
    }
    return std::log(static_cast<double>(params.target_height)) / std::log(static_cast<double>(len));
}

nlohmann::json fractal_report(const FractalParams& params, std::uint64_t length)
{
    const double measured = length > 1 ? std::log(static_cast<double>(params.target_height)) /
                                             std::log(static_cast<double>(length))
                                       : 1.0;
    return nlohmann::json{
        {"alpha", params.alpha},
        {"theta", solve_theta(params.alpha)},
        {"h", params.target_height},
        {"length", length},
        {"measured_exponent", measured},
    };
}

}  // namespace fracwalk
