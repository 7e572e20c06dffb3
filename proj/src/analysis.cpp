#include "fracwalk/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "fracwalk/errors.hpp"
#include "fracwalk/predictors.hpp"

namespace fracwalk {

namespace {

// Stream tags, so that estimators sharing a spec seed draw unrelated samples.
constexpr std::uint64_t kTagAlphaQFirst = 0xa1f0;
constexpr std::uint64_t kTagAlphaQSecond = 0xa1f1;
constexpr std::uint64_t kTagCertify = 0xce27;
constexpr std::uint64_t kTagStrict = 0x5791;
constexpr std::uint64_t kTagWeak = 0x3ea4;
constexpr std::uint64_t kTagAdaptive = 0xada9;
constexpr std::uint64_t kTagFirstHalf = 0xf1a1;
constexpr std::uint64_t kTagWeighted = 0x3e16;
constexpr std::uint64_t kTagBlock = 0xb10c;
constexpr std::uint64_t kTagBootstrap = 0xb007;

thread_local std::vector<std::int32_t> t_values;
thread_local std::vector<std::int64_t> t_prefix;

double median_of(std::vector<double>& v)
{
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (n % 2 == 1) {
        return hi;
    }
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double sample_sd(std::span<const double> v)
{
    const std::size_t n = v.size();
    if (n < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

std::vector<std::size_t> dyadic_range(std::size_t lo, std::size_t hi)
{
    std::vector<std::size_t> out;
    for (std::size_t v = std::bit_ceil(std::max<std::size_t>(lo, 1)); v <= hi; v <<= 1) {
        out.push_back(v);
    }
    return out;
}

/// Dyadic 16 .. T/2, or 1 .. T/2 for sequences too short for that.
std::vector<std::size_t> default_scales(std::size_t T)
{
    auto out = dyadic_range(16, T / 2);
    if (out.empty()) {
        out = dyadic_range(1, T / 2);
    }
    return out;
}

GeneratorSpec at_length(GeneratorSpec spec, std::uint64_t T)
{
    spec.total_len = T;
    return resolve(spec);
}

void check_interval(const GeneratorSpec& spec, std::size_t lo, std::size_t len)
{
    if (len == 0 || lo + len > spec.total_len) {
        throw ConfigError("interval [" + std::to_string(lo) + ", " + std::to_string(lo + len) +
                          ") does not fit total_len " + std::to_string(spec.total_len));
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Deviation statistics

DeviationRow summarize_heights(std::uint64_t T, std::span<const std::int64_t> heights, std::uint64_t bootstrap_seed,
                               std::size_t bootstrap_reps)
{
    DeviationRow r;
    r.T = T;
    r.trials = heights.size();
    if (heights.empty()) {
        throw ConfigError("no heights to summarize");
    }
    const auto n = static_cast<double>(heights.size());
    std::vector<double> abs(heights.size());
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < heights.size(); ++i) {
        const double a = std::fabs(static_cast<double>(heights[i]));
        abs[i] = a;
        s1 += a;
        s2 += a * a;
        s4 += a * a * a * a;
    }
    r.mean_dev = s1 / n;
    r.second_moment = s2 / n;
    r.fourth_moment = s4 / n;
    r.rms_dev = std::sqrt(r.second_moment);
    r.mean_se = sample_sd(abs) / std::sqrt(n);
    const double quarter = 0.25 * r.mean_dev;
    r.anti_concentration =
        static_cast<double>(std::count_if(abs.begin(), abs.end(), [&](double a) { return a >= quarter; })) / n;

    std::vector<double> work = abs;
    r.median_dev = median_of(work);
    if (bootstrap_reps > 1) {
        Rng rng(bootstrap_seed);
        std::vector<double> meds(bootstrap_reps);
        for (auto& m : meds) {
            for (auto& w : work) {
                w = abs[rng.below(abs.size())];
            }
            m = median_of(work);
        }
        r.median_se = sample_sd(meds);
    }
    return r;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) {
        throw ConfigError("line fit needs at least two points");
    }
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0) {
        throw ConfigError("line fit needs distinct x values");
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (f.intercept + f.slope * x[i]);
        ss_res += e * e;
    }
    f.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    f.slope_se = n > 2 ? std::sqrt(ss_res / static_cast<double>(n - 2) / sxx) : 0.0;
    return f;
}

LinearFit fit_through_origin(std::span<const double> x, std::span<const double> y)
{
    const std::size_t n = x.size();
    if (n < 1 || y.size() != n) {
        throw ConfigError("fit needs at least one point");
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (sxx <= 0.0) {
        throw ConfigError("fit needs a nonzero x");
    }
    LinearFit f;
    f.slope = sxy / sxx;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - f.slope * x[i];
        ss_res += e * e;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    f.slope_se = n > 1 ? std::sqrt(ss_res / static_cast<double>(n - 1) / sxx) : 0.0;
    return f;
}

bool DeviationReport::ordering_ok() const
{
    return std::all_of(rows.begin(), rows.end(), [](const DeviationRow& r) {
        return r.median_dev <= 3.0 * r.mean_dev && r.mean_dev <= r.rms_dev * (1.0 + 1e-12);
    });
}

std::vector<std::int64_t> sample_heights(GeneratorSpec spec, std::uint64_t T, std::size_t trials, Exec exec)
{
    const GeneratorSpec s = at_length(spec, T);
    const std::uint64_t row_seed = derive_seed(spec.seed, {T});
    return map_trials<std::int64_t>(
        trials,
        [&](std::size_t i) {
            Rng rng = Rng::for_stream(row_seed, i);
            return sample_height(s, rng);
        },
        exec);
}

DeviationReport deviation_stats(const GeneratorSpec& spec, std::span<const std::uint64_t> T_list, std::size_t trials,
                                Exec exec)
{
    if (trials < kMinDeviationTrials) {
        throw ConfigError("deviation_stats needs at least 100 trials, got " + std::to_string(trials));
    }
    if (T_list.empty()) {
        throw ConfigError("deviation_stats needs at least one T");
    }
    for (auto T : T_list) {
        at_length(spec, T);
    }
    DeviationReport rep;
    rep.spec = at_length(spec, T_list.front());
    rep.spec.base_len = spec.base_len;
    std::vector<double> lx, ly;
    for (auto T : T_list) {
        const auto heights = sample_heights(spec, T, trials, exec);
        rep.rows.push_back(summarize_heights(T, heights, derive_seed(spec.seed, {kTagBootstrap, T})));
        if (rep.rows.back().median_dev > 0.0) {
            lx.push_back(std::log(static_cast<double>(T)));
            ly.push_back(std::log(rep.rows.back().median_dev));
        }
    }
    if (lx.size() >= 2) {
        const auto fit = fit_line(lx, ly);
        rep.fitted_exponent = fit.slope;
        rep.exponent_se = fit.slope_se;
    }
    return rep;
}

double afrw_moment_oracle(double delta, std::uint64_t l, unsigned depth_i)
{
    const double r = 1.0 + delta;
    return std::pow(1.0 + r * r, static_cast<double>(depth_i)) * static_cast<double>(l);
}

double upper_bound_rms(double delta, std::uint64_t T)
{
    if (!is_pow2(T)) {
        throw ConfigError("upper_bound_rms needs T to be a power of two");
    }
    return std::sqrt(static_cast<double>(T)) * (1.0 + 0.5 * delta * static_cast<double>(log2_exact(T)));
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

constexpr unsigned kMaxEnumerationBits = 22;

double key_of(double v) { return std::round(v * 1e9) / 1e9; }

template <typename Fn>
HeightDistribution enumerate(unsigned l, unsigned depth_i, Fn&& height_of)
{
    if (l == 0) {
        throw ConfigError("base length must be positive");
    }
    const std::size_t blocks = std::size_t{1} << depth_i;
    const std::size_t bits = blocks * l;
    if (bits > kMaxEnumerationBits) {
        throw ConfigError("enumeration limited to 2^22 fillings");
    }
    const double p = std::ldexp(1.0, -static_cast<int>(bits));
    std::vector<double> base(blocks);
    HeightDistribution dist;
    const std::uint64_t lmask = (std::uint64_t{1} << l) - 1;
    for (std::uint64_t cfg = 0; cfg < (std::uint64_t{1} << bits); ++cfg) {
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto ones = std::popcount((cfg >> (b * l)) & lmask);
            base[b] = 2.0 * ones - static_cast<double>(l);
        }
        dist[key_of(height_of(base))] += p;
    }
    return dist;
}

}  // namespace

HeightDistribution afrw_recursion_distribution(double delta, unsigned l, unsigned depth_i)
{
    std::vector<double> work;
    return enumerate(l, depth_i, [&](const std::vector<double>& base) {
        work = base;
        for (std::size_t n = work.size(); n > 1; n /= 2) {
            for (std::size_t j = 0; j < n / 2; ++j) {
                work[j] = (1.0 + delta) * work[2 * j] + work[2 * j + 1];
            }
        }
        return work[0];
    });
}

HeightDistribution decomposition_distribution(double delta, unsigned l, unsigned depth_i)
{
    const double r = 1.0 + delta;
    std::vector<double> weight(std::size_t{1} << depth_i);
    for (std::size_t b = 0; b < weight.size(); ++b) {
        // Path bits of b, most significant first: 0 = first half. |U| counts them.
        const auto u = depth_i - static_cast<unsigned>(std::popcount(b));
        weight[b] = std::pow(r, static_cast<double>(u));
    }
    return enumerate(l, depth_i, [&](const std::vector<double>& base) {
        double h = 0.0;
        for (std::size_t b = 0; b < base.size(); ++b) {
            h += weight[b] * base[b];
        }
        return h;
    });
}

double total_variation(const HeightDistribution& a, const HeightDistribution& b)
{
    double tv = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            tv += ia->second;
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            tv += ib->second;
            ++ib;
        } else {
            tv += std::fabs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * tv;
}

double second_moment(const HeightDistribution& d)
{
    double m = 0.0;
    for (const auto& [h, p] : d) {
        m += p * h * h;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Inversion ratio

SubintervalExtremes subinterval_extremes(std::span<const std::int64_t> prefix, std::size_t lo, std::size_t hi)
{
    if (!(lo < hi && hi < prefix.size())) {
        throw BoundsError("subinterval_extremes: bad range");
    }
    SubintervalExtremes e;
    std::int64_t min_p = prefix[lo], max_p = prefix[lo];
    std::size_t min_i = lo, max_i = lo;
    for (std::size_t j = lo + 1; j <= hi; ++j) {
        const std::int64_t p = prefix[j];
        if (p - min_p > e.max_height) {
            e.max_height = p - min_p;
            e.max_lo = min_i;
            e.max_hi = j;
        }
        if (p - max_p < e.min_height) {
            e.min_height = p - max_p;
            e.min_lo = max_i;
            e.min_hi = j;
        }
        if (p < min_p) {
            min_p = p;
            min_i = j;
        }
        if (p > max_p) {
            max_p = p;
            max_i = j;
        }
    }
    return e;
}

namespace {

struct Candidate {
    std::int64_t num = 0;
    std::int64_t den = 0;   // 0 = none
    InversionWitness w;
};

/// Ratio order, then (x_lo, x_hi).
bool better(const Candidate& a, const Candidate& b)
{
    if (a.den == 0) {
        return false;
    }
    if (b.den == 0) {
        return true;
    }
    const std::int64_t l = a.num * b.den;
    const std::int64_t r = b.num * a.den;
    if (l != r) {
        return l < r;
    }
    return std::pair(a.w.x_lo, a.w.x_hi) < std::pair(b.w.x_lo, b.w.x_hi);
}

struct ScanState {
    Candidate best;
    std::vector<std::pair<std::int64_t, std::int64_t>> per_length;   // (num, den), den 0 = none
    std::size_t scanned = 0;

    explicit ScanState(std::size_t n) : per_length(n + 1, {0, 0}) {}

    void offer_length(std::size_t len, std::int64_t num, std::int64_t den)
    {
        auto& cur = per_length[len];
        if (cur.second == 0 || num * cur.second < cur.first * den) {
            cur = {num, den};
        }
    }

    void offer(std::size_t lo, std::size_t hi, std::int64_t hx, const SubintervalExtremes& e)
    {
        Candidate c;
        c.den = hx > 0 ? hx : -hx;
        c.w.x_lo = lo;
        c.w.x_hi = hi;
        c.w.x_height = hx;
        if (hx > 0) {
            c.num = -e.min_height;
            c.w.y_lo = e.min_lo;
            c.w.y_hi = e.min_hi;
            c.w.y_height = e.min_height;
        } else {
            c.num = e.max_height;
            c.w.y_lo = e.max_lo;
            c.w.y_hi = e.max_hi;
            c.w.y_height = e.max_height;
        }
        ++scanned;
        offer_length(hi - lo, c.num, c.den);
        if (better(c, best)) {
            best = c;
        }
    }

    void merge(const ScanState& o)
    {
        scanned += o.scanned;
        for (std::size_t len = 0; len < per_length.size(); ++len) {
            if (o.per_length[len].second != 0) {
                offer_length(len, o.per_length[len].first, o.per_length[len].second);
            }
        }
        if (better(o.best, best)) {
            best = o.best;
        }
    }
};

/// Every X = [lo, hi) with hi - lo >= min_len, for one lo: one pass over hi
/// keeping running prefix extremes.
void scan_from(std::span<const std::int64_t> prefix, std::size_t lo, std::size_t min_len, ScanState& st)
{
    const std::size_t n = prefix.size() - 1;
    SubintervalExtremes e;
    std::int64_t min_p = prefix[lo], max_p = prefix[lo];
    std::size_t min_i = lo, max_i = lo;
    for (std::size_t hi = lo + 1; hi <= n; ++hi) {
        const std::int64_t p = prefix[hi];
        if (p - min_p > e.max_height) {
            e.max_height = p - min_p;
            e.max_lo = min_i;
            e.max_hi = hi;
        }
        if (p - max_p < e.min_height) {
            e.min_height = p - max_p;
            e.min_lo = max_i;
            e.min_hi = hi;
        }
        if (p < min_p) {
            min_p = p;
            min_i = hi;
        }
        if (p > max_p) {
            max_p = p;
            max_i = hi;
        }
        const std::int64_t hx = p - prefix[lo];
        if (hi - lo >= min_len && hx != 0) {
            st.offer(lo, hi, hx, e);
        }
    }
}

InversionReport finish(ScanState& st, std::size_t min_len, bool dyadic_only)
{
    InversionReport rep;
    rep.min_len = min_len;
    rep.dyadic_only = dyadic_only;
    rep.intervals_scanned = st.scanned;
    if (st.best.den != 0) {
        rep.ratio_num = st.best.num;
        rep.ratio_den = st.best.den;
        rep.overall_ratio = static_cast<double>(st.best.num) / static_cast<double>(st.best.den);
        rep.certificate = st.best.w;
    }
    for (std::size_t len = 0; len < st.per_length.size(); ++len) {
        const auto [num, den] = st.per_length[len];
        if (den != 0) {
            rep.per_length.push_back({len, static_cast<double>(num) / static_cast<double>(den)});
        }
    }
    return rep;
}

}  // namespace

InversionReport inversion_ratio(std::span<const std::int64_t> prefix, std::size_t min_len, bool dyadic_only,
                                Exec exec)
{
    if (prefix.empty()) {
        throw ConfigError("inversion_ratio needs a prefix array");
    }
    const std::size_t n = prefix.size() - 1;
    min_len = std::max<std::size_t>(min_len, 1);
    if (!dyadic_only && n > kMaxExhaustiveLen) {
        throw ConfigError("exhaustive inversion scan is limited to length 2^14; use dyadic_only");
    }
    ScanState st(n);
    if (dyadic_only) {
        auto ivs = aligned_intervals(n, min_len);
        std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) {
            return std::pair(a.lo(), a.hi()) < std::pair(b.lo(), b.hi());
        });
        auto visit = [&](const Interval& iv, ScanState& s) {
            const std::int64_t hx = prefix[iv.hi()] - prefix[iv.lo()];
            if (hx != 0) {
                s.offer(iv.lo(), iv.hi(), hx, subinterval_extremes(prefix, iv.lo(), iv.hi()));
            }
        };
        if (exec == Exec::Serial) {
            for (const auto& iv : ivs) {
                visit(iv, st);
            }
        } else {
            const auto count = static_cast<std::int64_t>(ivs.size());
#pragma omp parallel
            {
                ScanState local(n);
#pragma omp for schedule(dynamic, 64) nowait
                for (std::int64_t i = 0; i < count; ++i) {
                    visit(ivs[static_cast<std::size_t>(i)], local);
                }
#pragma omp critical(fracwalk_inversion)
                st.merge(local);
            }
        }
        return finish(st, min_len, true);
    }
    if (n < min_len) {
        return finish(st, min_len, false);
    }
    const std::size_t last_lo = n - min_len;
    if (exec == Exec::Serial) {
        for (std::size_t lo = 0; lo <= last_lo; ++lo) {
            scan_from(prefix, lo, min_len, st);
        }
    } else {
        const auto count = static_cast<std::int64_t>(last_lo + 1);
#pragma omp parallel
        {
            ScanState local(n);
#pragma omp for schedule(dynamic, 16) nowait
            for (std::int64_t lo = 0; lo < count; ++lo) {
                scan_from(prefix, static_cast<std::size_t>(lo), min_len, local);
            }
#pragma omp critical(fracwalk_inversion)
            st.merge(local);
        }
    }
    return finish(st, min_len, false);
}

InversionReport inversion_ratio(const BitSequence& seq, std::size_t min_len, bool dyadic_only, Exec exec)
{
    return inversion_ratio(seq.prefix(), min_len, dyadic_only, exec);
}

// ---------------------------------------------------------------------------
// (alpha, q)-inversion

namespace {

/// Values of X from one fresh sample, as a local prefix array.
void sample_window(const GeneratorSpec& spec, std::uint64_t seed, std::size_t lo, std::size_t len,
                   std::vector<std::int64_t>& local)
{
    Rng rng(seed);
    sample_values(spec, rng, t_values);
    local.resize(len + 1);
    local[0] = 0;
    for (std::size_t j = 0; j < len; ++j) {
        local[j + 1] = local[j] + t_values[lo + j];
    }
}

}  // namespace

AlphaQReport alpha_q_estimate(const GeneratorSpec& spec_in, std::size_t x_lo, std::size_t x_len,
                              std::span<const double> alphas, std::size_t trials, const AlphaQOptions& opts,
                              Exec exec)
{
    const GeneratorSpec spec = resolve(spec_in);
    check_interval(spec, x_lo, x_len);
    if (trials < 1000) {
        throw ConfigError("alpha_q_estimate needs at least 1000 trials");
    }
    if (alphas.empty()) {
        throw ConfigError("alpha_q_estimate needs at least one alpha");
    }
    AlphaQReport rep;
    rep.spec = spec;
    rep.x_lo = x_lo;
    rep.x_len = x_len;
    rep.trials = trials;

    const std::uint64_t first_seed = derive_seed(spec.seed, kTagAlphaQFirst);
    const auto first = map_trials<std::int64_t>(
        opts.first_pass_trials,
        [&](std::size_t i) {
            thread_local std::vector<std::int64_t> local;
            sample_window(spec, derive_seed(first_seed, i), x_lo, x_len, local);
            return local.back();
        },
        exec);
    std::vector<double> abs(first.size());
    std::transform(first.begin(), first.end(), abs.begin(),
                   [](std::int64_t h) { return std::fabs(static_cast<double>(h)); });
    rep.median_dev = abs.empty() ? 0.0 : median_of(abs);
    rep.floor = opts.floor_constant * spec.delta * std::sqrt(static_cast<double>(x_len));
    rep.threshold_met = rep.median_dev >= rep.floor;
    if (!rep.threshold_met) {
        return rep;
    }

    const std::uint64_t second_seed = derive_seed(spec.seed, kTagAlphaQSecond);
    // Largest opposite-sign subinterval height per trial, -1 when h(X) = 0.
    const auto opposite = map_trials<std::int64_t>(
        trials,
        [&](std::size_t i) -> std::int64_t {
            thread_local std::vector<std::int64_t> local;
            sample_window(spec, derive_seed(second_seed, i), x_lo, x_len, local);
            const std::int64_t h = local.back();
            if (h == 0) {
                return -1;
            }
            const auto e = subinterval_extremes(local, 0, x_len);
            return h > 0 ? -e.min_height : e.max_height;
        },
        exec);
    for (double a : alphas) {
        const double need = a * rep.median_dev;
        const auto hits = std::count_if(opposite.begin(), opposite.end(), [&](std::int64_t o) {
            return o >= 0 && static_cast<double>(o) >= need;
        });
        AlphaQRow row;
        row.alpha = a;
        row.q_hat = static_cast<double>(hits) / static_cast<double>(trials);
        row.stderr = std::sqrt(row.q_hat * (1.0 - row.q_hat) / static_cast<double>(trials));
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Staged certificate

CertifyReport certify_inversion(const GeneratorSpec& spec_in, std::size_t x_lo, std::size_t x_len, double theta,
                                unsigned s, std::size_t trials, double alpha, Exec exec)
{
    const GeneratorSpec spec = resolve(spec_in);
    check_interval(spec, x_lo, x_len);
    if (s == 0) {
        throw ConfigError("certify_inversion needs s >= 1");
    }
    if (!(alpha * theta / s >= 1.0)) {
        throw ConfigError("certify_inversion needs alpha*theta/s >= 1");
    }
    if (trials == 0) {
        throw ConfigError("certify_inversion needs trials >= 1");
    }
    CertifyReport rep;
    rep.spec = spec;
    rep.x_lo = x_lo;
    rep.x_len = x_len;
    rep.theta = theta;
    rep.s = s;
    rep.alpha = alpha;
    rep.trials = trials;
    rep.lower_limit = -static_cast<std::int64_t>(std::ceil(alpha * theta / s - 1e-12));
    rep.upper_limit = static_cast<std::int64_t>(std::ceil(2.0 * alpha * theta / s - 1e-12));
    const std::int64_t lower = rep.lower_limit;
    const std::int64_t upper = rep.upper_limit;

    // Per trial: byte 0 = high flag, byte 1 = inverted flag, then one code per
    // stage (0 not initiated, 1 exhausted, 2 lower, 3 upper).
    const std::uint64_t seed = derive_seed(spec.seed, kTagCertify);
    const auto codes = map_trials<std::vector<std::uint8_t>>(
        trials,
        [&](std::size_t i) {
            thread_local std::vector<std::int64_t> local;
            sample_window(spec, derive_seed(seed, i), x_lo, x_len, local);
            const std::int64_t h = local.back();
            const std::int64_t dir = sign_with_tie(h);
            std::vector<std::uint8_t> c(2 + s, 0);
            c[0] = std::fabs(static_cast<double>(h)) >= theta;
            std::size_t pos = 0;
            for (unsigned k = 0; k < s && pos < x_len; ++k) {
                const std::int64_t base = local[pos];
                std::uint8_t code = 1;
                while (pos < x_len) {
                    ++pos;
                    const std::int64_t run = dir * (local[pos] - base);
                    if (run <= lower) {
                        code = 2;
                        break;
                    }
                    if (run >= upper) {
                        code = 3;
                        break;
                    }
                }
                c[2 + k] = code;
                if (code == 2) {
                    c[1] = 1;
                }
                if (code == 1) {
                    break;
                }
            }
            return c;
        },
        exec);
    rep.stages.assign(s, {});
    for (const auto& c : codes) {
        for (unsigned k = 0; k < s; ++k) {
            if (c[2 + k] != 0) {
                ++rep.stages[k].initiated;
            }
            rep.stages[k].lower_hits += c[2 + k] == 2;
            rep.stages[k].upper_hits += c[2 + k] == 3;
        }
        if (c[0] != 0) {
            ++rep.high;
            rep.high_no_inversion += c[1] == 0;
        }
    }
    rep.joint_no_inversion = static_cast<double>(rep.high_no_inversion) / static_cast<double>(trials);
    rep.conditional_no_inversion =
        rep.high > 0 ? static_cast<double>(rep.high_no_inversion) / static_cast<double>(rep.high) : 0.0;
    return rep;
}

// ---------------------------------------------------------------------------
// Unpredictability

std::string_view to_string(DeltaMode m) { return m == DeltaMode::Strict ? "strict" : "weak_averaged"; }

DeltaMode parse_delta_mode(std::string_view s)
{
    if (s == "strict") {
        return DeltaMode::Strict;
    }
    if (s == "weak" || s == "weak_averaged" || s == "weak-averaged") {
        return DeltaMode::WeakAveraged;
    }
    throw ConfigError("unknown mode '" + std::string(s) + "' (strict, weak_averaged)");
}

namespace {

/// Per-cell samples: data[c][t] is cell c's value on trial t.
struct CellSamples {
    std::vector<DeltaCell> cells;
    std::vector<std::vector<double>> data;
    /// Adaptive cells normalize by sqrt(mean steps) instead of averaging a
    /// normalized value; steps[c][t] holds the steps when non-empty.
    std::vector<std::vector<double>> steps;
};

double cell_value(const std::vector<double>& v, const std::vector<double>* steps, const std::vector<std::size_t>* idx)
{
    double sum = 0.0, st = 0.0;
    const std::size_t n = idx != nullptr ? idx->size() : v.size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t t = idx != nullptr ? (*idx)[k] : k;
        sum += v[t];
        if (steps != nullptr) {
            st += (*steps)[t];
        }
    }
    const double mean = sum / static_cast<double>(n);
    if (steps == nullptr) {
        return mean;
    }
    const double mean_steps = st / static_cast<double>(n);
    return mean_steps > 0.0 ? mean / std::sqrt(mean_steps) : 0.0;
}

void finalize(UnpredictabilityReport& rep, CellSamples& cs, std::size_t reps, std::uint64_t seed)
{
    const bool adaptive = !cs.steps.empty();
    double best = 0.0;
    for (std::size_t c = 0; c < cs.cells.size(); ++c) {
        auto& cell = cs.cells[c];
        const auto& v = cs.data[c];
        const std::vector<double>* st = adaptive ? &cs.steps[c] : nullptr;
        cell.trials = v.size();
        cell.normalized = cell_value(v, st, nullptr);
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        cell.mean_payoff = mean;
        double scale = 1.0;
        if (adaptive) {
            const double ms = std::accumulate(st->begin(), st->end(), 0.0) / static_cast<double>(st->size());
            scale = ms > 0.0 ? 1.0 / std::sqrt(ms) : 0.0;
        } else {
            cell.mean_payoff = mean * std::sqrt(static_cast<double>(cell.length));
        }
        cell.stderr = sample_sd(v) / std::sqrt(static_cast<double>(v.size())) * scale;
        best = std::max(best, cell.normalized);
    }
    rep.delta_hat = best;
    rep.cells = cs.cells;
    rep.ci_lo = rep.ci_hi = best;
    if (reps < 2 || cs.cells.empty()) {
        return;
    }
    const std::size_t n = cs.data.front().size();
    Rng rng(seed);
    std::vector<double> maxima(reps);
    std::vector<std::size_t> idx(n);
    for (auto& m : maxima) {
        for (auto& i : idx) {
            i = rng.below(n);
        }
        double b = 0.0;
        for (std::size_t c = 0; c < cs.cells.size(); ++c) {
            b = std::max(b, cell_value(cs.data[c], adaptive ? &cs.steps[c] : nullptr, &idx));
        }
        m = b;
    }
    std::sort(maxima.begin(), maxima.end());
    const auto at = [&](double q) {
        const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(reps - 1)));
        return maxima[std::min(k, reps - 1)];
    };
    rep.ci_lo = at(0.025);
    rep.ci_hi = at(0.975);
}

void run_strict(const GeneratorSpec& spec, std::size_t trials, const DeltaOptions& opts, Exec exec, CellSamples& cs)
{
    const std::size_t T = spec.total_len;
    const auto windows = opts.windows.empty() ? default_scales(T) : opts.windows;
    const auto lengths = opts.lengths.empty() ? default_scales(T) : opts.lengths;
    std::vector<std::size_t> starts = opts.starts;
    if (starts.empty()) {
        starts = {T / 2, 3 * T / 4};
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    for (auto lo : starts) {
        for (auto w : windows) {
            if (w == 0 || w > lo || lo >= T) {
                continue;
            }
            std::vector<std::size_t> ls;
            for (auto L : lengths) {
                if (L > 0 && lo + L <= T) {
                    ls.push_back(L);
                }
            }
            if (ls.empty()) {
                continue;
            }
            const Planting plant{lo - w, lo, 1};
            const std::uint64_t group_seed = derive_seed(spec.seed, {kTagStrict, lo, w});
            const auto rows = map_trials<std::vector<double>>(
                trials,
                [&](std::size_t i) {
                    Rng rng = Rng::for_stream(group_seed, i);
                    sample_prefix(spec, rng, t_values, t_prefix, &plant);
                    const std::int64_t s = sign_with_tie(t_prefix[lo] - t_prefix[lo - w]);
                    std::vector<double> out(ls.size());
                    for (std::size_t k = 0; k < ls.size(); ++k) {
                        const std::int64_t h = t_prefix[lo + ls[k]] - t_prefix[lo];
                        out[k] = static_cast<double>(s * h) / std::sqrt(static_cast<double>(ls[k]));
                    }
                    return out;
                },
                exec);
            for (std::size_t k = 0; k < ls.size(); ++k) {
                DeltaCell cell;
                cell.predictor = "sign_of_prefix";
                cell.window = w;
                cell.lo = lo;
                cell.length = ls[k];
                cs.cells.push_back(cell);
                std::vector<double> col(trials);
                for (std::size_t t = 0; t < trials; ++t) {
                    col[t] = rows[t][k];
                }
                cs.data.push_back(std::move(col));
            }
        }
    }
}

void run_weak(const GeneratorSpec& spec, std::size_t trials, const DeltaOptions& opts, Exec exec, CellSamples& cs)
{
    const std::size_t T = spec.total_len;
    const auto windows = opts.windows.empty() ? default_scales(T) : opts.windows;
    const auto lengths = opts.lengths.empty() ? default_scales(T) : opts.lengths;
    struct Key {
        std::size_t L, w;
    };
    std::vector<Key> keys;
    for (auto L : lengths) {
        for (auto w : windows) {
            if (L == 0 || w == 0) {
                continue;
            }
            // First aligned start at or after w.
            const std::size_t first = (w + L - 1) / L * L;
            if (first + L <= T) {
                keys.push_back({L, w});
            }
        }
    }
    const std::uint64_t seed = derive_seed(spec.seed, kTagWeak);
    const auto rows = map_trials<std::vector<double>>(
        trials,
        [&](std::size_t i) {
            Rng rng = Rng::for_stream(seed, i);
            sample_prefix(spec, rng, t_values, t_prefix);
            std::vector<double> out(keys.size());
            for (std::size_t k = 0; k < keys.size(); ++k) {
                const auto [L, w] = keys[k];
                double sum = 0.0;
                std::size_t count = 0;
                for (std::size_t lo = (w + L - 1) / L * L; lo + L <= T; lo += L) {
                    const std::int64_t s = sign_with_tie(t_prefix[lo] - t_prefix[lo - w]);
                    sum += static_cast<double>(s * (t_prefix[lo + L] - t_prefix[lo]));
                    ++count;
                }
                out[k] = sum / static_cast<double>(count) / std::sqrt(static_cast<double>(L));
            }
            return out;
        },
        exec);
    for (std::size_t k = 0; k < keys.size(); ++k) {
        DeltaCell cell;
        cell.predictor = "sign_of_prefix";
        cell.window = keys[k].w;
        cell.length = keys[k].L;
        cs.cells.push_back(cell);
        std::vector<double> col(trials);
        for (std::size_t t = 0; t < trials; ++t) {
            col[t] = rows[t][k];
        }
        cs.data.push_back(std::move(col));
    }
}

}  // namespace

UnpredictabilityReport estimate_delta(const GeneratorSpec& spec_in, DeltaMode mode, std::size_t trials,
                                      const DeltaOptions& opts, Exec exec, bool allow_small)
{
    const GeneratorSpec spec = resolve(spec_in);
    if (!allow_small && trials < 1000) {
        throw ConfigError("estimate_delta needs at least 1000 trials per cell");
    }
    if (trials < 2) {
        throw ConfigError("estimate_delta needs at least 2 trials");
    }
    if (spec.total_len < 2) {
        throw ConfigError("estimate_delta needs total_len >= 2");
    }
    UnpredictabilityReport rep;
    rep.spec = spec;
    rep.mode = mode;
    if (mode == DeltaMode::Strict && spec.family == Family::EntropyConditioned) {
        rep.mode = DeltaMode::WeakAveraged;
        rep.warning = "strict conditioning is infeasible for entropy_conditioned (rejection sampler cannot plant a "
                      "prefix); fell back to weak_averaged";
    }
    CellSamples cs;
    if (rep.mode == DeltaMode::Strict) {
        run_strict(spec, trials, opts, exec, cs);
    } else {
        run_weak(spec, trials, opts, exec, cs);
    }
    finalize(rep, cs, opts.bootstrap_reps, derive_seed(spec.seed, kTagBootstrap));
    return rep;
}

UnpredictabilityReport estimate_delta_adaptive(const GeneratorSpec& spec_in, std::size_t trials,
                                               std::span<const double> alphas, const DeltaOptions& opts, Exec exec)
{
    const GeneratorSpec spec = resolve(spec_in);
    if (trials < 2) {
        throw ConfigError("estimate_delta_adaptive needs at least 2 trials");
    }
    const std::size_t T = spec.total_len;
    const std::size_t lo = T / 2;
    const auto lengths = opts.lengths.empty() ? default_scales(T) : opts.lengths;
    struct Key {
        std::size_t L;
        double alpha;
        StopRule rule;
    };
    std::vector<Key> keys;
    for (auto L : lengths) {
        if (L == 0 || L > lo || lo + L > T) {
            continue;
        }
        const double theta = std::sqrt(static_cast<double>(L));
        for (double a : alphas) {
            if (2.0 * a * theta >= 1.0) {
                keys.push_back({L, a, inversion_stop_rule(theta, a)});
            }
        }
    }
    const std::uint64_t seed = derive_seed(spec.seed, kTagAdaptive);
    const auto rows = map_trials<std::vector<std::pair<double, double>>>(
        trials,
        [&](std::size_t i) {
            Rng rng = Rng::for_stream(seed, i);
            sample_values(spec, rng, t_values);
            std::vector<std::pair<double, double>> out(keys.size());
            for (std::size_t k = 0; k < keys.size(); ++k) {
                const std::size_t L = keys[k].L;
                std::int64_t prev = 0;
                for (std::size_t j = lo - L; j < lo; ++j) {
                    prev += t_values[j];
                }
                const std::span<const std::int32_t> target(t_values.data() + lo, L);
                const auto led = run_constant(sign_with_tie(prev), target, keys[k].rule);
                out[k] = {static_cast<double>(led.payoff), static_cast<double>(led.steps_used)};
            }
            return out;
        },
        exec);
    UnpredictabilityReport rep;
    rep.spec = spec;
    rep.mode = DeltaMode::WeakAveraged;
    CellSamples cs;
    for (std::size_t k = 0; k < keys.size(); ++k) {
        DeltaCell cell;
        cell.predictor = "adaptive_bettor";
        cell.window = keys[k].L;
        cell.lo = lo;
        cell.length = keys[k].L;
        cell.param = keys[k].alpha;
        cs.cells.push_back(cell);
        std::vector<double> pay(trials), steps(trials);
        for (std::size_t t = 0; t < trials; ++t) {
            pay[t] = rows[t][k].first;
            steps[t] = rows[t][k].second;
        }
        cs.data.push_back(std::move(pay));
        cs.steps.push_back(std::move(steps));
    }
    finalize(rep, cs, opts.bootstrap_reps, derive_seed(spec.seed, kTagBootstrap));
    return rep;
}

namespace {

template <typename Fn>
MeanEstimate mean_over_samples(const GeneratorSpec& spec, std::uint64_t tag, std::size_t trials, Exec exec, Fn&& fn)
{
    if (trials < 2) {
        throw ConfigError("need at least 2 trials");
    }
    const std::uint64_t seed = derive_seed(spec.seed, tag);
    const auto vals = map_trials<double>(
        trials,
        [&](std::size_t i) {
            Rng rng = Rng::for_stream(seed, i);
            sample_prefix(spec, rng, t_values, t_prefix);
            return fn(std::span<const std::int32_t>(t_values), std::span<const std::int64_t>(t_prefix));
        },
        exec);
    MeanEstimate m;
    m.trials = trials;
    m.mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(trials);
    m.stderr = sample_sd(vals) / std::sqrt(static_cast<double>(trials));
    return m;
}

}  // namespace

MeanEstimate first_half_sign_payoff(const GeneratorSpec& spec_in, std::size_t trials, Exec exec)
{
    const GeneratorSpec spec = resolve(spec_in);
    const std::size_t half = spec.total_len / 2;
    if (half == 0) {
        throw ConfigError("first_half_sign_payoff needs total_len >= 2");
    }
    return mean_over_samples(spec, kTagFirstHalf, trials, exec,
                             [&](std::span<const std::int32_t>, std::span<const std::int64_t> p) {
                                 const std::int64_t s = sign_with_tie(p[half]);
                                 return static_cast<double>(s * (p[2 * half] - p[half]));
                             });
}

MeanEstimate weighted_majority_payoff(const GeneratorSpec& spec_in, std::size_t trials, Exec exec)
{
    const GeneratorSpec spec = resolve(spec_in);
    return mean_over_samples(spec, kTagWeighted, trials, exec,
                             [](std::span<const std::int32_t> v, std::span<const std::int64_t>) {
                                 return weighted_majority_expected(v);
                             });
}

MeanEstimate block_sign_mean_payoff(const GeneratorSpec& spec_in, std::size_t block, std::size_t trials, Exec exec)
{
    const GeneratorSpec spec = resolve(spec_in);
    return mean_over_samples(spec, kTagBlock, trials, exec,
                             [&](std::span<const std::int32_t> v, std::span<const std::int64_t>) {
                                 return static_cast<double>(block_sign_payoff(v, block));
                             });
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json ratio_json(double v)
{
    if (std::isfinite(v)) {
        return v;
    }
    return nullptr;
}

}  // namespace

nlohmann::json to_json(const DeviationRow& r)
{
    return {{"T", r.T},
            {"trials", r.trials},
            {"mean_dev", r.mean_dev},
            {"median_dev", r.median_dev},
            {"rms_dev", r.rms_dev},
            {"second_moment", r.second_moment},
            {"fourth_moment", r.fourth_moment},
            {"median_se", r.median_se},
            {"mean_se", r.mean_se},
            {"anti_concentration", r.anti_concentration}};
}

nlohmann::json to_json(const DeviationReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back(to_json(row));
    }
    return {{"schema", "fracwalk.deviation/1"},
            {"spec", to_json(r.spec)},
            {"seed", r.spec.seed},
            {"rows", rows},
            {"fitted_exponent", r.fitted_exponent},
            {"exponent_se", r.exponent_se},
            {"ordering_ok", r.ordering_ok()}};
}

nlohmann::json to_json(const InversionReport& r)
{
    nlohmann::json j{{"schema", "fracwalk.inversion/1"},
                     {"min_len", r.min_len},
                     {"dyadic_only", r.dyadic_only},
                     {"intervals_scanned", r.intervals_scanned},
                     {"overall_ratio", ratio_json(r.overall_ratio)},
                     {"ratio_num", r.ratio_num},
                     {"ratio_den", r.ratio_den}};
    if (r.certificate) {
        const auto& w = *r.certificate;
        j["certificate"] = {{"X", {w.x_lo, w.x_hi}},
                            {"Y", {w.y_lo, w.y_hi}},
                            {"h_X", w.x_height},
                            {"h_Y", w.y_height}};
    } else {
        j["certificate"] = nullptr;
    }
    nlohmann::json per = nlohmann::json::array();
    for (const auto& p : r.per_length) {
        per.push_back({{"length", p.length}, {"ratio", p.ratio}});
    }
    j["per_length"] = per;
    return j;
}

nlohmann::json to_json(const AlphaQReport& r)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"alpha", row.alpha}, {"q_hat", row.q_hat}, {"stderr", row.stderr}});
    }
    return {{"schema", "fracwalk.alphaq/1"},
            {"spec", to_json(r.spec)},
            {"seed", r.spec.seed},
            {"X", {r.x_lo, r.x_lo + r.x_len}},
            {"median_dev", r.median_dev},
            {"floor", r.floor},
            {"threshold_met", r.threshold_met},
            {"trials", r.trials},
            {"rows", rows},
            {"caveat", "histories are sampled, not quantified over; q_hat covers the sampled law only"}};
}

nlohmann::json to_json(const CertifyReport& r)
{
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : r.stages) {
        stages.push_back({{"initiated", s.initiated}, {"lower_hits", s.lower_hits}, {"upper_hits", s.upper_hits}});
    }
    return {{"schema", "fracwalk.certify/1"},
            {"spec", to_json(r.spec)},
            {"seed", r.spec.seed},
            {"X", {r.x_lo, r.x_lo + r.x_len}},
            {"theta", r.theta},
            {"s", r.s},
            {"alpha", r.alpha},
            {"limits", {r.lower_limit, r.upper_limit}},
            {"trials", r.trials},
            {"high", r.high},
            {"high_no_inversion", r.high_no_inversion},
            {"joint_no_inversion", r.joint_no_inversion},
            {"conditional_no_inversion", r.conditional_no_inversion},
            {"stages", stages}};
}

nlohmann::json to_json(const UnpredictabilityReport& r)
{
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"predictor", c.predictor},
                         {"window", c.window},
                         {"lo", c.lo},
                         {"length", c.length},
                         {"param", c.param},
                         {"mean_payoff", c.mean_payoff},
                         {"normalized", c.normalized},
                         {"stderr", c.stderr},
                         {"trials", c.trials}});
    }
    return {{"schema", "fracwalk.unpredictability/1"},
            {"spec", to_json(r.spec)},
            {"seed", r.spec.seed},
            {"mode", to_string(r.mode)},
            {"warning", r.warning},
            {"delta_hat", r.delta_hat},
            {"ci", {r.ci_lo, r.ci_hi}},
            {"caveat", "delta_hat maxes over a finite predictor family and lower-bounds the true delta"},
            {"cells", cells}};
}

}  // namespace fracwalk
