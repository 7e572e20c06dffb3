#include "fracwalk/generators.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <limits>

namespace fracwalk {

std::string_view to_string(Family f)
{
    switch (f) {
    case Family::Uniform: return "uniform";
    case Family::FRW: return "frw";
    case Family::OptFRW: return "opt_frw";
    case Family::AFRW: return "afrw";
    case Family::AOFRW: return "aofrw";
    case Family::EntropyConditioned: return "entropy_conditioned";
    }
    return "?";
}

std::string_view to_string(FlipMode m)
{
    return m == FlipMode::ExactCount ? "exact_count" : "bernoulli";
}

namespace {

std::string normalized(std::string_view s)
{
    std::string out;
    for (char c : s) {
        out.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

Family parse_family(std::string_view name)
{
    const auto n = normalized(name);
    if (n == "uniform") return Family::Uniform;
    if (n == "frw") return Family::FRW;
    if (n == "opt_frw" || n == "optfrw") return Family::OptFRW;
    if (n == "afrw") return Family::AFRW;
    if (n == "aofrw") return Family::AOFRW;
    if (n == "entropy_conditioned" || n == "entropyconditioned" || n == "entropy") {
        return Family::EntropyConditioned;
    }
    throw ConfigError("unknown family '" + std::string(name) + "'");
}

FlipMode parse_flip_mode(std::string_view name)
{
    const auto n = normalized(name);
    if (n == "exact_count" || n == "exactcount" || n == "exact") return FlipMode::ExactCount;
    if (n == "bernoulli") return FlipMode::Bernoulli;
    throw ConfigError("unknown flip_mode '" + std::string(name) + "'");
}

bool is_augmented(Family f) noexcept { return f == Family::AFRW || f == Family::AOFRW; }

bool is_recursive(Family f) noexcept
{
    return f == Family::FRW || f == Family::OptFRW || is_augmented(f);
}

namespace {

bool uses_sqrt_budget(Family f) { return f == Family::OptFRW || f == Family::AOFRW; }

}  // namespace

std::uint64_t default_base_len(Family family, std::uint64_t total_len)
{
    if (!is_recursive(family) || total_len <= 1) {
        return std::max<std::uint64_t>(total_len, 1);
    }
    const double log_t = std::log2(static_cast<double>(total_len));
    double exponent = 0.0;
    if (uses_sqrt_budget(family)) {
        exponent = std::ceil(0.75 * log_t - 1e-12);
    } else {
        exponent = std::ceil(std::log2(100.0 * log_t) - 1e-12);
    }
    const auto l = std::uint64_t{1} << static_cast<unsigned>(std::max(0.0, exponent));
    return std::min(l, total_len);
}

void validate(const GeneratorSpec& spec)
{
    const auto T = spec.total_len;
    if (!is_pow2(T)) {
        throw ConfigError("total_len must be a power of two, got " + std::to_string(T));
    }
    if (T > kMaxTotalLen) {
        throw ConfigError("total_len exceeds the supported maximum 2^26");
    }
    if (spec.base_len != 0) {
        if (!is_pow2(spec.base_len) || spec.base_len > T) {
            throw ConfigError("total_len must be 2^i * base_len with base_len a power of two, got base_len=" +
                              std::to_string(spec.base_len));
        }
    }
    if (!(spec.delta >= 0.0 && spec.delta < 1.0)) {
        throw ConfigError("delta must lie in [0, 1), got " + std::to_string(spec.delta));
    }
    if (spec.family == Family::EntropyConditioned) {
        if (!(spec.k >= 0.0) || !std::isfinite(spec.k)) {
            throw ConfigError("k must be a finite non-negative number");
        }
        if (spec.k * std::sqrt(static_cast<double>(T)) > static_cast<double>(T)) {
            throw ConfigError("k*sqrt(T) must not exceed T");
        }
    }
    if (is_augmented(spec.family) && spec.flip_mode == FlipMode::Bernoulli) {
        throw ConfigError("augmented families need flip_mode exact_count");
    }
}

GeneratorSpec resolve(GeneratorSpec spec)
{
    validate(spec);
    if (spec.base_len == 0) {
        spec.base_len = default_base_len(spec.family, spec.total_len);
    }
    return spec;
}

std::int64_t entropy_threshold(double k, std::uint64_t total_len)
{
    auto thr = static_cast<std::int64_t>(std::ceil(k * std::sqrt(static_cast<double>(total_len)) - 1e-12));
    thr = std::max<std::int64_t>(thr, 0);
    if ((thr - static_cast<std::int64_t>(total_len)) % 2 != 0) {
        ++thr;
    }
    return thr;
}

std::int64_t GenerationLog::total_augmented() const
{
    std::int64_t n = 0;
    for (const auto& m : merges) {
        n += m.augmented;
    }
    return n;
}

namespace {

/// Uniform +-1 fill from 64-bit words; bit j of word w goes to 64w + j.
std::int64_t fill_uniform(Rng& rng, std::span<std::int32_t> v)
{
    std::int64_t h = 0;
    std::size_t i = 0;
    while (i < v.size()) {
        std::uint64_t word = rng.next_u64();
        const std::size_t take = std::min<std::size_t>(64, v.size() - i);
        for (std::size_t j = 0; j < take; ++j, word >>= 1) {
            const std::int32_t b = (word & 1) ? 1 : -1;
            v[i + j] = b;
            h += b;
        }
        i += take;
    }
    return h;
}

thread_local std::vector<std::size_t> t_positions;

/// Recursive doubling for FRW, Opt-FRW and the augmented pair, run bottom-up:
/// all merges of one level finish before the next level starts, which is the
/// same law as the top-down recursion because a merge only edits its own
/// second half after that half is complete.
class RecursiveWalk {
public:
    RecursiveWalk(const GeneratorSpec& spec, Rng& rng, std::span<std::int32_t> v, GenerationLog* log)
        : spec_(spec), rng_(rng), v_(v), log_(log), augmented_(is_augmented(spec.family)),
          sqrt_budget_(uses_sqrt_budget(spec.family))
    {
    }

    std::int64_t run()
    {
        const std::size_t T = v_.size();
        const std::size_t l = spec_.base_len;
        const std::size_t blocks = T / l;
        heights_.assign(blocks, 0);
        if (augmented_) {
            pos_.assign(blocks, 0);
            neg_.assign(blocks, 0);
        }
        for (std::size_t b = 0; b < blocks; ++b) {
            std::int64_t h = 0;
            std::int64_t pos = 0;
            std::int64_t neg = 0;
            for (std::size_t i = b * l; i < (b + 1) * l; ++i) {
                h += v_[i];
                pos += v_[i] == 1;
                neg += v_[i] == -1;
            }
            heights_[b] = h;
            if (augmented_) {
                pos_[b] = pos;
                neg_[b] = neg;
            }
        }

        unsigned level = 0;
        for (std::size_t n = l; n < T; n <<= 1, ++level) {
            const std::size_t merges = T / (2 * n);
            for (std::size_t j = 0; j < merges; ++j) {
                merge(level, n, j);
            }
        }
        return heights_.empty() ? 0 : heights_[0];
    }

private:
    void merge(unsigned level, std::size_t n, std::size_t j)
    {
        const std::int64_t h1 = heights_[2 * j];
        const std::int64_t h2 = heights_[2 * j + 1];
        const std::size_t lo = (2 * j + 1) * n;
        const int dir = (h1 > 0) - (h1 < 0);

        FlipRecord rec;
        rec.level = level;
        rec.block_lo = lo;
        rec.direction = dir;

        std::int64_t pos2 = 0;
        std::int64_t neg2 = 0;
        if (augmented_) {
            pos2 = pos_[2 * j + 1];
            neg2 = neg_[2 * j + 1];
        } else {
            pos2 = (static_cast<std::int64_t>(n) + h2) / 2;
            neg2 = (static_cast<std::int64_t>(n) - h2) / 2;
        }

        if (dir != 0) {
            const double budget = sqrt_budget_ ? spec_.delta * std::sqrt(static_cast<double>(n))
                                               : spec_.delta * static_cast<double>(std::llabs(h1));
            rec.requested = budget / 2.0;
            const std::int64_t eligible = dir > 0 ? neg2 : pos2;
            if (spec_.flip_mode == FlipMode::Bernoulli) {
                rec.applied = flip_bernoulli(lo, n, dir, budget / static_cast<double>(n));
            } else {
                const double whole = std::floor(rec.requested);
                std::int64_t k = static_cast<std::int64_t>(whole);
                if (rng_.bernoulli(rec.requested - whole)) {
                    ++k;
                }
                const std::int64_t flips = std::min(k, eligible);
                flip_exact(lo, n, dir, flips, eligible);
                rec.applied = flips;
                if (augmented_ && k > eligible) {
                    rec.augmented = k - eligible;
                    augment(lo, n, dir, rec.augmented);
                }
            }
            if (augmented_) {
                if (rec.augmented > 0) {
                    recount(lo, n, pos2, neg2);
                } else if (dir > 0) {
                    neg2 -= rec.applied;
                    pos2 += rec.applied;
                } else {
                    pos2 -= rec.applied;
                    neg2 += rec.applied;
                }
            }
            rec.height_change = 2 * dir * (rec.applied + rec.augmented);
        }

        heights_[j] = h1 + h2 + rec.height_change;
        if (augmented_) {
            pos_[j] = pos_[2 * j] + pos2;
            neg_[j] = neg_[2 * j] + neg2;
        }
        if (log_ != nullptr) {
            log_->merges.push_back(rec);
        }
    }

    /// Flips `k` entries equal to -dir, chosen uniformly without replacement.
    void flip_exact(std::size_t lo, std::size_t n, int dir, std::int64_t k, std::int64_t eligible)
    {
        if (k <= 0) {
            return;
        }
        const std::int32_t from = -dir;
        if (2 * k <= eligible) {
            // Rejection: a flipped entry is no longer eligible, so accepted
            // draws are uniform over the remaining eligible positions.
            for (std::int64_t done = 0; done < k;) {
                const std::size_t p = lo + rng_.below(n);
                if (v_[p] == from) {
                    v_[p] = dir;
                    ++done;
                }
            }
            return;
        }
        auto& cand = t_positions;
        cand.clear();
        for (std::size_t p = lo; p < lo + n; ++p) {
            if (v_[p] == from) {
                cand.push_back(p);
            }
        }
        for (std::int64_t i = 0; i < k; ++i) {
            const auto r = static_cast<std::size_t>(i) + rng_.below(cand.size() - static_cast<std::size_t>(i));
            std::swap(cand[static_cast<std::size_t>(i)], cand[r]);
            v_[cand[static_cast<std::size_t>(i)]] = dir;
        }
    }

    /// Each entry equal to -dir flips independently with probability p.
    std::int64_t flip_bernoulli(std::size_t lo, std::size_t n, int dir, double p)
    {
        const std::int32_t from = -dir;
        std::int64_t applied = 0;
        if (p <= 0.0) {
            return 0;
        }
        if (p >= 1.0) {
            for (std::size_t i = lo; i < lo + n; ++i) {
                if (v_[i] == from) {
                    v_[i] = dir;
                    ++applied;
                }
            }
            return applied;
        }
        // Geometric gaps over all positions; thinning to eligible ones keeps
        // every eligible entry independent with probability p.
        const double log_q = std::log1p(-p);
        std::size_t i = 0;
        for (;;) {
            const double u = 1.0 - rng_.uniform01();
            const double gap = std::floor(std::log(u) / log_q);
            if (gap >= static_cast<double>(n - i)) {
                break;
            }
            i += static_cast<std::size_t>(gap);
            if (v_[lo + i] == from) {
                v_[lo + i] = dir;
                ++applied;
            }
            if (++i >= n) {
                break;
            }
        }
        return applied;
    }

    /// Adds 2*dir to `count` entries of the block, spread uniformly.
    void augment(std::size_t lo, std::size_t n, int dir, std::int64_t count)
    {
        const auto rounds = static_cast<std::int64_t>(static_cast<std::uint64_t>(count) / n);
        const auto rest = static_cast<std::size_t>(static_cast<std::uint64_t>(count) % n);
        if (rounds > 0) {
            for (std::size_t i = lo; i < lo + n; ++i) {
                bump(i, 2 * dir * rounds);
            }
        }
        auto& cand = t_positions;
        cand.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            cand[i] = lo + i;
        }
        for (std::size_t i = 0; i < rest; ++i) {
            const auto r = i + rng_.below(n - i);
            std::swap(cand[i], cand[r]);
            bump(cand[i], 2 * dir);
        }
    }

    void bump(std::size_t i, std::int64_t by)
    {
        const std::int64_t next = static_cast<std::int64_t>(v_[i]) + by;
        if (next > std::numeric_limits<std::int32_t>::max() || next < std::numeric_limits<std::int32_t>::min()) {
            throw NumericalError("augmented entry overflows 32 bits");
        }
        v_[i] = static_cast<std::int32_t>(next);
    }

    void recount(std::size_t lo, std::size_t n, std::int64_t& pos, std::int64_t& neg) const
    {
        pos = 0;
        neg = 0;
        for (std::size_t i = lo; i < lo + n; ++i) {
            pos += v_[i] == 1;
            neg += v_[i] == -1;
        }
    }

    const GeneratorSpec& spec_;
    Rng& rng_;
    std::span<std::int32_t> v_;
    GenerationLog* log_;
    bool augmented_;
    bool sqrt_budget_;
    std::vector<std::int64_t> heights_;
    std::vector<std::int64_t> pos_;
    std::vector<std::int64_t> neg_;
};

std::int64_t sample_entropy(const GeneratorSpec& spec, Rng& rng, std::span<std::int32_t> v,
                            GenerationLog* log, std::uint64_t budget)
{
    const std::size_t T = v.size();
    const std::int64_t thr = entropy_threshold(spec.k, T);
    const std::size_t words = (T + 63) / 64;
    const std::uint64_t tail_mask = (T % 64 == 0) ? ~std::uint64_t{0} : ((std::uint64_t{1} << (T % 64)) - 1);
    thread_local std::vector<std::uint64_t> buf;
    buf.resize(words);
    for (std::uint64_t attempt = 1; attempt <= budget; ++attempt) {
        std::int64_t ones = 0;
        for (std::size_t w = 0; w < words; ++w) {
            buf[w] = rng.next_u64();
            if (w + 1 == words) {
                buf[w] &= tail_mask;
            }
            ones += std::popcount(buf[w]);
        }
        const std::int64_t h = 2 * ones - static_cast<std::int64_t>(T);
        if (std::llabs(h) >= thr) {
            for (std::size_t i = 0; i < T; ++i) {
                v[i] = (buf[i / 64] >> (i % 64)) & 1 ? 1 : -1;
            }
            if (log != nullptr) {
                log->attempts += attempt;
                log->acceptance_rate = 1.0 / static_cast<double>(attempt);
            }
            return h;
        }
    }
    throw InfeasibleError("no sample with |h| >= " + std::to_string(thr) + " in " + std::to_string(budget) +
                          " draws (acceptance rate below " + std::to_string(1.0 / static_cast<double>(budget)) +
                          "); use a smaller k");
}

void require_family(const GeneratorSpec& spec, std::initializer_list<Family> ok, const char* fn)
{
    if (std::find(ok.begin(), ok.end(), spec.family) == ok.end()) {
        throw ConfigError(std::string(fn) + " called with family " + std::string(to_string(spec.family)));
    }
}

BitSequence to_bit_sequence(const std::vector<std::int32_t>& v)
{
    std::vector<std::int8_t> bits(v.begin(), v.end());
    return BitSequence(std::move(bits));
}

thread_local std::vector<std::int32_t> t_values;

}  // namespace

std::int64_t sample_values(const GeneratorSpec& spec_in, Rng& rng, std::vector<std::int32_t>& out,
                           GenerationLog* log, const Planting* plant)
{
    const GeneratorSpec spec = resolve(spec_in);
    const std::size_t T = spec.total_len;
    out.resize(T);
    std::span<std::int32_t> v(out);
    if (spec.family == Family::EntropyConditioned) {
        if (plant != nullptr && plant->hi > plant->lo) {
            throw ConfigError("planted histories are not supported for entropy_conditioned");
        }
        return sample_entropy(spec, rng, v, log, kEntropyTrialBudget);
    }
    std::int64_t h = fill_uniform(rng, v);
    if (plant != nullptr && plant->hi > plant->lo) {
        if (plant->hi > T) {
            throw BoundsError("planted range exceeds total_len");
        }
        const std::int32_t s = plant->sign >= 0 ? 1 : -1;
        for (std::size_t i = plant->lo; i < plant->hi; ++i) {
            h += s - v[i];
            v[i] = s;
        }
    }
    if (!is_recursive(spec.family) || spec.base_len >= T) {
        return h;
    }
    return RecursiveWalk(spec, rng, v, log).run();
}

void sample_prefix(const GeneratorSpec& spec, Rng& rng, std::vector<std::int32_t>& values,
                   std::vector<std::int64_t>& prefix, const Planting* plant)
{
    sample_values(spec, rng, values, nullptr, plant);
    prefix.resize(values.size() + 1);
    prefix[0] = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        prefix[i + 1] = prefix[i] + values[i];
    }
}

std::int64_t sample_height(const GeneratorSpec& spec, Rng& rng)
{
    return sample_values(spec, rng, t_values);
}

BitSequence gen_uniform(const GeneratorSpec& spec, Rng& rng)
{
    require_family(spec, {Family::Uniform}, "gen_uniform");
    std::vector<std::int32_t> v;
    sample_values(spec, rng, v);
    return to_bit_sequence(v);
}

BitSequence gen_frw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log)
{
    require_family(spec, {Family::FRW}, "gen_frw");
    std::vector<std::int32_t> v;
    sample_values(spec, rng, v, log);
    return to_bit_sequence(v);
}

BitSequence gen_opt_frw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log)
{
    require_family(spec, {Family::OptFRW}, "gen_opt_frw");
    std::vector<std::int32_t> v;
    sample_values(spec, rng, v, log);
    return to_bit_sequence(v);
}

IntSequence gen_afrw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log)
{
    require_family(spec, {Family::AFRW}, "gen_afrw");
    std::vector<std::int32_t> v;
    sample_values(spec, rng, v, log);
    return IntSequence(std::move(v));
}

IntSequence gen_aofrw(const GeneratorSpec& spec, Rng& rng, GenerationLog* log)
{
    require_family(spec, {Family::AOFRW}, "gen_aofrw");
    std::vector<std::int32_t> v;
    sample_values(spec, rng, v, log);
    return IntSequence(std::move(v));
}

BitSequence gen_entropy_conditioned(const GeneratorSpec& spec_in, Rng& rng, GenerationLog* log,
                                    std::uint64_t trial_budget)
{
    require_family(spec_in, {Family::EntropyConditioned}, "gen_entropy_conditioned");
    const GeneratorSpec spec = resolve(spec_in);
    std::vector<std::int32_t> v(spec.total_len);
    sample_entropy(spec, rng, v, log, trial_budget);
    return to_bit_sequence(v);
}

AnySequence generate(const GeneratorSpec& spec, Rng& rng, GenerationLog* log)
{
    switch (spec.family) {
    case Family::Uniform: return gen_uniform(spec, rng);
    case Family::FRW: return gen_frw(spec, rng, log);
    case Family::OptFRW: return gen_opt_frw(spec, rng, log);
    case Family::AFRW: return gen_afrw(spec, rng, log);
    case Family::AOFRW: return gen_aofrw(spec, rng, log);
    case Family::EntropyConditioned: return gen_entropy_conditioned(spec, rng, log);
    }
    throw ConfigError("unknown family");
}

nlohmann::json to_json(const GeneratorSpec& spec)
{
    return nlohmann::json{
        {"family", to_string(spec.family)},
        {"delta", spec.delta},
        {"base_len", spec.base_len},
        {"total_len", spec.total_len},
        {"flip_mode", to_string(spec.flip_mode)},
        {"k", spec.k},
        {"seed", spec.seed},
    };
}

GeneratorSpec spec_from_json(const nlohmann::json& j)
{
    static const char* const kFields[] = {"family", "delta", "base_len", "total_len", "flip_mode", "k", "seed"};
    if (!j.is_object()) {
        throw ConfigError("generator spec must be a JSON object");
    }
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(std::begin(kFields), std::end(kFields), [&](const char* f) { return key == f; }) ==
            std::end(kFields)) {
            throw ConfigError("unknown generator spec field '" + key + "'");
        }
    }
    for (const char* f : kFields) {
        if (!j.contains(f)) {
            throw ConfigError(std::string("generator spec missing field '") + f + "'");
        }
    }
    GeneratorSpec s;
    try {
        s.family = parse_family(j.at("family").get<std::string>());
        s.delta = j.at("delta").get<double>();
        s.base_len = j.at("base_len").get<std::uint64_t>();
        s.total_len = j.at("total_len").get<std::uint64_t>();
        s.flip_mode = parse_flip_mode(j.at("flip_mode").get<std::string>());
        s.k = j.at("k").get<double>();
        s.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("generator spec field has the wrong type: ") + e.what());
    }
    validate(s);
    return s;
}

}  // namespace fracwalk
