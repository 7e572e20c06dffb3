#include "fracwalk/sequence.hpp"

#include <algorithm>
#include <cassert>
#include <limits>

namespace fracwalk {

Interval::Interval(std::size_t lo, std::size_t hi, std::size_t total_len)
    : lo_(lo), hi_(hi), total_len_(total_len)
{
    if (!(lo < hi && hi <= total_len)) {
        throw BoundsError("interval [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          ") is empty or exceeds length " + std::to_string(total_len));
    }
}

std::string Interval::to_string() const
{
    return "[" + std::to_string(lo_) + "," + std::to_string(hi_) + ")";
}

template <typename Value>
BasicSequence<Value>::BasicSequence(std::vector<Value> values)
    : values_(std::move(values)), prefix_(values_.size() + 1)
{
    prefix_[0] = 0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const std::int64_t next = prefix_[i] + values_[i];
        assert((values_[i] >= 0) ? next >= prefix_[i] : next < prefix_[i]);
        prefix_[i + 1] = next;
    }
}

template <typename Value>
std::int64_t BasicSequence<Value>::height(std::size_t lo, std::size_t hi) const
{
    if (lo > hi || hi > values_.size()) {
        throw BoundsError("height range [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          ") outside sequence of length " + std::to_string(values_.size()));
    }
    return prefix_[hi] - prefix_[lo];
}

template class BasicSequence<std::int8_t>;
template class BasicSequence<std::int32_t>;

namespace {

template <typename V>
std::vector<V> checked_bits(std::vector<V> bits)
{
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != 1 && bits[i] != -1) {
            throw ConfigError("bit " + std::to_string(i) + " is " + std::to_string(bits[i]) +
                              ", expected -1 or +1");
        }
    }
    return bits;
}

}  // namespace

BitSequence::BitSequence(std::vector<std::int8_t> bits)
    : BasicSequence<std::int8_t>(checked_bits(std::move(bits)))
{
}

BitSequence BitSequence::constant(std::size_t n, int sign)
{
    return BitSequence(std::vector<std::int8_t>(n, static_cast<std::int8_t>(sign >= 0 ? 1 : -1)));
}

BitSequence BitSequence::inverted() const
{
    std::vector<std::int8_t> out(values().begin(), values().end());
    for (auto& b : out) {
        b = static_cast<std::int8_t>(-b);
    }
    return BitSequence(std::move(out));
}

BitSequence BitSequence::slice(std::size_t lo, std::size_t hi) const
{
    if (lo > hi || hi > size()) {
        throw BoundsError("slice outside sequence");
    }
    return BitSequence(std::vector<std::int8_t>(values().begin() + static_cast<std::ptrdiff_t>(lo),
                                                values().begin() + static_cast<std::ptrdiff_t>(hi)));
}

IntSequence::IntSequence(std::vector<std::int32_t> values)
    : BasicSequence<std::int32_t>(std::move(values))
{
    const auto v = this->values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] % 2 == 0) {
            throw ConfigError("entry " + std::to_string(i) + " is even; augmented entries are odd");
        }
    }
}

bool IntSequence::is_binary() const noexcept
{
    const auto v = values();
    return std::all_of(v.begin(), v.end(), [](std::int32_t x) { return x == 1 || x == -1; });
}

BitSequence IntSequence::to_bits() const
{
    if (!is_binary()) {
        throw ConfigError("sequence has augmented entries outside {-1,+1}");
    }
    const auto v = values();
    std::vector<std::int8_t> bits(v.size());
    std::transform(v.begin(), v.end(), bits.begin(),
                   [](std::int32_t x) { return static_cast<std::int8_t>(x); });
    return BitSequence(std::move(bits));
}

std::vector<Interval> aligned_decompose(const Interval& iv)
{
    const std::size_t total = iv.total_len();
    if (!is_pow2(total)) {
        throw ConfigError("aligned decomposition needs a power-of-two total length, got " +
                          std::to_string(total));
    }
    std::vector<Interval> out;
    std::vector<std::pair<std::size_t, std::size_t>> pending{{iv.lo(), iv.hi()}};
    while (!pending.empty()) {
        auto [lo, hi] = pending.back();
        pending.pop_back();
        if (lo >= hi) {
            continue;
        }
        // Largest power of two that fits some aligned slot inside [lo, hi).
        std::size_t size = std::bit_floor(hi - lo);
        std::size_t start = 0;
        for (;; size >>= 1) {
            start = (lo + size - 1) / size * size;
            if (start + size <= hi) {
                break;
            }
        }
        out.emplace_back(start, start + size, total);
        pending.emplace_back(start + size, hi);
        pending.emplace_back(lo, start);
    }
    std::sort(out.begin(), out.end(),
              [](const Interval& a, const Interval& b) { return a.lo() < b.lo(); });
    return out;
}

std::vector<Interval> aligned_intervals(std::size_t n, std::size_t min_len)
{
    std::vector<Interval> out;
    if (n == 0) {
        return out;
    }
    const std::size_t top = std::bit_ceil(n);
    for (std::size_t len = std::max<std::size_t>(1, std::bit_ceil(std::max<std::size_t>(min_len, 1)));
         len <= top; len <<= 1) {
        for (std::size_t lo = 0; lo + len <= n; lo += len) {
            out.emplace_back(lo, lo + len, n);
        }
    }
    return out;
}

}  // namespace fracwalk
