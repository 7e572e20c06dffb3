#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fracwalk/errors.hpp"

namespace fracwalk {

constexpr bool is_pow2(std::uint64_t x) noexcept { return x != 0 && std::has_single_bit(x); }

constexpr unsigned log2_exact(std::uint64_t x) noexcept
{
    return static_cast<unsigned>(std::bit_width(x) - 1);
}

/// Half-open index range [lo, hi) inside a sequence of length total_len.
class Interval {
public:
    Interval(std::size_t lo, std::size_t hi, std::size_t total_len);

    std::size_t lo() const noexcept { return lo_; }
    std::size_t hi() const noexcept { return hi_; }
    std::size_t total_len() const noexcept { return total_len_; }
    std::size_t length() const noexcept { return hi_ - lo_; }

    /// Length is a power of two and lo is a multiple of the length.
    bool is_aligned() const noexcept
    {
        const std::size_t len = length();
        return is_pow2(len) && lo_ % len == 0;
    }

    bool contains(const Interval& other) const noexcept
    {
        return lo_ <= other.lo_ && other.hi_ <= hi_;
    }

    std::string to_string() const;

    friend bool operator==(const Interval&, const Interval&) = default;

private:
    std::size_t lo_;
    std::size_t hi_;
    std::size_t total_len_;
};

/// Immutable integer-valued sequence with cached prefix sums.
/// prefix()[i] is the sum of the first i values.
template <typename Value>
class BasicSequence {
public:
    using value_type = Value;

    BasicSequence() : prefix_(1, 0) {}
    explicit BasicSequence(std::vector<Value> values);

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    Value operator[](std::size_t i) const noexcept { return values_[i]; }
    std::span<const Value> values() const noexcept { return values_; }
    std::span<const std::int64_t> prefix() const noexcept { return prefix_; }

    /// Sum over [lo, hi). Throws BoundsError when the range is not inside.
    std::int64_t height(std::size_t lo, std::size_t hi) const;
    std::int64_t height(const Interval& iv) const { return height(iv.lo(), iv.hi()); }
    std::int64_t total_height() const noexcept { return prefix_.back(); }

    Interval whole() const { return Interval(0, size(), size()); }

    friend bool operator==(const BasicSequence& a, const BasicSequence& b)
    {
        return a.values_ == b.values_;
    }

private:
    std::vector<Value> values_;
    std::vector<std::int64_t> prefix_;
};

/// Sequence over {-1, +1}.
class BitSequence : public BasicSequence<std::int8_t> {
public:
    BitSequence() = default;
    /// Throws ConfigError if any entry is not -1 or +1.
    explicit BitSequence(std::vector<std::int8_t> bits);

    static BitSequence constant(std::size_t n, int sign);

    /// Copy with every bit negated.
    BitSequence inverted() const;
    BitSequence slice(std::size_t lo, std::size_t hi) const;
};

/// Integer-valued output of the augmented constructions. Entries are odd.
class IntSequence : public BasicSequence<std::int32_t> {
public:
    IntSequence() = default;
    explicit IntSequence(std::vector<std::int32_t> values);

    /// True when every entry is -1 or +1.
    bool is_binary() const noexcept;
    /// Throws ConfigError unless is_binary().
    BitSequence to_bits() const;
};

template <typename Value>
std::int64_t height(const BasicSequence<Value>& seq, const Interval& iv)
{
    return seq.height(iv);
}

/// Cover of iv by disjoint aligned intervals, built by repeatedly removing the
/// largest aligned interval contained in what remains (leftmost on ties).
/// Result is sorted by lo. Requires iv.total_len() to be a power of two.
std::vector<Interval> aligned_decompose(const Interval& iv);

/// All aligned intervals of length at least min_len lying inside [0, n).
/// n need not be a power of two; the lattice is that of the next power of two.
std::vector<Interval> aligned_intervals(std::size_t n, std::size_t min_len);

extern template class BasicSequence<std::int8_t>;
extern template class BasicSequence<std::int32_t>;

}  // namespace fracwalk
