#include <sstream>

#include "doctest.h"

#include "fracwalk/errors.hpp"
#include "fracwalk/rng.hpp"
#include "fracwalk/sequence.hpp"
#include "fracwalk/serialization.hpp"

using namespace fracwalk;

TEST_SUITE("sequence")
{
    TEST_CASE("height of small sequences")
    {
        CHECK(BitSequence({1, 1, -1}).height(0, 3) == 1);
        CHECK(BitSequence({1, -1, 1, -1}).height(0, 4) == 0);
        CHECK(BitSequence::constant(8, 1).height(Interval(2, 6, 8)) == 4);
    }

    TEST_CASE("height rejects bad ranges and bad bits")
    {
        const BitSequence s({1, -1, 1});
        CHECK_THROWS_AS(s.height(2, 4), BoundsError);
        CHECK_THROWS_AS(s.height(2, 1), BoundsError);
        CHECK_THROWS_AS(BitSequence({1, 0, -1}), ConfigError);
        CHECK_THROWS_AS(Interval(3, 2, 8), BoundsError);
    }

    TEST_CASE("aligned decomposition examples")
    {
        auto eq = [](const std::vector<Interval>& got, std::vector<std::pair<std::size_t, std::size_t>> want) {
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].lo() == want[i].first);
                CHECK(got[i].hi() == want[i].second);
            }
        };
        eq(aligned_decompose(Interval(2, 6, 8)), {{2, 4}, {4, 6}});
        eq(aligned_decompose(Interval(0, 8, 8)), {{0, 8}});
        eq(aligned_decompose(Interval(1, 8, 8)), {{1, 2}, {2, 4}, {4, 8}});
    }

    TEST_CASE("aligned decomposition covers every interval with few pieces")
    {
        const std::size_t T = 64;
        for (std::size_t lo = 0; lo < T; ++lo) {
            for (std::size_t hi = lo + 1; hi <= T; ++hi) {
                const auto parts = aligned_decompose(Interval(lo, hi, T));
                std::size_t at = lo;
                for (const auto& p : parts) {
                    CHECK(p.is_aligned());
                    CHECK(p.lo() == at);
                    at = p.hi();
                }
                CHECK(at == hi);
                CHECK(parts.size() <= 2 * 6);
            }
        }
    }

    TEST_CASE("prefix sums agree with direct sums")
    {
        Rng rng(5);
        std::vector<std::int32_t> v(200);
        for (auto& x : v) {
            x = 2 * static_cast<std::int32_t>(rng.below(7)) - 5;
        }
        const IntSequence s(v);
        for (std::size_t lo = 0; lo < v.size(); lo += 13) {
            for (std::size_t hi = lo; hi <= v.size(); hi += 7) {
                std::int64_t want = 0;
                for (std::size_t i = lo; i < hi; ++i) {
                    want += v[i];
                }
                CHECK(s.height(lo, hi) == want);
            }
        }
    }

    TEST_CASE("csv and binary round trips")
    {
        const BitSequence b({1, -1, -1, 1, 1});
        const IntSequence n({3, -1, 1, -5});
        for (const bool csv : {true, false}) {
            std::stringstream sb, sn;
            if (csv) {
                write_csv(sb, b);
                write_csv(sn, n);
            } else {
                write_binary(sb, b);
                write_binary(sn, n);
            }
            const auto rb = csv ? read_csv(sb) : read_binary(sb);
            const auto rn = csv ? read_csv(sn) : read_binary(sn);
            REQUIRE(std::holds_alternative<BitSequence>(rb));
            REQUIRE(std::holds_alternative<IntSequence>(rn));
            CHECK(std::get<BitSequence>(rb) == b);
            CHECK(std::get<IntSequence>(rn) == n);
        }
    }

    TEST_CASE("malformed files raise FormatError")
    {
        std::stringstream s("1\n2\nx\n");
        CHECK_THROWS_AS(read_csv(s), FormatError);
        std::stringstream junk("not a sequence file");
        CHECK_THROWS_AS(read_binary(junk), FormatError);
    }

    TEST_CASE("derived seeds are stable and distinct")
    {
        CHECK(derive_seed(1, 2) == derive_seed(1, 2));
        CHECK(derive_seed(1, 2) != derive_seed(1, 3));
        CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
        Rng a(9), b(9);
        for (int i = 0; i < 10; ++i) {
            CHECK(a.next_u64() == b.next_u64());
        }
    }
}
