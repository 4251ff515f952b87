#include <gtest/gtest.h>

#include "klooster/fields.hpp"
#include "klooster/rng.hpp"

using namespace klooster;

namespace {

bool trial_division_prime(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

}  // namespace

TEST(IsPrime, SmallValues) {
    EXPECT_TRUE(is_prime(2));
    EXPECT_FALSE(is_prime(1));
    EXPECT_FALSE(is_prime(0));
    EXPECT_TRUE(is_prime(1000003));
    EXPECT_EQ(is_prime(1000003), trial_division_prime(1000003));
}

TEST(IsPrime, AgreesWithTrialDivisionBelow100000) {
    for (std::uint64_t n = 0; n < 100000; ++n) ASSERT_EQ(is_prime(n), trial_division_prime(n)) << n;
}

TEST(IsPrime, LargeKnownValues) {
    EXPECT_TRUE(is_prime(18446744073709551557ULL));   // largest prime below 2^64
    EXPECT_FALSE(is_prime(3825123056546413051ULL));   // strong pseudoprime to bases 2..23
    EXPECT_FALSE(is_prime(4294967297ULL));            // 641 * 6700417
}

TEST(MakeCtx, SmallestPrimitiveRoot) {
    EXPECT_EQ(make_ctx(5).generator(), 2U);
    EXPECT_EQ(make_ctx(7).generator(), 3U);
    EXPECT_EQ(make_ctx(3).generator(), 2U);
}

TEST(MakeCtx, PrimitiveRootMatchesExhaustiveOrder) {
    for (std::uint64_t p : {5ULL, 7ULL, 11ULL, 13ULL, 23ULL, 41ULL, 71ULL}) {
        std::uint64_t expected = 0;
        for (std::uint64_t g = 2; g < p && expected == 0; ++g) {
            std::uint64_t x = 1;
            std::uint64_t order = 0;
            do {
                x = x * g % p;
                ++order;
            } while (x != 1);
            if (order == p - 1) expected = g;
        }
        EXPECT_EQ(make_ctx(p).generator(), expected) << p;
    }
}

TEST(MakeCtx, Errors) {
    try {
        make_ctx(4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::CompositeModulus);
    }
    try {
        make_ctx(1000003, Budget{1024, 1e9});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::TooLarge);
    }
}

TEST(MakeCtx, TableInvariantsForAllPrimesUpTo10000) {
    for (std::uint64_t p = 3; p <= 10000; ++p) {
        if (!is_prime(p)) continue;
        const PrimeField ctx(p);
        std::vector<bool> seen(p, false);
        for (std::uint64_t k = 0; k + 1 < p; ++k) {
            const auto x = ctx.pow_g(k);
            ASSERT_GE(x, 1U);
            ASSERT_FALSE(seen[x]);
            seen[x] = true;
            ASSERT_EQ(ctx.dlog(x), k);
        }
        for (std::uint64_t n = 1; n < p; ++n) {
            ASSERT_EQ(n * ctx.inv(n) % p, 1U);
            ASSERT_EQ(ctx.pow_g(ctx.dlog(n)), n);
        }
    }
}

TEST(MakeCtx, Fermat) {
    CounterRng rng(7, 0);
    for (std::uint64_t p : {3ULL, 101ULL, 10007ULL, 1000003ULL}) {
        const PrimeField ctx(p);
        for (int i = 0; i < 100; ++i) {
            const auto n = rng.uniform_int(1, p - 1);
            EXPECT_EQ(ctx.pow(n, static_cast<std::int64_t>(p - 1)), 1U);
            EXPECT_EQ(ctx.mul(ctx.pow(n, -1), n), 1U);
        }
    }
}
