#include <gtest/gtest.h>

#include "klooster/kloosterman.hpp"
#include "klooster/sums.hpp"

using namespace klooster;

namespace {

KloostermanTable table_for(std::uint64_t p, unsigned s = 2) { return kloosterman_bulk(PrimeField(p), s); }

void expect_error(ErrorKind kind, const auto& fn) {
    try {
        fn();
        FAIL() << "expected " << to_string(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

// x k = y m (mod p), four nested loops
std::uint64_t brute_J(std::uint64_t p, std::uint64_t H, const std::vector<std::uint64_t>& M) {
    std::uint64_t count = 0;
    for (std::uint64_t x = 1; x <= H; ++x)
        for (std::uint64_t y = 1; y <= H; ++y)
            for (auto k : M)
                for (auto m : M) count += (x * k) % p == (y * m) % p;
    return count;
}

}  // namespace

// Pins below come from an independent brute-force evaluation of the defining sums.

TEST(SumQ, Pin) {
    const auto t = table_for(101);
    const auto s = build_sieves(101);
    const auto q = sum_Q(t, s, 101);
    EXPECT_EQ(q.n_terms, 62U);
    EXPECT_NEAR(q.value.real(), -1.07296858862379, 1e-9);
    EXPECT_NEAR(q.value.imag(), 0.0, 1e-9);
}

TEST(SumQ, DecompositionIdentity) {
    const auto t = table_for(1009, 3);
    const auto s = build_sieves(1009);
    for (std::uint64_t N : {1ULL, 2ULL, 17ULL, 500ULL, 1009ULL}) {
        EXPECT_LE(std::abs(sum_Q(t, s, N).value - sum_Q_decomposed(t, s, N).value), 1e-9) << N;
    }
}

TEST(SumQ, DyadicBlocksTile) {
    const auto t = table_for(1009);
    const auto s = build_sieves(1009);
    Complex total{};
    for (std::uint64_t D = 1; D * D <= 1009; D *= 2) total += sum_S_dyadic(t, s, D, 1009).value;
    EXPECT_LE(std::abs(total - sum_Q(t, s, 1009).value), 1e-9);
}

TEST(SumS, Pin) {
    const auto t = table_for(211);
    const auto s = build_sieves(100);
    const auto r = sum_S_dyadic(t, s, 2, 100);
    EXPECT_NEAR(r.value.real(), -9.53637323171196, 1e-9);
    EXPECT_NEAR(r.value.imag(), 0.0, 1e-9);
    expect_error(ErrorKind::RangeMismatch, [&] { sum_S_dyadic(t, s, 11, 100); });
}

TEST(SumR, Pin) {
    const auto t = table_for(101);
    const auto smooth = smooth_set(100, 5);
    const auto r = sum_R(t, smooth, 100, 5);
    EXPECT_EQ(r.n_terms, 34U);
    EXPECT_NEAR(r.value.real(), 5.5816671232487, 1e-9);
    EXPECT_NEAR(r.value.imag(), 0.0, 1e-9);
}

TEST(SumP, Pin) {
    const auto t = table_for(101);
    const auto s = build_sieves(101);
    EXPECT_NEAR(sum_P(t, s, 101).value.real(), -2.89471600487441, 1e-9);
}

TEST(SumM, MobiusPinAndTauMatchesLoop) {
    const auto t = table_for(101);
    const auto s = build_sieves(300);
    EXPECT_NEAR(sum_M(t, s, 101, Weight::Mobius).value.real(), 6.97272357513791, 1e-9);
    Complex expected{};
    for (std::uint64_t n = 1; n <= 300; ++n) expected += static_cast<double>(s.tau(n)) * t(static_cast<std::int64_t>(n));
    EXPECT_LE(std::abs(sum_M(t, s, 300, Weight::Tau).value - expected), 1e-9);
}

TEST(SumIncomplete, Pin) {
    const auto t = table_for(101);
    const auto r = sum_incomplete(t, 3, 7, 50);
    EXPECT_NEAR(r.value.real(), 3.41236096739453, 1e-9);
    EXPECT_NEAR(r.value.imag(), 0.0, 1e-9);
}

TEST(SumIncomplete, FullLengthSingleTwistIsCompleteSum) {
    const auto t = table_for(1009, 3);
    // over n = 1..p the twist permutes residues, so this is sum_x K(x) = (-1)^s p^{-(s-1)/2}
    EXPECT_NEAR(sum_incomplete(t, 5, std::nullopt, 1009).value.real(), -1.0 / 1009.0, 1e-9);
}

TEST(SumIncomplete, Errors) {
    const auto t = table_for(101);
    expect_error(ErrorKind::DegenerateTwist, [&] { sum_incomplete(t, 101, std::nullopt, 10); });
    expect_error(ErrorKind::DegenerateTwist, [&] { sum_incomplete(t, 3, 3, 10); });
    expect_error(ErrorKind::DegenerateTwist, [&] { sum_incomplete(t, 3, 202, 10); });
    expect_error(ErrorKind::RangeMismatch, [&] { sum_incomplete(t, 3, 7, 102); });
}

TEST(SumTypeI, Pin) {
    const auto t = table_for(101);
    const auto w = typeI_weights(WeightPreset::Ones, 3);
    const auto iv = typeI_intervals(3, 20, false);
    const auto r = sum_typeI(t, w, iv, -1, 3, 20);
    EXPECT_NEAR(r.value.real(), -2.43111688939864, 1e-9);
    EXPECT_EQ(r.n_terms, 60U);
}

TEST(SumTypeI, TriangleInequality) {
    const auto t = table_for(1009);
    const auto w = typeI_weights(WeightPreset::Random, 40, 7);
    const auto iv = typeI_intervals(40, 500, true, 7);
    const auto r = sum_typeI(t, w, iv, 2, 40, 500);
    double trivial = 0.0;
    for (const auto& i : iv) trivial += i.lo <= i.hi ? 2.0 * static_cast<double>(i.hi - i.lo + 1) : 0.0;
    EXPECT_LE(std::abs(r.value), trivial);
}

TEST(SumTypeI, Errors) {
    const auto t = table_for(101);
    const auto w = typeI_weights(WeightPreset::Ones, 3);
    const auto iv = typeI_intervals(3, 20, false);
    expect_error(ErrorKind::ZeroExponent, [&] { sum_typeI(t, w, iv, 0, 3, 20); });
    auto heavy = w;
    heavy[1] = Complex{1.5, 0.0};
    expect_error(ErrorKind::PreconditionViolation, [&] { sum_typeI(t, heavy, iv, 1, 3, 20); });
    auto wide = iv;
    wide[2] = Interval{1, 30};
    expect_error(ErrorKind::PreconditionViolation, [&] { sum_typeI(t, w, wide, 1, 3, 20); });
}

TEST(TypeIInputs, PresetsAreDeterministicAndBounded) {
    const auto a = typeI_weights(WeightPreset::Random, 50, 3);
    EXPECT_EQ(a, typeI_weights(WeightPreset::Random, 50, 3));
    for (auto v : a) EXPECT_LE(std::abs(v), 1.0);
    const auto mu = typeI_weights(WeightPreset::Mobius, 6);
    EXPECT_EQ(mu[3], Complex(0.0, 0.0));
    EXPECT_EQ(mu[5], Complex(1.0, 0.0));
    for (const auto& iv : typeI_intervals(30, 100, true, 9)) {
        EXPECT_GE(iv.lo, 1U);
        EXPECT_LE(iv.hi, 100U);
    }
}

TEST(SumsAreDeterministic, RepeatedCallsAgreeBitwise) {
    const auto t = table_for(1009);
    const auto s = build_sieves(1009);
    const auto a = sum_Q(t, s, 1009).value;
    const auto b = sum_Q(t, s, 1009).value;
    EXPECT_EQ(a, b);
}

TEST(PowerResidues, Examples) {
    EXPECT_EQ(power_residue_set(7, 3, 2), (std::vector<std::uint64_t>{1, 2, 4}));
    EXPECT_EQ(power_residue_set(5, 2, -1), (std::vector<std::uint64_t>{1, 3}));
    EXPECT_EQ(power_residue_set(7, 2, -1), (std::vector<std::uint64_t>{1, 4}));
    expect_error(ErrorKind::ZeroExponent, [] { power_residue_set(7, 3, 0); });
    expect_error(ErrorKind::RangeMismatch, [] { power_residue_set(7, 7, 1); });
}

TEST(CountJ, Examples) {
    const std::vector<std::uint64_t> one{1};
    EXPECT_EQ(count_J(7, 2, one).count, 2U);
    const std::vector<std::uint64_t> qr{1, 2, 4};
    EXPECT_EQ(count_J(7, 1, qr).count, 3U);
    const std::vector<std::uint64_t> all{1, 2, 3, 4};
    EXPECT_EQ(count_J(5, 4, all).count, brute_J(5, 4, all));
}

TEST(CountJ, MatchesBruteForce) {
    for (std::uint64_t p : {7ULL, 31ULL, 101ULL}) {
        for (std::uint64_t H : {1ULL, 5ULL, 40ULL}) {
            for (int r : {1, 2, -1}) {
                const auto M = power_residue_set(p, std::min<std::uint64_t>(p - 1, 12), r);
                EXPECT_EQ(count_J(p, H, M).count, brute_J(p, H, M)) << p << " " << H << " " << r;
            }
        }
    }
}

TEST(CountJ, Errors) {
    const std::vector<std::uint64_t> bad{0};
    expect_error(ErrorKind::DomainError, [&] { count_J(7, 3, bad); });
    const std::vector<std::uint64_t> ok{1};
    expect_error(ErrorKind::DomainError, [&] { count_J(7, 0, ok); });
}
