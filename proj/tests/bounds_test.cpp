#include <gtest/gtest.h>

#include "klooster/bounds.hpp"
#include "klooster/fft.hpp"

using namespace klooster;

namespace {

void expect_error(ErrorKind kind, const auto& fn) {
    try {
        fn();
        FAIL() << "expected " << to_string(kind);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
    }
}

}  // namespace

TEST(Theorem12, ExponentAtFullLength) {
    const double p = 1000003.0;
    EXPECT_NEAR(bound_theorem12(p, p, 2, 8) / std::pow(p, 0.75 - 1.0 / 232.0), 1.0, 1e-12);
}

TEST(Theorem12, OptimalEll) {
    EXPECT_EQ(optimal_ell(1000003.0, 1000003.0, 16), 8);
    expect_error(ErrorKind::NoFeasibleEll, [] { optimal_ell(1e6, 1e3, 16); });
    expect_error(ErrorKind::DomainError, [] { optimal_ell(1e6, 1e6, 1); });
}

TEST(Theorem12, OptimalEllMatchesBruteForce) {
    const double p = 1e8;
    const double N = std::pow(p, 0.9);
    int best = 0;
    double best_value = 1e300;
    for (int ell = 2; ell <= 40; ell += 2) {
        if (N < std::pow(p, 0.5 + 2.0 / ell) || N > p) continue;
        const double v = bound_theorem12(p, N, 2, ell);
        if (v < best_value) {
            best_value = v;
            best = ell;
        }
    }
    EXPECT_EQ(optimal_ell(p, N, 40), best);
}

TEST(Theorem12, LogDomainMatchesDirectPowers) {
    for (double p : {1009.0, 100003.0, 1e9 + 7}) {
        for (int ell : {4, 6, 8, 12}) {
            const double N = std::pow(p, 0.5 + 2.0 / ell) * 1.5;
            if (N > p) continue;
            const double direct = std::sqrt(N) * std::pow(p, 0.25) *
                                  std::pow(std::pow(p, 0.5 + 2.0 / ell) / N, 1.0 / (2.0 * (4.0 * ell - 3.0)));
            EXPECT_NEAR(bound_theorem12(p, N, 3, ell) / direct, 1.0, 1e-12);
        }
    }
}

TEST(Theorem12, WindowEdgeHasNoSaving) {
    const double p = 1000003.0;
    const int ell = 6;
    const double edge = std::pow(p, 0.5 + 2.0 / ell);
    EXPECT_NEAR(bound_theorem12(p, edge, 2, ell) / bound_sqrtN(p, edge), 1.0, 1e-12);
}

TEST(Theorem12, Errors) {
    expect_error(ErrorKind::OutOfRange, [] { bound_theorem12(1e6, 2e6, 2, 8); });
    expect_error(ErrorKind::OutOfRange, [] { bound_theorem12(1e6, 1e3, 2, 8); });
    expect_error(ErrorKind::DomainError, [] { bound_theorem12(1e6, 1e6, 2, 7); });
}

TEST(TrivialBounds, Values) {
    EXPECT_EQ(bound_trivial_Q(10, 2), 14.0);
    EXPECT_EQ(bound_trivial_Q(3, 1), 3.0);
    EXPECT_EQ(bound_trivial_Q(100, 2), 122.0);
    EXPECT_EQ(count_square_free(1), 1U);
    const auto sieves = build_sieves(5000);
    std::uint64_t scanned = 0;
    for (std::uint64_t n = 1; n <= 5000; ++n) scanned += sieves.square_free(n);
    EXPECT_EQ(count_square_free(5000), scanned);
}

TEST(Balancing, D0AtWindowEdge) {
    const double p = 1000003.0;
    for (int ell : {4, 6, 8}) {
        const double edge = std::pow(p, 0.5 + 2.0 / ell);
        EXPECT_NEAR(balance_D0(p, edge, ell) / std::pow(p, 1.0 / ell), 1.0, 1e-9) << ell;
    }
}

TEST(Balancing, D0EquatesBothTerms) {
    for (double p : {10007.0, 1000003.0, 1e9 + 7}) {
        for (int ell : {4, 6, 8, 10}) {
            for (double t : {0.0, 0.3, 0.7, 1.0}) {
                const double lo = 0.5 + 2.0 / ell;
                const double N = std::pow(p, lo + t * (1.0 - lo));
                const double d0 = balance_D0(p, N, ell);
                EXPECT_NEAR(balance_f1(p, d0) / balance_f2(p, N, d0, ell), 1.0, 1e-9);
                EXPECT_GE(d0, 1.0 - 1e-9);
                EXPECT_LE(d0, std::sqrt(N) * (1 + 1e-9));
            }
        }
    }
}

TEST(Balancing, L0) {
    const double p = 1000003.0;
    EXPECT_NEAR(balance_L0(p, p, 1.0) / std::pow(p, 0.75), 1.0, 1e-12);
    for (double alpha : {0.2, 0.5, 0.9, 1.5}) {
        const double N = std::pow(p, 0.8);
        const double L0 = balance_L0(p, N, alpha);
        EXPECT_NEAR((L0 * std::pow(N, -alpha)) / (std::sqrt(p) * std::pow(L0, -alpha)), 1.0, 1e-9);
    }
    expect_error(ErrorKind::OutOfRange, [] { balance_L0(1e6, 1e6, 0.0); });
    expect_error(ErrorKind::OutOfRange, [] { balance_L0(1e6, 10.0, 0.5); });
}

TEST(Theorem15, ExponentsAtAlphaOne) {
    EXPECT_DOUBLE_EQ(theorem15_beta(1.0), 0.125);
    EXPECT_DOUBLE_EQ(theorem15_gamma(1.0), 0.25);
    const auto b = bound_theorem15(10007.0, 10007.0, 100.0, 1.0, 1000);
    EXPECT_NEAR(b.rhs / (1000.0 * 10.0 * std::pow(10007.0, 0.125 - 0.25)), 1.0, 1e-12);
}

TEST(Theorem15, Errors) {
    expect_error(ErrorKind::OutOfRange, [] { bound_theorem15(1e6, 100.0, 50.0, 0.5, 10); });
    expect_error(ErrorKind::OutOfRange, [] { bound_theorem15(1e6, 1e6, 2.0, 0.5, 10); });
    expect_error(ErrorKind::OutOfRange, [] { bound_theorem15(1e6, 1e6, 100.0, 0.0, 10); });
}

TEST(Domination, SecondTermInsideWindow) {
    for (double p : {10007.0, 1e9 + 7}) {
        for (int ell = 4; ell <= 16; ell += 2) {
            EXPECT_TRUE(second_term_dominated(p, p, ell));
            EXPECT_TRUE(second_term_dominated(p, std::pow(p, 0.5 + 2.0 / ell), ell));
        }
    }
}

TEST(Domination, Theorem15Grid) {
    for (double alpha = 0.05; alpha <= 1.0; alpha += 0.05) {
        for (double e = 0.5; e <= 3.0; e += 0.25) {
            EXPECT_TRUE(theorem15_domination_holds(1e6, std::pow(1e6, e), alpha));
        }
    }
}

TEST(Domination, NontrivialityConditions) {
    EXPECT_TRUE(theorem15_nontrivial_N(1e6, std::pow(1e6, 0.6), 1.0));
    EXPECT_FALSE(theorem15_nontrivial_N(1e6, std::pow(1e6, 0.4), 1.0));
    EXPECT_TRUE(theorem15_nontrivial_y(1e6, 1e4));
    EXPECT_FALSE(theorem15_nontrivial_y(1e6, 1e3));
}

TEST(LemmaBounds, Values) {
    EXPECT_NEAR(bound_incomplete(101.0), std::sqrt(101.0) * std::log(101.0), 1e-12);
    EXPECT_DOUBLE_EQ(bound_J_leading(101.0, 10.0, 5.0), 2500.0 / 101.0);
    const double direct = 10.0 * 500.0 * std::pow(1.0 / 500.0 + std::pow(1009.0, 1.25) / (10.0 * 250000.0), 1.0 / 8.0);
    EXPECT_NEAR(bound_typeI(1009.0, 10.0, 500.0, 4) / direct, 1.0, 1e-12);
}

TEST(Report, RatioAndVerdict) {
    SumResult s;
    s.value = Complex{3.0, 4.0};
    const auto r = report(s, 2.0, 10.0);
    EXPECT_DOUBLE_EQ(r.lhs, 5.0);
    EXPECT_DOUBLE_EQ(r.ratio, 2.5);
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(report(s, 0.1, 10.0).pass);
    expect_error(ErrorKind::NonpositiveBound, [&] { report(s, 0.0, 10.0); });
    expect_error(ErrorKind::NonpositiveBound, [&] { report(s, -1.0, 10.0); });
}
