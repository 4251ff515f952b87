#include <gtest/gtest.h>

#include <numbers>

#include "klooster/fft.hpp"
#include "klooster/rng.hpp"

using namespace klooster;

namespace {

std::vector<Complex> naive_dft(const std::vector<Complex>& x) {
    const std::size_t n = x.size();
    std::vector<Complex> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        Complex acc{};
        for (std::size_t k = 0; k < n; ++k) {
            const long double angle = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(j * k % n) / n;
            acc += x[k] * Complex(std::cos(static_cast<double>(angle)), std::sin(static_cast<double>(angle)));
        }
        out[j] = acc;
    }
    return out;
}

}  // namespace

TEST(Dft, MatchesNaiveTransformForEveryLengthUpTo70) {
    CounterRng rng(3, 1);
    for (std::size_t n = 1; n <= 70; ++n) {
        std::vector<Complex> x(n);
        for (auto& v : x) v = rng.unit_disk();
        const auto fast = Dft(n).forward(x);
        const auto slow = naive_dft(x);
        for (std::size_t j = 0; j < n; ++j) ASSERT_LT(std::abs(fast[j] - slow[j]), 1e-12 * n) << n << " " << j;
    }
}

TEST(Dft, InverseRoundTrip) {
    CounterRng rng(3, 2);
    for (std::size_t n : {1U, 2U, 7U, 100U, 1000U, 1024U, 4001U}) {
        std::vector<Complex> x(n);
        for (auto& v : x) v = rng.unit_disk();
        const Dft dft(n);
        const auto back = dft.inverse(dft.forward(x));
        double worst = 0;
        for (std::size_t k = 0; k < n; ++k) worst = std::max(worst, std::abs(back[k] - x[k]));
        EXPECT_LT(worst, 1e-13) << n;
    }
}

TEST(Dft, RejectsWrongLength) {
    const Dft dft(5);
    std::vector<Complex> x(4);
    EXPECT_THROW(dft.forward(x), std::invalid_argument);
}
