#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "klooster/error.hpp"

namespace klooster {

/// A prime factor value that may be +infinity (the convention P(1) = p(1) = +inf).
/// Infinity compares greater than every finite prime and has no integer value.
class PrimeBound {
public:
    constexpr PrimeBound() = default;
    constexpr explicit PrimeBound(std::uint32_t prime) : raw_(prime) {}
    static constexpr PrimeBound infinity() { return PrimeBound(); }

    constexpr bool is_infinite() const noexcept { return raw_ == 0; }
    std::uint32_t value() const {
        if (is_infinite()) throw Error(ErrorKind::DomainError, "value() of infinite prime bound");
        return raw_;
    }

    friend constexpr bool operator==(PrimeBound a, PrimeBound b) noexcept { return a.raw_ == b.raw_; }
    friend constexpr std::strong_ordering operator<=>(PrimeBound a, PrimeBound b) noexcept {
        if (a.is_infinite() && b.is_infinite()) return std::strong_ordering::equal;
        if (a.is_infinite()) return std::strong_ordering::greater;
        if (b.is_infinite()) return std::strong_ordering::less;
        return a.raw_ <=> b.raw_;
    }
    friend constexpr bool operator<=(PrimeBound a, double y) noexcept { return !a.is_infinite() && a.raw_ <= y; }

    friend std::ostream& operator<<(std::ostream& os, PrimeBound b) {
        if (b.is_infinite()) return os << "inf";
        return os << b.raw_;
    }

private:
    std::uint32_t raw_ = 0;
};

/// mu, tau, smallest and largest prime factor for every n in [1, N].
class SieveTables {
public:
    SieveTables() = default;

    std::uint64_t N() const noexcept { return n_; }
    int mu(std::uint64_t n) const { return mu_[check(n)]; }
    std::uint32_t tau(std::uint64_t n) const { return tau_[check(n)]; }
    PrimeBound spf(std::uint64_t n) const { return n == 1 ? PrimeBound::infinity() : PrimeBound(spf_[check(n)]); }
    PrimeBound lpf(std::uint64_t n) const { return n == 1 ? PrimeBound::infinity() : PrimeBound(lpf_[check(n)]); }
    bool is_prime(std::uint64_t n) const { return n >= 2 && spf_[check(n)] == n; }
    bool square_free(std::uint64_t n) const { return mu(n) != 0; }

private:
    friend SieveTables build_sieves(std::uint64_t N, const Budget& budget);

    std::size_t check(std::uint64_t n) const {
        if (n < 1 || n > n_) throw Error(ErrorKind::RangeMismatch, std::to_string(n) + " outside sieve range");
        return static_cast<std::size_t>(n);
    }

    std::uint64_t n_ = 0;
    std::vector<std::int8_t> mu_;
    std::vector<std::uint32_t> tau_;
    std::vector<std::uint32_t> spf_;
    std::vector<std::uint32_t> lpf_;
};

/// Linear sieve over [1, N].
inline SieveTables build_sieves(std::uint64_t N, const Budget& budget = {}) {
    if (N < 1) throw Error(ErrorKind::DomainError, "sieve limit must be >= 1");
    if (N >= 0xFFFFFFFFULL || 14 * (N + 1) > budget.memory_bytes) {
        throw Error(ErrorKind::TooLarge, "sieve up to " + std::to_string(N) + " exceeds memory budget");
    }
    SieveTables t;
    t.n_ = N;
    const std::size_t size = static_cast<std::size_t>(N) + 1;
    t.mu_.assign(size, 0);
    t.tau_.assign(size, 0);
    t.spf_.assign(size, 0);
    t.lpf_.assign(size, 0);
    std::vector<std::uint8_t> spf_exp(size, 0);
    std::vector<std::uint32_t> primes;
    t.mu_[1] = 1;
    t.tau_[1] = 1;
    for (std::uint64_t i = 2; i <= N; ++i) {
        if (t.spf_[i] == 0) {
            t.spf_[i] = static_cast<std::uint32_t>(i);
            t.mu_[i] = -1;
            t.tau_[i] = 2;
            spf_exp[i] = 1;
            primes.push_back(static_cast<std::uint32_t>(i));
        }
        for (std::uint32_t q : primes) {
            const std::uint64_t iq = i * q;
            if (q > t.spf_[i] || iq > N) break;
            t.spf_[iq] = q;
            if (q == t.spf_[i]) {
                t.mu_[iq] = 0;
                spf_exp[iq] = static_cast<std::uint8_t>(spf_exp[i] + 1);
                t.tau_[iq] = t.tau_[i] / (spf_exp[i] + 1U) * (spf_exp[i] + 2U);
            } else {
                t.mu_[iq] = static_cast<std::int8_t>(-t.mu_[i]);
                spf_exp[iq] = 1;
                t.tau_[iq] = t.tau_[i] * 2;
            }
        }
        const std::uint64_t rest = i / t.spf_[i];
        t.lpf_[i] = rest == 1 ? t.spf_[i] : std::max(t.lpf_[rest], t.spf_[i]);
    }
    return t;
}

/// Primes <= limit by a plain Eratosthenes sieve.
inline std::vector<std::uint64_t> primes_up_to(std::uint64_t limit) {
    std::vector<std::uint64_t> out;
    if (limit < 2) return out;
    std::vector<bool> composite(limit + 1, false);
    for (std::uint64_t i = 2; i <= limit; ++i) {
        if (composite[i]) continue;
        out.push_back(i);
        for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = true;
    }
    return out;
}

/// S(N, y): the y-smooth integers in [1, N] in increasing order. 1 counts as
/// smooth for every y. Generated as products of primes <= y, no sieve needed.
inline std::vector<std::uint64_t> smooth_set(std::uint64_t N, double y, const Budget& budget = {}) {
    if (N < 1) throw Error(ErrorKind::DomainError, "N must be >= 1");
    if (y < 2) throw Error(ErrorKind::DomainError, "y must be >= 2");
    const auto limit = static_cast<std::uint64_t>(std::floor(std::min(y, static_cast<double>(N))));
    const auto primes = primes_up_to(limit);
    const std::size_t max_entries = budget.memory_bytes / sizeof(std::uint64_t);

    std::vector<std::uint64_t> out{1};
    // stack of (value, index of smallest prime still allowed)
    std::vector<std::pair<std::uint64_t, std::size_t>> stack{{1, 0}};
    while (!stack.empty()) {
        const auto [value, first] = stack.back();
        stack.pop_back();
        for (std::size_t j = first; j < primes.size(); ++j) {
            if (value > N / primes[j]) break;
            const std::uint64_t next = value * primes[j];
            out.push_back(next);
            if (out.size() > max_entries) throw Error(ErrorKind::TooLarge, "smooth set exceeds memory budget");
            stack.emplace_back(next, j);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Psi(N, y) by scanning the largest-prime-factor table.
inline std::uint64_t psi_by_scan(const SieveTables& sieves, std::uint64_t N, double y) {
    if (N > sieves.N()) throw Error(ErrorKind::RangeMismatch, "N exceeds sieve range");
    std::uint64_t count = N >= 1 ? 1 : 0;
    for (std::uint64_t n = 2; n <= N; ++n) {
        if (sieves.lpf(n) <= y) ++count;
    }
    return count;
}

/// sum_{q <= y prime} log q / (q^alpha - 1) - log N; strictly decreasing in alpha.
inline double saddle_residual(double alpha, double N, const std::vector<std::uint64_t>& primes) {
    double total = 0.0;
    for (std::uint64_t q : primes) {
        const double lq = std::log(static_cast<double>(q));
        total += lq / std::expm1(alpha * lq);
    }
    return total - std::log(N);
}

/// Saddle point alpha(N, y) of the y-smooth integers up to N, by bisection
/// on [1e-6, 4] to absolute tolerance 1e-9.
inline double saddle_point_alpha(double N, double y) {
    if (y < 2) throw Error(ErrorKind::DomainError, "y must be >= 2");
    if (N < 16) throw Error(ErrorKind::DomainError, "N must be >= 16");
    if (y > N) throw Error(ErrorKind::DomainError, "y must not exceed N");
    const auto primes = primes_up_to(static_cast<std::uint64_t>(std::floor(y)));
    double lo = 1e-6;
    double hi = 4.0;
    for (int iter = 0; iter < 200 && hi - lo > 1e-9; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (saddle_residual(mid, N, primes) > 0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct SmoothFactorization {
    std::uint64_t n = 0;
    std::uint64_t ell = 0;
    std::uint64_t m = 0;
    double L0 = 0.0;
};

/// n = ell * m with ell the shortest ascending prefix of n's prime factors
/// exceeding L0. Then ell > L0, ell / P(ell) <= L0 and p(m) >= P(ell).
inline SmoothFactorization factor_smooth(std::uint64_t n, double L0, const SieveTables& sieves) {
    if (static_cast<double>(n) <= L0) {
        throw Error(ErrorKind::OutOfRange, std::to_string(n) + " <= L0 has no such factorization");
    }
    if (n > sieves.N()) throw Error(ErrorKind::RangeMismatch, "n exceeds sieve range");
    std::uint64_t ell = 1;
    std::uint64_t rest = n;
    while (static_cast<double>(ell) <= L0) {
        const std::uint64_t q = sieves.spf(rest).value();
        ell *= q;
        rest /= q;
    }
    return SmoothFactorization{n, ell, rest, L0};
}

/// Rows "n,mu,spf,lpf,tau" for n in [1, N].
inline void write_sieve_csv(std::ostream& os, const SieveTables& sieves, std::uint64_t N) {
    os << "n,mu,spf,lpf,tau\n";
    for (std::uint64_t n = 1; n <= std::min(N, sieves.N()); ++n) {
        os << n << ',' << sieves.mu(n) << ',' << sieves.spf(n) << ',' << sieves.lpf(n) << ',' << sieves.tau(n)
           << '\n';
    }
}

inline void write_smooth_csv(std::ostream& os, const std::vector<std::uint64_t>& smooth) {
    os << "n\n";
    for (auto n : smooth) os << n << '\n';
}

}  // namespace klooster
