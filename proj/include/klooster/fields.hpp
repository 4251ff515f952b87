#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "klooster/error.hpp"

namespace klooster {

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) noexcept {
    return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) noexcept {
    std::uint64_t result = 1 % m;
    base %= m;
    while (exp != 0) {
        if (exp & 1U) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1U;
    }
    return result;
}

/// Deterministic Miller-Rabin; the first twelve primes as witnesses are
/// sufficient for every n < 2^64.
inline bool is_prime(std::uint64_t n) noexcept {
    constexpr std::array<std::uint64_t, 12> witnesses{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (n < 2) return false;
    for (std::uint64_t q : witnesses) {
        if (n % q == 0) return n == q;
    }
    std::uint64_t d = n - 1;
    int r = 0;
    while ((d & 1U) == 0) {
        d >>= 1U;
        ++r;
    }
    for (std::uint64_t a : witnesses) {
        std::uint64_t x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int i = 1; i < r; ++i) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

/// Distinct prime divisors of n in increasing order (trial division).
inline std::vector<std::uint64_t> distinct_prime_factors(std::uint64_t n) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t q = 2; q * q <= n; ++q) {
        if (n % q == 0) {
            out.push_back(q);
            while (n % q == 0) n /= q;
        }
    }
    if (n > 1) out.push_back(n);
    return out;
}

/// Smallest primitive root of the prime p.
inline std::uint64_t smallest_primitive_root(std::uint64_t p) {
    if (p == 2) return 1;
    const auto factors = distinct_prime_factors(p - 1);
    for (std::uint64_t g = 2; g < p; ++g) {
        bool generator = true;
        for (std::uint64_t q : factors) {
            if (pow_mod(g, (p - 1) / q, p) == 1) {
                generator = false;
                break;
            }
        }
        if (generator) return g;
    }
    throw Error(ErrorKind::CompositeModulus, "no primitive root for " + std::to_string(p));
}

/// Arithmetic context for F_p: primitive root plus inverse and discrete-log
/// tables. Immutable once built.
class PrimeField {
public:
    using Residue = std::uint32_t;

    explicit PrimeField(std::uint64_t p, const Budget& budget = {}) {
        if (p < 3) throw Error(ErrorKind::DomainError, "modulus must be >= 3");
        if (!is_prime(p)) throw Error(ErrorKind::CompositeModulus, std::to_string(p) + " is not prime");
        if (p > 0xFFFFFFFFULL || 3 * sizeof(Residue) * p > budget.memory_bytes) {
            throw Error(ErrorKind::TooLarge, "tables for p=" + std::to_string(p) + " exceed memory budget");
        }
        p_ = p;
        g_ = smallest_primitive_root(p);
        inv_.assign(p, 0);
        inv_[1] = 1;
        for (std::uint64_t i = 2; i < p; ++i) {
            inv_[i] = static_cast<Residue>((p - (p / i) * inv_[p % i] % p) % p);
        }
        pow_g_.resize(p - 1);
        dlog_.assign(p, 0);
        std::uint64_t x = 1;
        for (std::uint64_t k = 0; k + 1 < p; ++k) {
            pow_g_[k] = static_cast<Residue>(x);
            dlog_[x] = static_cast<Residue>(k);
            x = x * g_ % p;
        }
    }

    std::uint64_t p() const noexcept { return p_; }
    std::uint64_t generator() const noexcept { return g_; }

    /// Inverse of a nonzero residue.
    Residue inv(std::uint64_t n) const { return inv_.at(n); }
    /// k with g^k = n, for n in 1..p-1.
    Residue dlog(std::uint64_t n) const { return dlog_.at(n); }
    /// g^k for k in 0..p-2.
    Residue pow_g(std::uint64_t k) const { return pow_g_.at(k); }

    Residue reduce(std::int64_t n) const noexcept {
        const auto m = static_cast<std::int64_t>(p_);
        return static_cast<Residue>(((n % m) + m) % m);
    }
    Residue mul(std::uint64_t a, std::uint64_t b) const noexcept {
        return static_cast<Residue>(a * b % p_);
    }
    Residue pow(std::uint64_t a, std::int64_t e) const {
        a %= p_;
        if (e < 0) {
            if (a == 0) throw Error(ErrorKind::DomainError, "negative power of zero residue");
            a = inv_[a];
            e = -e;
        }
        return static_cast<Residue>(pow_mod(a, static_cast<std::uint64_t>(e), p_));
    }

private:
    std::uint64_t p_ = 0;
    std::uint64_t g_ = 0;
    std::vector<Residue> inv_;
    std::vector<Residue> dlog_;
    std::vector<Residue> pow_g_;
};

inline PrimeField make_ctx(std::uint64_t p, const Budget& budget = {}) { return PrimeField(p, budget); }

/// Smallest prime >= n.
inline std::uint64_t next_prime(std::uint64_t n) {
    while (!is_prime(n)) ++n;
    return n;
}

/// Largest prime <= n (n >= 2).
inline std::uint64_t prev_prime(std::uint64_t n) {
    while (n > 2 && !is_prime(n)) --n;
    return n;
}

}  // namespace klooster
