#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "klooster/error.hpp"
#include "klooster/fields.hpp"
#include "klooster/integers.hpp"
#include "klooster/kloosterman.hpp"
#include "klooster/report.hpp"
#include "klooster/rng.hpp"
#include "klooster/summation.hpp"

namespace klooster {

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Params base_params(const KloostermanTable& table) {
    Params p;
    p.s = table.s;
    p.p = table.p;
    return p;
}

inline std::uint64_t isqrt(std::uint64_t n) {
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

inline void require_sieve(const SieveTables& sieves, std::uint64_t N) {
    if (N > sieves.N()) {
        throw Error(ErrorKind::RangeMismatch,
                    "N=" + std::to_string(N) + " exceeds sieve range " + std::to_string(sieves.N()));
    }
}

}  // namespace detail

/// Q_{s,p}(N): K over square-free n <= N, ascending.
inline SumResult sum_Q(const KloostermanTable& table, const SieveTables& sieves, std::uint64_t N) {
    detail::require_sieve(sieves, N);
    detail::Stopwatch clock;
    ComplexCompensatedSum acc;
    std::uint64_t terms = 0;
    for (std::uint64_t n = 1; n <= N; ++n) {
        if (sieves.mu(n) == 0) continue;
        acc.add(table.at_residue(n));
        ++terms;
    }
    SumResult r{acc.value(), terms, detail::base_params(table), 0.0};
    r.params.N = static_cast<double>(N);
    r.elapsed = clock.seconds();
    return r;
}

namespace detail {

// sum over d in [d_lo, d_hi] of mu(d) sum_{n <= N/d^2} K(d^2 n)
inline SumResult mobius_square_blocks(const KloostermanTable& table, const SieveTables& sieves, std::uint64_t d_lo,
                                      std::uint64_t d_hi, std::uint64_t N) {
    Stopwatch clock;
    ComplexCompensatedSum acc;
    std::uint64_t terms = 0;
    const std::uint64_t p = table.p;
    for (std::uint64_t d = d_lo; d <= d_hi; ++d) {
        const int mu = sieves.mu(d);
        if (mu == 0) continue;
        const std::uint64_t sq = d * d % p;
        const std::uint64_t inner_len = N / (d * d);
        for (std::uint64_t n = 1; n <= inner_len; ++n) {
            const Complex v = table.values[sq * (n % p) % p];
            acc.add(mu > 0 ? v : -v);
        }
        terms += inner_len;
    }
    SumResult r{acc.value(), terms, base_params(table), 0.0};
    r.params.N = static_cast<double>(N);
    r.elapsed = clock.seconds();
    return r;
}

}  // namespace detail

/// Q_{s,p}(N) through the Mobius expansion of the square-free indicator.
inline SumResult sum_Q_decomposed(const KloostermanTable& table, const SieveTables& sieves, std::uint64_t N) {
    detail::require_sieve(sieves, N);
    if (N == 0) return SumResult{{}, 0, detail::base_params(table), 0.0};
    return detail::mobius_square_blocks(table, sieves, 1, detail::isqrt(N), N);
}

/// S(D, N): the Mobius expansion restricted to the dyadic block D <= d < 2D.
inline SumResult sum_S_dyadic(const KloostermanTable& table, const SieveTables& sieves, std::uint64_t D,
                              std::uint64_t N) {
    detail::require_sieve(sieves, N);
    const std::uint64_t root = detail::isqrt(N);
    if (D < 1 || D > root) throw Error(ErrorKind::RangeMismatch, "dyadic block D must satisfy 1 <= D <= sqrt(N)");
    auto r = detail::mobius_square_blocks(table, sieves, D, std::min(2 * D - 1, root), N);
    r.params.D = static_cast<double>(D);
    return r;
}

/// R_{s,p}(N, y) over a precomputed smooth set.
inline SumResult sum_R(const KloostermanTable& table, std::span<const std::uint64_t> smooth, std::uint64_t N,
                       double y) {
    detail::Stopwatch clock;
    ComplexCompensatedSum acc;
    for (std::uint64_t n : smooth) acc.add(table.at_residue(n));
    SumResult r{acc.value(), smooth.size(), detail::base_params(table), 0.0};
    r.params.N = static_cast<double>(N);
    r.params.y = y;
    r.elapsed = clock.seconds();
    return r;
}

/// P_{s,p}(L): K over primes <= L.
inline SumResult sum_P(const KloostermanTable& table, const SieveTables& sieves, std::uint64_t L) {
    detail::require_sieve(sieves, L);
    detail::Stopwatch clock;
    ComplexCompensatedSum acc;
    std::uint64_t terms = 0;
    for (std::uint64_t n = 2; n <= L; ++n) {
        if (!sieves.is_prime(n)) continue;
        acc.add(table.at_residue(n));
        ++terms;
    }
    SumResult r{acc.value(), terms, detail::base_params(table), 0.0};
    r.params.L = static_cast<double>(L);
    r.elapsed = clock.seconds();
    return r;
}

enum class Weight { Mobius, Tau };

/// M_{s,p}(f; N) with f = mu or tau. n_terms counts n with f(n) != 0.
inline SumResult sum_M(const KloostermanTable& table, const SieveTables& sieves, std::uint64_t N, Weight f) {
    detail::require_sieve(sieves, N);
    detail::Stopwatch clock;
    ComplexCompensatedSum acc;
    std::uint64_t terms = 0;
    for (std::uint64_t n = 1; n <= N; ++n) {
        const double w = f == Weight::Mobius ? sieves.mu(n) : static_cast<double>(sieves.tau(n));
        if (w == 0.0) continue;
        acc.add(w * table.at_residue(n));
        ++terms;
    }
    SumResult r{acc.value(), terms, detail::base_params(table), 0.0};
    r.params.N = static_cast<double>(N);
    r.elapsed = clock.seconds();
    return r;
}

/// sum_{n <= K} K(dn), or sum_{n <= K} K(dn) K(en) when e is given.
inline SumResult sum_incomplete(const KloostermanTable& table, std::uint64_t d, std::optional<std::uint64_t> e,
                                std::uint64_t K) {
    const std::uint64_t p = table.p;
    d %= p;
    if (K > p) throw Error(ErrorKind::RangeMismatch, "incomplete sum length exceeds p");
    if (d == 0) throw Error(ErrorKind::DegenerateTwist, "d must be nonzero mod p");
    if (e) {
        *e %= p;
        if (*e == 0 || *e == d) throw Error(ErrorKind::DegenerateTwist, "e/d must avoid 0 and 1 mod p");
    }
    detail::Stopwatch clock;
    ComplexCompensatedSum acc;
    for (std::uint64_t n = 1; n <= K; ++n) {
        const std::uint64_t nr = n % p;
        Complex v = table.values[d * nr % p];
        if (e) v *= table.values[*e * nr % p];
        acc.add(v);
    }
    SumResult r{acc.value(), K, detail::base_params(table), 0.0};
    r.params.N = static_cast<double>(K);
    r.elapsed = clock.seconds();
    return r;
}

/// Closed integer interval [lo, hi]; empty when lo > hi.
struct Interval {
    std::uint64_t lo = 1;
    std::uint64_t hi = 0;
};

/// sum_{d <= D} alpha_d sum_{n in N_d} K(d^r n); weights[d-1] = alpha_d,
/// intervals[d-1] = N_d within [1, N]. Negative r uses inverses mod p.
inline SumResult sum_typeI(const KloostermanTable& table, std::span<const Complex> weights,
                           std::span<const Interval> intervals, int r, std::uint64_t D, std::uint64_t N) {
    const std::uint64_t p = table.p;
    if (r == 0) throw Error(ErrorKind::ZeroExponent, "type-I exponent r must be nonzero");
    if (D > p || N > p) throw Error(ErrorKind::RangeMismatch, "type-I sums need D, N <= p");
    if (weights.size() != D || intervals.size() != D) {
        throw Error(ErrorKind::PreconditionViolation, "weights and intervals must have one entry per d <= D");
    }
    for (std::size_t i = 0; i < D; ++i) {
        if (std::abs(weights[i]) > 1.0 + 1e-12) {
            throw Error(ErrorKind::PreconditionViolation, "weight alpha_" + std::to_string(i + 1) + " exceeds 1");
        }
        if (intervals[i].lo <= intervals[i].hi && (intervals[i].lo < 1 || intervals[i].hi > N)) {
            throw Error(ErrorKind::PreconditionViolation, "interval for d=" + std::to_string(i + 1) + " leaves [1, N]");
        }
    }
    detail::Stopwatch clock;
    ComplexCompensatedSum acc;
    std::uint64_t terms = 0;
    for (std::uint64_t d = 1; d <= D; ++d) {
        const std::uint64_t dr = d % p;
        if (dr == 0 && r < 0) throw Error(ErrorKind::DomainError, "d = p has no inverse");
        const std::uint64_t base = r > 0 ? pow_mod(dr, static_cast<std::uint64_t>(r), p)
                                         : pow_mod(pow_mod(dr, p - 2, p), static_cast<std::uint64_t>(-r), p);
        const Interval& iv = intervals[d - 1];
        ComplexCompensatedSum inner;
        for (std::uint64_t n = iv.lo; n <= iv.hi; ++n) inner.add(table.values[base * (n % p) % p]);
        if (iv.lo <= iv.hi) terms += iv.hi - iv.lo + 1;
        acc.add(weights[d - 1] * inner.value());
    }
    SumResult res{acc.value(), terms, detail::base_params(table), 0.0};
    res.params.N = static_cast<double>(N);
    res.params.D = static_cast<double>(D);
    res.params.r = r;
    res.elapsed = clock.seconds();
    return res;
}

enum class WeightPreset { Ones, Mobius, Random };

/// alpha_d for d = 1..D.
inline std::vector<Complex> typeI_weights(WeightPreset preset, std::uint64_t D, std::uint64_t seed = 0,
                                          const SieveTables* sieves = nullptr) {
    std::vector<Complex> w(D, Complex{1.0, 0.0});
    if (preset == WeightPreset::Mobius) {
        const SieveTables local = sieves ? SieveTables{} : build_sieves(std::max<std::uint64_t>(D, 1));
        const SieveTables& s = sieves ? *sieves : local;
        for (std::uint64_t d = 1; d <= D; ++d) w[d - 1] = static_cast<double>(s.mu(d));
    } else if (preset == WeightPreset::Random) {
        CounterRng rng(seed, 0x7791);
        for (auto& v : w) v = rng.unit_disk();
    }
    return w;
}

/// N_d = [1, N] for every d, or a seeded random subinterval of [1, N].
inline std::vector<Interval> typeI_intervals(std::uint64_t D, std::uint64_t N, bool random, std::uint64_t seed = 0) {
    std::vector<Interval> out(D, Interval{1, N});
    if (!random) return out;
    CounterRng rng(seed, 0x1A7E);
    for (auto& iv : out) {
        std::uint64_t a = rng.uniform_int(1, N);
        std::uint64_t b = rng.uniform_int(1, N);
        if (a > b) std::swap(a, b);
        iv = Interval{a, b};
    }
    return out;
}

/// {d^r mod p : 1 <= d <= D}, sorted and deduplicated.
inline std::vector<std::uint64_t> power_residue_set(std::uint64_t p, std::uint64_t D, int r) {
    if (r == 0) throw Error(ErrorKind::ZeroExponent, "exponent r must be nonzero");
    if (D >= p) throw Error(ErrorKind::RangeMismatch, "power residue set needs D < p");
    std::vector<std::uint64_t> out;
    out.reserve(D);
    for (std::uint64_t d = 1; d <= D; ++d) {
        const std::uint64_t base = r > 0 ? d : pow_mod(d, p - 2, p);
        out.push_back(pow_mod(base, static_cast<std::uint64_t>(r > 0 ? r : -r), p));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct CongruenceCount {
    std::uint64_t H = 0;
    std::vector<std::uint64_t> M_set;
    std::uint64_t p = 0;
    std::uint64_t count = 0;
};

/// J(H, M) = #{x, y in [1, H], k, m in M : xk = ym mod p}, via a histogram
/// of the products xk mod p.
inline CongruenceCount count_J(std::uint64_t p, std::uint64_t H, std::span<const std::uint64_t> M_set) {
    if (H < 1) throw Error(ErrorKind::DomainError, "H must be >= 1");
    for (auto k : M_set) {
        if (k == 0 || k >= p) throw Error(ErrorKind::DomainError, "M must lie in 1..p-1");
    }
    std::vector<std::uint64_t> histogram(p, 0);
    for (std::uint64_t x = 1; x <= H; ++x) {
        const std::uint64_t xr = x % p;
        for (auto k : M_set) ++histogram[xr * k % p];
    }
    std::uint64_t total = 0;
    for (auto c : histogram) total += c * c;
    return CongruenceCount{H, {M_set.begin(), M_set.end()}, p, total};
}

}  // namespace klooster
