#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "klooster/error.hpp"
#include "klooster/fft.hpp"
#include "klooster/fields.hpp"
#include "klooster/report.hpp"
#include "klooster/summation.hpp"

namespace klooster {

enum class Method : std::uint8_t { Direct = 0, Bulk = 1 };

/// Normalized hyper-Kloosterman sums K_{s,p}(n) for every residue n.
struct KloostermanTable {
    unsigned s = 0;
    std::uint64_t p = 0;
    std::vector<Complex> values;
    Method method = Method::Direct;
    double max_abs_error = 0.0;

    /// Lookup with the argument reduced mod p.
    Complex operator()(std::int64_t n) const {
        const auto m = static_cast<std::int64_t>(p);
        return values[static_cast<std::size_t>(((n % m) + m) % m)];
    }
    Complex at_residue(std::uint64_t n) const { return values[n % p]; }
};

/// Per-entry forward error declared for FFT-built tables: 8 s log2(p) eps sqrt(p).
inline double bulk_error_budget(unsigned s, std::uint64_t p) {
    const double pd = static_cast<double>(p);
    return 8.0 * s * std::log2(pd) * std::numeric_limits<double>::epsilon() * std::sqrt(pd);
}

/// p^{-(s-1)/2}
inline double kloosterman_normalization(unsigned s, std::uint64_t p) {
    return std::pow(static_cast<double>(p), -(static_cast<double>(s) - 1.0) / 2.0);
}

/// e_p(k) = exp(2 pi i k/p) for k = 0..p-1.
inline std::vector<Complex> additive_characters(std::uint64_t p) {
    std::vector<Complex> e(p);
    for (std::uint64_t k = 0; k < p; ++k) e[k] = std::conj(detail::unit_root(k, p));
    return e;
}

/// Single value by enumerating (x_1..x_{s-1}) in ascending lexicographic
/// order and solving for x_s. Cost O(p^{s-1}).
inline Complex kloosterman_direct(const PrimeField& ctx, unsigned s, std::uint64_t n, const Budget& budget = {}) {
    const std::uint64_t p = ctx.p();
    if (s < 1) throw Error(ErrorKind::DomainError, "dimension s must be >= 1");
    if (n >= p) throw Error(ErrorKind::DomainError, "residue out of range");
    if ((static_cast<double>(s) - 1.0) * std::log(static_cast<double>(p)) > std::log(budget.enumeration_terms)) {
        throw Error(ErrorKind::DimensionTooLarge,
                    "p^(s-1) exceeds enumeration budget for p=" + std::to_string(p) + ", s=" + std::to_string(s));
    }
    if (n == 0) return {0.0, 0.0};
    const auto e = additive_characters(p);
    if (s == 1) return e[n];

    const unsigned depth = s - 1;
    std::vector<std::uint64_t> x(depth, 1);
    // prefix[i] = (product, sum) of x[0..i)
    std::vector<std::uint64_t> prod(depth + 1, 1), sum(depth + 1, 0);
    for (unsigned i = 0; i < depth; ++i) {
        prod[i + 1] = prod[i] * x[i] % p;
        sum[i + 1] = (sum[i] + x[i]) % p;
    }
    ComplexCompensatedSum acc;
    while (true) {
        const std::uint64_t last = n * ctx.inv(prod[depth]) % p;
        acc.add(e[(sum[depth] + last) % p]);
        int i = static_cast<int>(depth) - 1;
        while (i >= 0 && x[i] == p - 1) --i;
        if (i < 0) break;
        ++x[i];
        for (unsigned j = static_cast<unsigned>(i) + 1; j < depth; ++j) x[j] = 1;
        for (unsigned j = static_cast<unsigned>(i); j < depth; ++j) {
            prod[j + 1] = prod[j] * x[j] % p;
            sum[j + 1] = (sum[j] + x[j]) % p;
        }
    }
    return acc.value() * kloosterman_normalization(s, p);
}

/// Whole table without transforms: the nested recursion
/// T_1(n) = e_p(n), T_k(n) = sum_{x=1}^{p-1} e_p(x) T_{k-1}(n / x).
/// Cost O((s-1) p^2); used as the independent oracle for the bulk path.
inline KloostermanTable kloosterman_direct_table(const PrimeField& ctx, unsigned s, const Budget& budget = {}) {
    const std::uint64_t p = ctx.p();
    if (s < 1) throw Error(ErrorKind::DomainError, "dimension s must be >= 1");
    const double pd = static_cast<double>(p);
    if ((s - 1.0) * pd * pd > budget.enumeration_terms) {
        throw Error(ErrorKind::DimensionTooLarge, "direct table too expensive for p=" + std::to_string(p));
    }
    const auto e = additive_characters(p);
    std::vector<Complex> level(p);
    for (std::uint64_t n = 1; n < p; ++n) level[n] = e[n];
    for (unsigned k = 2; k <= s; ++k) {
        std::vector<Complex> next(p);
        for (std::uint64_t n = 1; n < p; ++n) {
            ComplexCompensatedSum acc;
            for (std::uint64_t x = 1; x < p; ++x) acc.add(e[x] * level[n * ctx.inv(x) % p]);
            next[n] = acc.value();
        }
        level = std::move(next);
    }
    const double norm = kloosterman_normalization(s, p);
    for (auto& v : level) v *= norm;
    return KloostermanTable{s, p, std::move(level), Method::Direct, bulk_error_budget(s, p)};
}

/// Whole table in O(s p log p): n = g^m turns the defining constraint into
/// an s-fold cyclic convolution of a(k) = e_p(g^k) over Z/(p-1).
inline KloostermanTable kloosterman_bulk(const PrimeField& ctx, unsigned s, const Budget& budget = {}) {
    const std::uint64_t p = ctx.p();
    if (s < 1) throw Error(ErrorKind::DomainError, "dimension s must be >= 1");
    const std::size_t len = p - 1;
    const std::size_t padded = std::has_single_bit(len) ? len : std::bit_ceil(2 * len - 1);
    const std::size_t bytes = sizeof(Complex) * (3 * padded + 4 * len) + sizeof(Complex) * p;
    if (bytes > budget.memory_bytes) {
        throw Error(ErrorKind::TooLarge, "bulk table for p=" + std::to_string(p) + " exceeds memory budget");
    }
    const auto e = additive_characters(p);
    std::vector<Complex> seq(len);
    for (std::size_t k = 0; k < len; ++k) seq[k] = e[ctx.pow_g(k)];

    const Dft dft(len);
    auto spectrum = dft.forward(seq);
    for (auto& z : spectrum) {
        Complex power{1.0, 0.0};
        for (unsigned i = 0; i < s; ++i) power *= z;
        z = power;
    }
    const auto conv = dft.inverse(spectrum);

    const double norm = kloosterman_normalization(s, p);
    std::vector<Complex> values(p, Complex{});
    for (std::size_t m = 0; m < len; ++m) values[ctx.pow_g(m)] = conv[m] * norm;
    return KloostermanTable{s, p, std::move(values), Method::Bulk, bulk_error_budget(s, p)};
}

/// max_n |K(n)| against s plus the table's error budget.
inline BoundReport verify_deligne(const KloostermanTable& table) {
    double worst = 0.0;
    for (const auto& v : table.values) worst = std::max(worst, std::abs(v));
    BoundReport r;
    r.lhs = worst;
    r.rhs = static_cast<double>(table.s) + table.max_abs_error;
    r.ratio = r.lhs / r.rhs;
    r.C = 1.0;
    r.pass = r.ratio <= r.C;
    r.params.s = table.s;
    r.params.p = table.p;
    return r;
}

/// |sum_{n != 0} K(n) - (-1)^s p^{-(s-1)/2}|
inline double complete_sum_deviation(const KloostermanTable& table) {
    ComplexCompensatedSum acc;
    for (std::size_t n = 1; n < table.values.size(); ++n) acc.add(table.values[n]);
    const double expected = ((table.s % 2 == 0) ? 1.0 : -1.0) * kloosterman_normalization(table.s, table.p);
    return std::abs(acc.value() - Complex{expected, 0.0});
}

/// max_n |conj K(n) - K((-1)^s n)|
inline double conjugation_deviation(const KloostermanTable& table) {
    double worst = 0.0;
    const std::uint64_t p = table.p;
    for (std::uint64_t n = 0; n < p; ++n) {
        const std::uint64_t partner = (table.s % 2 == 0) ? n : (p - n) % p;
        worst = std::max(worst, std::abs(std::conj(table.values[n]) - table.values[partner]));
    }
    return worst;
}

inline double max_imaginary_part(const KloostermanTable& table) {
    double worst = 0.0;
    for (const auto& v : table.values) worst = std::max(worst, std::abs(v.imag()));
    return worst;
}

}  // namespace klooster
