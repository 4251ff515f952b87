#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>

#include "klooster/error.hpp"
#include "klooster/integers.hpp"
#include "klooster/report.hpp"

// Right-hand sides of the square-free and smooth-number estimates. Every
// implicit constant and every p^{o(1)} / N^{o(1)} factor is set to 1, and all
// powers are formed in the log domain.

namespace klooster {

namespace detail {

inline double ln(double x) { return std::log(x); }

inline void require_even_ell(int ell) {
    if (ell < 2 || ell % 2 != 0) throw Error(ErrorKind::DomainError, "ell must be an even integer >= 2");
}

// a <= b up to a relative slack of a few ulps in the log domain
inline bool log_le(double a, double b) { return a <= b + 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace detail

/// p^{1/2 + 2/ell} <= N <= p
inline bool theorem12_window(double p, double N, int ell) {
    return detail::log_le((0.5 + 2.0 / ell) * detail::ln(p), detail::ln(N)) && detail::log_le(detail::ln(N), detail::ln(p));
}

/// log of (p^{1/2+2/ell} / N)^{1/(2(4 ell - 3))}
inline double theorem12_log_saving(double p, double N, int ell) {
    return ((0.5 + 2.0 / ell) * detail::ln(p) - detail::ln(N)) / (2.0 * (4.0 * ell - 3.0));
}

/// N^{1/2} p^{1/4} (p^{1/2+2/ell}/N)^{1/(2(4ell-3))}
inline double bound_theorem12(double p, double N, unsigned s, int ell) {
    (void)s;  // the estimate is uniform in s
    detail::require_even_ell(ell);
    if (!theorem12_window(p, N, ell)) {
        throw Error(ErrorKind::OutOfRange, "N outside [p^(1/2+2/ell), p] for ell=" + std::to_string(ell));
    }
    return std::exp(0.5 * detail::ln(N) + 0.25 * detail::ln(p) + theorem12_log_saving(p, N, ell));
}

/// Even ell in [2, ell_max] with the smallest saving factor; ties go to the smaller ell.
inline int optimal_ell(double p, double N, int ell_max) {
    if (ell_max < 2) throw Error(ErrorKind::DomainError, "ell_max must be >= 2");
    int best = 0;
    double best_log = std::numeric_limits<double>::infinity();
    for (int ell = 2; ell <= ell_max; ell += 2) {
        if (!theorem12_window(p, N, ell)) continue;
        const double v = theorem12_log_saving(p, N, ell);
        if (v < best_log) {
            best_log = v;
            best = ell;
        }
    }
    if (best == 0) throw Error(ErrorKind::NoFeasibleEll, "no even ell <= " + std::to_string(ell_max) + " fits the window");
    return best;
}

/// Number of square-free n <= N: sum_{d <= sqrt N} mu(d) floor(N / d^2).
inline std::uint64_t count_square_free(std::uint64_t N) {
    if (N == 0) return 0;
    std::uint64_t root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(N)));
    while (root * root > N) --root;
    while ((root + 1) * (root + 1) <= N) ++root;
    const auto sieves = build_sieves(std::max<std::uint64_t>(root, 1));
    std::int64_t total = 0;
    for (std::uint64_t d = 1; d <= root; ++d) total += sieves.mu(d) * static_cast<std::int64_t>(N / (d * d));
    return static_cast<std::uint64_t>(total);
}

/// s times the number of square-free n <= N.
inline double bound_trivial_Q(std::uint64_t N, unsigned s) {
    if (N < 1) throw Error(ErrorKind::DomainError, "N must be >= 1");
    return static_cast<double>(s) * static_cast<double>(count_square_free(N));
}

/// N^{1/2} p^{1/4}
inline double bound_sqrtN(double p, double N) { return std::exp(0.5 * detail::ln(N) + 0.25 * detail::ln(p)); }

struct Theorem15Bound {
    double beta = 0.0;
    double gamma = 0.0;
    double rhs = 0.0;
};

inline double theorem15_beta(double alpha) { return 1.0 / (4.0 * (1.0 + alpha)); }
inline double theorem15_gamma(double alpha) { return alpha * alpha / (2.0 * (1.0 + alpha)); }

/// Psi(N,y) y^{1/2} p^beta N^{-gamma}, beta = 1/(4(1+alpha)), gamma = alpha^2/(2(1+alpha)).
inline Theorem15Bound bound_theorem15(double p, double N, double y, double alpha, std::uint64_t Psi) {
    if (!detail::log_le(0.5 * detail::ln(p), detail::ln(N))) throw Error(ErrorKind::OutOfRange, "need N >= p^(1/2)");
    if (y < detail::ln(N)) throw Error(ErrorKind::OutOfRange, "need y >= log N");
    if (!(alpha > 0.0)) throw Error(ErrorKind::OutOfRange, "alpha must be positive");
    if (Psi < 1) throw Error(ErrorKind::OutOfRange, "Psi must be >= 1");
    Theorem15Bound b;
    b.beta = theorem15_beta(alpha);
    b.gamma = theorem15_gamma(alpha);
    b.rhs = std::exp(detail::ln(static_cast<double>(Psi)) + 0.5 * detail::ln(y) + b.beta * detail::ln(p) -
                     b.gamma * detail::ln(N));
    return b;
}

/// f_1(D) = D p^{1/2}
inline double balance_f1(double p, double D) { return std::exp(detail::ln(D) + 0.5 * detail::ln(p)); }

/// f_2(D) = (N/D) (D^3 p^{1+1/ell} / N^2)^{1/(2 ell)}
inline double balance_f2(double p, double N, double D, int ell) {
    const double inner = 3.0 * detail::ln(D) + (1.0 + 1.0 / ell) * detail::ln(p) - 2.0 * detail::ln(N);
    return std::exp(detail::ln(N) - detail::ln(D) + inner / (2.0 * ell));
}

/// D_0 = (N^{2ell-2} / p^{ell-1-1/ell})^{1/(4ell-3)}, the point where f_1 = f_2.
inline double balance_D0(double p, double N, int ell) {
    detail::require_even_ell(ell);
    if (!theorem12_window(p, N, ell)) throw Error(ErrorKind::OutOfRange, "N outside the square-free window");
    const double log_d0 =
        ((2.0 * ell - 2.0) * detail::ln(N) - (ell - 1.0 - 1.0 / ell) * detail::ln(p)) / (4.0 * ell - 3.0);
    const double d0 = std::exp(log_d0);
    if (!detail::log_le(0.0, log_d0) || !detail::log_le(log_d0, 0.5 * detail::ln(N))) {
        throw Error(ErrorKind::OutOfRange, "D0 outside [1, N^(1/2)]");
    }
    const double f1 = balance_f1(p, d0);
    const double f2 = balance_f2(p, N, d0, ell);
    if (std::abs(f1 - f2) > 1e-9 * f1) throw Error(ErrorKind::OutOfRange, "f1(D0) != f2(D0)");
    return d0;
}

/// L_0 = p^{1/(2(1+alpha))} N^{alpha/(1+alpha)}, equating L_0 N^{-alpha} and p^{1/2} L_0^{-alpha}.
inline double balance_L0(double p, double N, double alpha) {
    if (!(alpha > 0.0) || alpha > 2.0) throw Error(ErrorKind::OutOfRange, "alpha must lie in (0, 2]");
    if (!detail::log_le(0.5 * detail::ln(p), detail::ln(N))) throw Error(ErrorKind::OutOfRange, "need N >= p^(1/2)");
    const double log_l0 = detail::ln(p) / (2.0 * (1.0 + alpha)) + alpha * detail::ln(N) / (1.0 + alpha);
    const double left = log_l0 - alpha * detail::ln(N);
    const double right = 0.5 * detail::ln(p) - alpha * log_l0;
    if (std::abs(std::expm1(left - right)) > 1e-9) throw Error(ErrorKind::OutOfRange, "L0 terms do not balance");
    return std::exp(log_l0);
}

/// p^{1/2} log p
inline double bound_incomplete(double p) { return std::sqrt(p) * detail::ln(p); }

/// D N (N^{-1} + p^{1+1/ell} / (D N^2))^{1/(2 ell)}
inline double bound_typeI(double p, double D, double N, int ell) {
    detail::require_even_ell(ell);
    const double inner = 1.0 / N + std::exp((1.0 + 1.0 / ell) * detail::ln(p) - detail::ln(D) - 2.0 * detail::ln(N));
    return std::exp(detail::ln(D) + detail::ln(N) + detail::ln(inner) / (2.0 * ell));
}

/// A^2 D^2 / p
inline double bound_J_leading(double p, double A, double D) { return A * A * D * D / p; }

/// p^{1/(2ell)} <= p^{1/4} (p^{1/2+2/ell}/N)^{1/(2(4ell-3))}
inline bool second_term_dominated(double p, double N, int ell) {
    return detail::log_le(detail::ln(p) / (2.0 * ell), 0.25 * detail::ln(p) + theorem12_log_saving(p, N, ell));
}

/// Whenever p^beta <= N^gamma: p^{2beta} N^{alpha-2gamma} <= p^beta N^{alpha-gamma}.
/// Returns true when the premise fails.
inline bool theorem15_domination_holds(double p, double N, double alpha) {
    const double beta = theorem15_beta(alpha);
    const double gamma = theorem15_gamma(alpha);
    if (beta * detail::ln(p) > gamma * detail::ln(N)) return true;
    return detail::log_le(2 * beta * detail::ln(p) + (alpha - 2 * gamma) * detail::ln(N),
                          beta * detail::ln(p) + (alpha - gamma) * detail::ln(N));
}

/// N >= p^{1/(2 alpha^2) + eps}: the smooth-number estimate saves over Psi(N,y).
inline bool theorem15_nontrivial_N(double p, double N, double alpha, double eps = 0.0) {
    return detail::ln(N) >= (1.0 / (2.0 * alpha * alpha) + eps) * detail::ln(p);
}

/// y >= (log N)^{2 + sqrt 2 + eps}
inline bool theorem15_nontrivial_y(double N, double y, double eps = 0.0) {
    return detail::ln(y) >= (2.0 + std::numbers::sqrt2 + eps) * detail::ln(detail::ln(N));
}

/// ratio = |sum| / rhs, pass iff ratio <= C.
inline BoundReport report(const SumResult& sum, double rhs, double C) {
    if (!(rhs > 0.0)) throw Error(ErrorKind::NonpositiveBound, "bound must be positive");
    BoundReport r;
    r.lhs = std::abs(sum.value);
    r.rhs = rhs;
    r.ratio = r.lhs / rhs;
    r.C = C;
    r.pass = r.ratio <= C;
    r.params = sum.params;
    return r;
}

}  // namespace klooster
