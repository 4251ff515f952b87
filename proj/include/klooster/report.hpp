#pragma once

#include <complex>
#include <cstdint>
#include <optional>

namespace klooster {

/// Parameters attached to a sum or a bound; only the relevant ones are set.
struct Params {
    std::optional<unsigned> s;
    std::optional<std::uint64_t> p;
    std::optional<double> N;
    std::optional<double> y;
    std::optional<double> L;
    std::optional<double> D;
    std::optional<int> ell;
    std::optional<int> r;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::optional<std::uint64_t> seed;
};

struct SumResult {
    std::complex<double> value;
    std::uint64_t n_terms = 0;
    Params params;
    double elapsed = 0.0;  // seconds
};

/// Empirical magnitude against a theoretical right-hand side.
struct BoundReport {
    double lhs = 0.0;
    double rhs = 1.0;
    double ratio = 0.0;
    double C = 1.0;
    bool pass = false;
    Params params;
};

}  // namespace klooster
