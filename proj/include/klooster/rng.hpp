#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace klooster {

/// Counter-based generator: the i-th draw of stream (seed, key) is a pure
/// function of (seed, key, i), so a single cell can be replayed in isolation.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t key) : stream_(mix(seed ^ mix(key + 0x632BE59BD9B4E019ULL))) {}

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30U)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27U)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31U);
    }

    std::uint64_t next() noexcept { return mix(stream_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    /// Uniform in [0, 1).
    double uniform() noexcept { return static_cast<double>(next() >> 11U) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi].
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) noexcept {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) return next();
        return lo + static_cast<std::uint64_t>(static_cast<unsigned __int128>(next()) * span >> 64U);
    }

    /// Uniform on the closed complex unit disk.
    std::complex<double> unit_disk() noexcept {
        const double radius = std::sqrt(uniform());
        const double angle = 2.0 * std::numbers::pi * uniform();
        return std::polar(radius, angle);
    }

private:
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace klooster
