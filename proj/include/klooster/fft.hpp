#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace klooster {

using Complex = std::complex<double>;

namespace detail {

// exp(-2 pi i num / den) with the angle formed in extended precision.
inline Complex unit_root(std::uint64_t num, std::uint64_t den) {
    const long double angle = -2.0L * std::numbers::pi_v<long double> * static_cast<long double>(num) /
                              static_cast<long double>(den);
    return {static_cast<double>(std::cos(angle)), static_cast<double>(std::sin(angle))};
}

}  // namespace detail

/// Iterative radix-2 transform of a fixed power-of-two length.
class Radix2Fft {
public:
    explicit Radix2Fft(std::size_t n) : n_(n), twiddles_(n / 2), rev_(n) {
        if (n == 0 || !std::has_single_bit(n)) throw std::invalid_argument("Radix2Fft length must be a power of two");
        for (std::size_t k = 0; k < n / 2; ++k) twiddles_[k] = detail::unit_root(k, n);
        const int bits = std::countr_zero(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
            rev_[i] = r;
        }
    }

    std::size_t size() const noexcept { return n_; }

    /// In place; forward uses exp(-2 pi i jk/n). The inverse is unscaled.
    void transform(std::span<Complex> data, bool inverse) const {
        for (std::size_t i = 0; i < n_; ++i) {
            if (i < rev_[i]) std::swap(data[i], data[rev_[i]]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1U) {
            const std::size_t half = len / 2;
            const std::size_t stride = n_ / len;
            for (std::size_t start = 0; start < n_; start += len) {
                for (std::size_t k = 0; k < half; ++k) {
                    Complex w = twiddles_[k * stride];
                    if (inverse) w = std::conj(w);
                    const Complex u = data[start + k];
                    const Complex v = data[start + k + half] * w;
                    data[start + k] = u + v;
                    data[start + k + half] = u - v;
                }
            }
        }
    }

private:
    std::size_t n_;
    std::vector<Complex> twiddles_;
    std::vector<std::size_t> rev_;
};

/// Discrete Fourier transform of arbitrary length via the chirp-z
/// (Bluestein) reduction to a power-of-two cyclic convolution.
class Dft {
public:
    explicit Dft(std::size_t n)
        : n_(n), direct_(std::has_single_bit(n)), fft_(direct_ ? n : std::bit_ceil(2 * n - 1)) {
        if (direct_) return;
        const std::size_t m = fft_.size();
        chirp_.resize(n);
        const std::uint64_t period = 2 * static_cast<std::uint64_t>(n);
        for (std::size_t k = 0; k < n; ++k) {
            const std::uint64_t sq = static_cast<std::uint64_t>(k) * k % period;
            chirp_[k] = detail::unit_root(sq, period);  // exp(-pi i k^2 / n)
        }
        kernel_.assign(m, Complex{});
        kernel_[0] = std::conj(chirp_[0]);
        for (std::size_t k = 1; k < n; ++k) {
            kernel_[k] = std::conj(chirp_[k]);
            kernel_[m - k] = std::conj(chirp_[k]);
        }
        fft_.transform(kernel_, false);
    }

    std::size_t size() const noexcept { return n_; }

    /// Forward transform X[j] = sum_k x[k] exp(-2 pi i jk/n).
    std::vector<Complex> forward(std::span<const Complex> x) const {
        if (x.size() != n_) throw std::invalid_argument("Dft input length mismatch");
        if (direct_) {
            std::vector<Complex> out(x.begin(), x.end());
            fft_.transform(out, false);
            return out;
        }
        const std::size_t m = fft_.size();
        std::vector<Complex> work(m, Complex{});
        for (std::size_t k = 0; k < n_; ++k) work[k] = x[k] * chirp_[k];
        fft_.transform(work, false);
        for (std::size_t k = 0; k < m; ++k) work[k] *= kernel_[k];
        fft_.transform(work, true);
        const double scale = 1.0 / static_cast<double>(m);
        std::vector<Complex> out(n_);
        for (std::size_t k = 0; k < n_; ++k) out[k] = work[k] * chirp_[k] * scale;
        return out;
    }

    /// Inverse transform, scaled by 1/n.
    std::vector<Complex> inverse(std::span<const Complex> x) const {
        std::vector<Complex> conj_in(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) conj_in[k] = std::conj(x[k]);
        auto out = forward(conj_in);
        const double scale = 1.0 / static_cast<double>(n_);
        for (auto& v : out) v = std::conj(v) * scale;
        return out;
    }

private:
    std::size_t n_;
    bool direct_;
    Radix2Fft fft_;
    std::vector<Complex> chirp_;
    std::vector<Complex> kernel_;
};

}  // namespace klooster
