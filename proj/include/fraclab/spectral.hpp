#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace fraclab {

using Spectrum = std::vector<std::complex<double>>;

/// Periodic DFT on a supergrid of `n` points with spacing `h`.
/// `forward` is unnormalized; `inverse` divides by n.
class PeriodicTransform {
public:
    PeriodicTransform(std::size_t n, double h) : n_(n), h_(h) {}

    std::size_t size() const { return n_; }

    /// Angular wavenumber of DFT index k (signed, FFT ordering).
    double wavenumber(std::size_t k) const {
        const auto n = static_cast<double>(n_);
        const double kk = k <= n_ / 2 ? static_cast<double>(k) : static_cast<double>(k) - n;
        return 2.0 * std::numbers::pi * kk / (n * h_);
    }

    Spectrum forward(std::span<const double> values) const {
        std::vector<double> in(values.begin(), values.end());
        Spectrum out;
        fft_.fwd(out, in);
        return out;
    }

    std::vector<double> inverse(const Spectrum& spectrum) const {
        std::vector<double> out;
        fft_.inv(out, spectrum);
        return out;
    }

    /// inverse(multiplier(|xi_k|) * forward(values)).
    template <typename Multiplier>
    std::vector<double> apply_radial(std::span<const double> values, Multiplier&& multiplier) const {
        Spectrum spec = forward(values);
        for (std::size_t k = 0; k < n_; ++k) spec[k] *= multiplier(std::abs(wavenumber(k)));
        return inverse(spec);
    }

private:
    std::size_t n_;
    double h_;
    mutable Eigen::FFT<double> fft_;
};

}  // namespace fraclab
