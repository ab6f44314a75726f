#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -z;
        rule.nodes[hi] = z;
        rule.weights[lo] = rule.weights[hi] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return rule;
}

namespace detail {

// Taylor coefficients of 1/Gamma(z) about z = 0 (c_1 .. c_26).
inline constexpr std::array<double, 27> kRecipGammaTaylor = {
    0.0,
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
};

// Temme's auxiliary functions for |mu| <= 1/2:
//   gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu),
//   gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2.
inline std::pair<double, double> temme_gammas(double mu) {
    const auto& c = kRecipGammaTaylor;
    const double mu2 = mu * mu;
    double gam1 = 0.0, gam2 = 0.0;
    for (int k = 26; k >= 2; k -= 2) gam1 = gam1 * mu2 + c[static_cast<std::size_t>(k)];
    for (int k = 25; k >= 1; k -= 2) gam2 = gam2 * mu2 + c[static_cast<std::size_t>(k)];
    return {-gam1, gam2};
}

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2; when `scaled` both carry e^{x}.
inline std::pair<double, double> bessel_k_pair(double mu, double x, bool scaled) {
    constexpr double eps = 1e-16;
    const double pi = std::numbers::pi;
    if (x < 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = pi * mu;
        const double fact = std::abs(pimu) < eps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = std::abs(e) < eps ? 1.0 : std::sinh(e) / e;
        const auto [gam1, gam2] = temme_gammas(mu);
        const double gampl = gam2 - mu * gam1;  // 1/Gamma(1+mu)
        const double gammi = gam2 + mu * gam1;  // 1/Gamma(1-mu)
        double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / gampl;
        double q = 0.5 / (e * gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        for (int i = 1; i < 500; ++i) {
            ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu * mu);
            c *= d / i;
            p /= (i - mu);
            q /= (i + mu);
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * eps) break;
        }
        const double scale = scaled ? std::exp(x) : 1.0;
        return {sum * scale, sum1 * (2.0 / x) * scale};
    }
    // Steed's continued fraction for x >= 2.
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d, delh = d;
    double q1 = 0.0, q2 = 1.0;
    const double a1 = 0.25 - mu * mu;
    double q = a1, c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i < 100000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) break;
    }
    h = a1 * h;
    double kmu = std::sqrt(pi / (2.0 * x)) / s;
    if (!scaled) kmu *= std::exp(-x);
    return {kmu, kmu * (mu + x + 0.5 - h) / x};
}

}  // namespace detail

/// Modified Bessel function of the second kind K_nu(x), nu >= 0, x > 0.
/// Temme series below x = 2, Steed's continued fraction above, then
/// forward recurrence in the order.
inline double bessel_k(double nu, double x, bool scaled = false) {
    if (!(x > 0.0) || nu < 0.0) throw DomainError("bessel_k requires x > 0 and nu >= 0");
    const int nl = static_cast<int>(nu + 0.5);
    const double mu = nu - nl;
    auto [kmu, k1] = detail::bessel_k_pair(mu, x, scaled);
    for (int i = 1; i <= nl; ++i) {
        const double next = (mu + i) * (2.0 / x) * k1 + kmu;
        kmu = k1;
        k1 = next;
    }
    return kmu;
}

/// Multiplier of the Caffarelli-Silvestre extension,
/// theta_s(t) = 2^{1-s}/Gamma(s) t^s K_s(t), with theta_s(0) = 1.
/// Returns 0 beyond t = 700 where K_s underflows.
inline double extension_multiplier(double s, double t) {
    if (t <= 0.0) return 1.0;
    if (t > 700.0) return 0.0;
    const double pref = std::pow(2.0, 1.0 - s) / std::tgamma(s);
    return pref * std::exp(s * std::log(t) - t) * bessel_k(s, t, /*scaled=*/true);
}

/// c_{1,s}: normalizing constant of the 1D singular integral whose symbol is |xi|^{2s}.
inline double fractional_constant(double s) {
    return std::pow(2.0, 2.0 * s) * s * std::tgamma(0.5 + s) /
           (std::sqrt(std::numbers::pi) * std::tgamma(1.0 - s));
}

/// d_s = 2^{1-2s} Gamma(1-s) / Gamma(s): lim_{y->0} y^{1-2s} d_y u~ = -d_s (-Delta)^s u.
inline double neumann_constant(double s) {
    return std::pow(2.0, 1.0 - 2.0 * s) * std::tgamma(1.0 - s) / std::tgamma(s);
}

/// (-Delta)^s (1 - x^2)_+^s on (-1, 1) in one dimension.
inline double getoor_constant(double s) {
    return std::pow(2.0, 2.0 * s) * std::tgamma(1.0 + s) * std::tgamma(0.5 + s) /
           std::sqrt(std::numbers::pi);
}

}  // namespace fraclab
