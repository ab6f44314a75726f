#include <cmath>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "fraclab/special.hpp"

using namespace fraclab;

TEST(Bessel, MatchesBoostAcrossOrdersAndArguments) {
    for (double nu : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.25, 2.5, 3.7}) {
        for (double lx = -3.0; lx <= std::log10(60.0); lx += 0.05) {
            const double x = std::pow(10.0, lx);
            const double ref = boost::math::cyl_bessel_k(nu, x);
            EXPECT_NEAR(bessel_k(nu, x) / ref, 1.0, 1e-12) << "nu=" << nu << " x=" << x;
        }
    }
}

TEST(Bessel, ScaledVariant) {
    for (double x : {0.01, 0.5, 1.999, 2.0, 10.0, 300.0}) {
        const double ref = boost::math::cyl_bessel_k(0.3, x) * std::exp(x);
        EXPECT_NEAR(bessel_k(0.3, x, true) / ref, 1.0, 1e-12);
    }
}

TEST(Bessel, HalfOrderClosedForm) {
    for (double x : {1e-4, 0.3, 1.0, 2.0, 7.5, 40.0}) {
        const double closed = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x);
        EXPECT_NEAR(bessel_k(0.5, x) / closed, 1.0, 1e-13);
    }
}

TEST(Bessel, RejectsNonPositiveArgument) {
    EXPECT_THROW(bessel_k(0.5, 0.0), DomainError);
    EXPECT_THROW(bessel_k(0.5, -1.0), DomainError);
    EXPECT_THROW(bessel_k(-0.5, 1.0), DomainError);
}

TEST(ExtensionMultiplier, HalfIsExponential) {
    for (double t : {0.0, 1e-6, 0.01, 0.5, 3.0, 30.0}) EXPECT_NEAR(extension_multiplier(0.5, t), std::exp(-t), 1e-14);
}

TEST(ExtensionMultiplier, BoundedAndDecreasing) {
    for (double s : {0.1, 0.25, 0.5, 0.75, 0.9}) {
        double prev = 1.0;
        for (double lt = -6.0; lt <= 2.0; lt += 0.01) {
            const double v = extension_multiplier(s, std::pow(10.0, lt));
            EXPECT_GT(v, 0.0);
            EXPECT_LE(v, 1.0);
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
    EXPECT_EQ(extension_multiplier(0.3, 0.0), 1.0);
    EXPECT_EQ(extension_multiplier(0.3, 701.0), 0.0);
}

TEST(Constants, AgainstGammaFormulas) {
    using boost::math::tgamma;
    for (double s : {0.2, 0.5, 0.8}) {
        const double c = std::pow(4.0, s) * s * tgamma(0.5 + s) / (std::sqrt(std::numbers::pi) * tgamma(1.0 - s));
        EXPECT_NEAR(fractional_constant(s), c, 1e-14 * c);
        const double g = std::pow(2.0, 2.0 * s) * tgamma(1.0 + s) * tgamma((1.0 + 2.0 * s) / 2.0) / tgamma(0.5);
        EXPECT_NEAR(getoor_constant(s), g, 1e-14 * g);
    }
    EXPECT_NEAR(fractional_constant(0.5), 1.0 / std::numbers::pi, 1e-15);
    EXPECT_NEAR(neumann_constant(0.5), 1.0, 1e-15);
    EXPECT_NEAR(getoor_constant(0.5), 1.0, 1e-15);
}

TEST(GaussLegendre, ExactForPolynomials) {
    for (int n : {1, 4, 8, 13}) {
        const GaussRule r = gauss_legendre(n);
        for (int deg = 0; deg <= 2 * n - 1; ++deg) {
            double q = 0.0;
            for (std::size_t i = 0; i < r.nodes.size(); ++i) q += r.weights[i] * std::pow(r.nodes[i], deg);
            const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
            EXPECT_NEAR(q, exact, 1e-13) << "n=" << n << " deg=" << deg;
        }
    }
}
