#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "s1.hpp"

using namespace fraclab;

TEST(Geometry, S1Grid) {
    const auto sc = s1::make();
    EXPECT_DOUBLE_EQ(sc.grid().h, 1.0 / 64.0);
    EXPECT_EQ(sc.grid().nodes_in(sc.geom().omega).size(), 129u);
    EXPECT_EQ(sc.grid().nodes_in(sc.geom().w).size(), 65u);
    EXPECT_DOUBLE_EQ(sc.grid().x(sc.grid().nearest(0.0)), 0.0);
}

TEST(Geometry, RejectsOverlap) {
    GeometryConfig cfg;
    cfg.w = {0.5, 2.0};
    EXPECT_THROW(build_geometry(cfg), OverlapError);
    cfg.w = {1.0, 2.0};  // closures touch
    EXPECT_THROW(build_geometry(cfg), OverlapError);
}

TEST(Geometry, RejectsBadOmegaPrime) {
    GeometryConfig cfg;
    cfg.omega_prime = {-1.0, 0.5};
    EXPECT_THROW(build_geometry(cfg), GeometryError);
}

TEST(Geometry, RejectsSupportOutsideQuarterBox) {
    GeometryConfig cfg;
    cfg.w = {2.0, 9.0};
    EXPECT_THROW(build_geometry(cfg), SupportError);
}

TEST(Geometry, RejectsCoarseGrid) {
    GeometryConfig cfg;
    cfg.n_super = 128;
    EXPECT_THROW(build_geometry(cfg), ResolutionError);
    cfg.n_super = 1000;
    EXPECT_THROW(build_geometry(cfg), DomainError);
}

TEST(GridFunction, EnforcesSupport) {
    const auto sc = s1::make();
    std::vector<double> v(sc.grid().n_super, 0.0);
    v[sc.grid().nearest(1.5)] = 1.0;
    EXPECT_THROW(GridFunction(sc.geom(), sc.grid(), SupportTag::omega_and_w, v), SupportError);
    v[sc.grid().nearest(1.5)] = std::nan("");
    EXPECT_THROW(GridFunction(sc.geom(), sc.grid(), SupportTag::whole_box, v), DomainError);
    EXPECT_THROW(GridFunction(sc.geom(), sc.grid(), SupportTag::whole_box, std::vector<double>(3)), DomainError);
}

TEST(SobolevNorm, ZeroOrderIsDiscreteL2) {
    const auto sc = s1::make();
    EXPECT_NEAR(sobolev_norm(sc.f, 0.0), sc.f.l2_norm(), 1e-14);
    EXPECT_THROW(sobolev_norm(sc.f, 1.5), DomainError);
}

TEST(SobolevNorm, GaussianAgainstQuadrature) {
    const auto sc = s1::make();
    const double sigma = 0.4;
    const auto g = GridFunction::sample(sc.geom(), sc.grid(), SupportTag::whole_box,
                                        [&](double x) { return std::exp(-x * x / (2 * sigma * sigma)); });
    for (double t : {-0.5, 0.25, 0.5, 1.0}) {
        // |g^(xi)|^2 = 2 pi sigma^2 exp(-sigma^2 xi^2); norm^2 = (1/pi) int_0^inf (1+xi^2)^t |g^|^2
        auto integrand = [&](double xi) {
            return std::pow(1.0 + xi * xi, t) * 2.0 * std::numbers::pi * sigma * sigma * std::exp(-sigma * sigma * xi * xi);
        };
        const double ref =
            std::sqrt(boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 60.0, 15, 1e-14) /
                      std::numbers::pi);
        EXPECT_NEAR(sobolev_norm(g, t) / ref, 1.0, 1e-10) << "t=" << t;
    }
}

TEST(SobolevNorm, MonotoneInOrderAndGramConsistent) {
    const auto sc = s1::make();
    EXPECT_LT(sobolev_norm(sc.f, -0.5), sobolev_norm(sc.f, 0.0));
    EXPECT_LT(sobolev_norm(sc.f, 0.0), sobolev_norm(sc.f, 0.5));
    const auto col = sobolev_gram_column(sc.grid(), 0.5);
    const IndexRange w = sc.grid().nodes_in(sc.geom().w);
    double q = 0.0;
    for (std::size_t i = w.first; i < w.last; ++i)
        for (std::size_t j = w.first; j < w.last; ++j) q += sc.f[i] * col[i > j ? i - j : j - i] * sc.f[j];
    EXPECT_NEAR(std::sqrt(q), sobolev_norm(sc.f, 0.5), 1e-12);
}

TEST(DualNorm, RequiresWindowSupport) {
    const auto sc = s1::make();
    EXPECT_GT(dual_norm_on_window(sc.f, sc.geom()), 0.0);
    EXPECT_THROW(dual_norm_on_window(sc.q1.values, sc.geom()), SupportError);
}

TEST(Oscillation, AtLeastOneAndRejectsZero) {
    const auto sc = s1::make();
    EXPECT_GE(oscillation_ratio(sc.f, 0.5), 1.0);
    EXPECT_THROW(oscillation_ratio(GridFunction::zeros(sc.geom(), sc.grid(), SupportTag::w), 0.5), ZeroDataError);
}

TEST(Holder, SquareRootHasUnitSeminorm) {
    const auto sc = s1::make();
    const auto g = GridFunction::sample(sc.geom(), sc.grid(), SupportTag::omega,
                                        [](double x) { return std::sqrt(std::abs(x)); });
    EXPECT_NEAR(holder_seminorm(g, sc.grid().nodes_in(sc.geom().omega), 0.5), 1.0, 1e-12);
}

TEST(Potential, BoundsEnforced) {
    const auto sc = s1::make();
    EXPECT_NO_THROW(make_potential(sc.geom(), sc.q1.values, 10.0, 1.0));
    EXPECT_THROW(make_potential(sc.geom(), sc.q1.values, 0.1, 1.0), DomainError);
    EXPECT_THROW(make_potential(sc.geom(), sc.q1.values, 10.0, 0.1), DomainError);
    EXPECT_THROW(make_potential(sc.geom(), sc.f), SupportError);
}

TEST(Potential, RandomFamilyRespectsSharedBounds) {
    const auto sc = s1::make();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Potential p = random_potential(sc.geom(), sc.grid(), 2.0, 0.5, seed);
        EXPECT_LE(holder_norm(p.values, sc.geom()), 2.0 + 1e-12);
        EXPECT_LE(p.values.sup_norm(), 0.5 + 1e-12);
        EXPECT_GT(p.values.sup_norm(), 0.0);
    }
}
