#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/extension.hpp"
#include "fraclab/fit.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/norms.hpp"

namespace fraclab {

/// psi(r) = -ln r + (ln r * atan(ln r) - ln(1 + ln^2 r) / 2) / 10.
inline double carleman_weight(double r) {
    if (!(r > 0.0)) throw DomainError("carleman weight needs r > 0");
    const double l = std::log(r);
    return -l + 0.1 * (l * std::atan(l) - 0.5 * std::log1p(l * l));
}

struct GapRange {
    double min = 0.0;
    double max = 0.0;
};

/// Extrema of |psi(r) - psi(4r)| over a log grid of `points` radii in [r_min, r_max].
inline GapRange carleman_gap_check(double r_min, double r_max, std::size_t points = 256) {
    if (!(r_min > 0.0) || r_max < r_min) throw DomainError("carleman scan needs 0 < r_min <= r_max");
    GapRange g{std::numeric_limits<double>::infinity(), 0.0};
    const std::size_t n = r_max > r_min ? std::max<std::size_t>(points, 200) : 1;
    for (double r : log_spaced(r_min, r_max, n)) {
        const double d = std::abs(carleman_weight(r) - carleman_weight(4.0 * r));
        g.min = std::min(g.min, d);
        g.max = std::max(g.max, d);
    }
    return g;
}

struct LemmaCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;  // rhs with unit constant
    double implied_constant = 0.0;
    std::map<std::string, double> parameters;
};

namespace detail {

inline double ratio_or_zero(double a, double b) { return b > 0.0 ? a / b : 0.0; }

inline void require_inside_omega(const Geometry& geom, double x0) {
    if (!(x0 > geom.omega.lo && x0 < geom.omega.hi)) throw GeometryError("center must lie in omega");
}

}  // namespace detail

/// Weighted gradient on B_r^+ against (1 + |q|_inf^{1/(2s)}) r^{-1} times the weighted mass on B_{2r}^+.
inline LemmaCheck caccioppoli_check(const ExtensionField& field, const Potential& q, double x0, double r) {
    const Geometry& geom = field.geometry;
    detail::require_inside_omega(geom, x0);
    if (4.0 * r > geom.omega.distance_to_boundary(x0)) throw GeometryError("caccioppoli needs 4r <= dist(x0, boundary)");
    LemmaCheck c;
    c.name = "caccioppoli";
    c.lhs = weighted_gradient_norm(field, Region::half_ball(x0, r));
    const double qfac = 1.0 + std::pow(q.values.sup_norm(), 1.0 / (2.0 * geom.s));
    c.rhs = qfac / r * weighted_norm(field, Region::half_ball(x0, 2.0 * r));
    c.implied_constant = detail::ratio_or_zero(c.lhs, c.rhs);
    c.parameters = {{"x0", x0}, {"r", r}, {"q_sup", q.values.sup_norm()}};
    return c;
}

/// Weighted mass of the slab W x [h, 1] against
/// (C^{-1} F^{-1/s} - h) |f|_{H^s} - C_s h^{1-s} |f|_{L^2}. The constant C is
/// calibrated from the slab mass at the smallest height (2 C_0 = F^{-1/s}/C)
/// and C_s = 1; h0 is the largest scanned h with mass >= C_0 |f|_{H^s} / 2.
inline LemmaCheck persistence_check(const ExtensionField& field, const GridFunction& f, double h) {
    if (!(h > 0.0 && h < 1.0)) throw DomainError("persistence height must lie in (0, 1)");
    const Geometry& geom = field.geometry;
    const double s = geom.s;
    const double F = oscillation_ratio(f, s);
    const double fhs = sobolev_norm(f, s), fl2 = sobolev_norm(f, 0.0);
    auto slab = [&](double lo) { return weighted_norm(field, Region::slab(geom.w, lo, 1.0)); };

    const double h_min = field.y.front();
    const double c0 = slab(h_min) / (2.0 * fhs);
    const double C = std::pow(F, -1.0 / s) / (2.0 * c0);
    double h0 = 0.0;
    for (double hh : log_spaced(h_min, 0.99, 64))
        if (slab(hh) >= 0.5 * c0 * fhs) h0 = hh;

    LemmaCheck c;
    c.name = "persistence";
    c.lhs = slab(h);
    c.rhs = std::max(0.0, (std::pow(F, -1.0 / s) / C - h) * fhs - std::pow(h, 1.0 - s) * fl2);
    c.implied_constant = detail::ratio_or_zero(c.lhs, c.rhs);
    c.parameters = {{"h", h}, {"F", F}, {"C", C}, {"C0", c0}, {"C_s", 1.0}, {"h0", h0}};
    return c;
}

/// |u~|_{B_{2R}^+} / |u~|_{B_R^+ \ B_{R/2}^+} against F; gamma = log(ratio)/log(F).
inline LemmaCheck annulus_ratio(const ExtensionField& field, const GridFunction& f, double R, double x0 = 0.0) {
    const double F = oscillation_ratio(f, field.geometry.s);
    const double ball = weighted_norm(field, Region::half_ball(x0, 2.0 * R));
    const double ring = weighted_norm(field, Region::annulus(x0, R));
    if (!(ring >= 1e-14 * ball) || ball == 0.0) throw ZeroMassError("annulus carries no mass");
    LemmaCheck c;
    c.name = "annulus";
    c.lhs = ball / ring;
    c.rhs = F;
    c.implied_constant = c.lhs / c.rhs;
    c.parameters = {{"R", R}, {"x0", x0}, {"F", F}, {"gamma", F != 1.0 ? std::log(c.lhs) / std::log(F) : 0.0}};
    return c;
}

/// Largest alpha with N_r <= N_{r/2}^alpha N_{2r}^{1-alpha} for interior balls at (x0, y0).
inline LemmaCheck three_balls_exponent(const ExtensionField& field, double x0, double y0, double r) {
    if (!(r > 0.0) || !(y0 - 4.0 * r > 0.0)) throw GeometryError("three balls need B_4r inside the open half-plane");
    const double n_half = weighted_norm(field, Region::ball(x0, y0, 0.5 * r));
    const double n_r = weighted_norm(field, Region::ball(x0, y0, r));
    const double n_two = weighted_norm(field, Region::ball(x0, y0, 2.0 * r));
    if (!(n_half > 0.0) || !(std::abs(n_two - n_half) > 1e-14 * n_two))
        throw DegenerateError("inner and outer masses coincide");
    LemmaCheck c;
    c.name = "three_balls";
    c.implied_constant = std::log(n_r / n_two) / std::log(n_half / n_two);
    c.lhs = n_r;
    c.rhs = std::pow(n_half, c.implied_constant) * std::pow(n_two, 1.0 - c.implied_constant);
    c.parameters = {{"x0", x0}, {"y0", y0}, {"r", r}, {"N_half", n_half}, {"N_r", n_r}, {"N_2r", n_two},
                    {"alpha", c.implied_constant}};
    return c;
}

/// |u~|_{B_{c0 r}^+} against (|u~|_{B_{2r}^+} + |u|_{B'_{3r/2}})^alpha |u|_{B'_{3r/2}}^{1-alpha},
/// with alpha from the three-balls exponent at (x0, r) with radius r/5.
inline LemmaCheck boundary_bulk_check(const ExtensionField& field, double x0, double r, const Potential& q,
                                      double c0 = 0.25) {
    const Geometry& geom = field.geometry;
    detail::require_inside_omega(geom, x0);
    if (2.0 * r > geom.omega.distance_to_boundary(x0)) throw GeometryError("boundary bulk needs B'_2r inside omega");
    if (!(c0 > 0.0 && c0 < 0.5)) throw DomainError("c0 must lie in (0, 1/2)");
    LemmaCheck c;
    c.name = "boundary_bulk";
    c.lhs = weighted_norm(field, Region::half_ball(x0, c0 * r));
    const double bulk = weighted_norm(field, Region::half_ball(x0, 2.0 * r));
    const double bd = weighted_norm(field, Region::boundary_ball(x0, 1.5 * r));
    c.parameters = {{"x0", x0}, {"r", r}, {"c0", c0}, {"q_sup", q.values.sup_norm()}};
    if (c.lhs == 0.0 && bulk == 0.0 && bd == 0.0) return c;
    const double alpha = three_balls_exponent(field, x0, r, 0.2 * r).implied_constant;
    c.rhs = std::pow(bulk + bd, alpha) * std::pow(bd, 1.0 - alpha);
    c.implied_constant = detail::ratio_or_zero(c.lhs, c.rhs);
    c.parameters["alpha"] = alpha;
    return c;
}

struct DoublingReport {
    enum class Mode { bulk, boundary };
    Mode mode = Mode::bulk;
    double center = 0.0;
    std::vector<double> radii;
    std::vector<double> masses;         // N(r)
    std::vector<double> double_masses;  // N(2r)
    std::vector<double> ratios;         // N(2r)/N(r)
    double beta = std::numeric_limits<double>::quiet_NaN();
    double prefactor = std::numeric_limits<double>::quiet_NaN();
    double fit_residual = std::numeric_limits<double>::quiet_NaN();  // sup over log masses
    double r0 = 0.0;
    std::string flag;  // empty, "zero_mass" or "too_few_radii"

    double max_ratio() const {
        double m = 0.0;
        for (double v : ratios) m = std::max(m, v);
        return m;
    }
    double min_ratio() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : ratios) m = std::min(m, v);
        return m;
    }
};

namespace detail {

inline void check_radii(const std::vector<double>& radii, double r0) {
    if (radii.empty()) throw DomainError("empty radius list");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1])))
            throw DomainError("radii must be positive and strictly increasing");
        if (radii[i] > r0 * (1.0 + 1e-12))
            throw GeometryError("radius " + std::to_string(radii[i]) + " exceeds r0 = " + std::to_string(r0));
    }
}

inline void fit_report(DoublingReport& rep) {
    for (double m : rep.masses)
        if (!(m > 0.0)) {
            rep.flag = "zero_mass";
            return;
        }
    if (rep.radii.size() < 8) rep.flag = "too_few_radii";
    if (rep.radii.size() < 2) return;
    std::vector<double> lr, lm;
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
        lr.push_back(std::log(rep.radii[i]));
        lm.push_back(std::log(rep.masses[i]));
    }
    const LineFit fit = fit_line(lr, lm);
    rep.beta = fit.slope;
    rep.prefactor = std::exp(fit.intercept);
    rep.fit_residual = fit.residual_sup;
}

}  // namespace detail

/// Bulk doubling N(r) = |y^{(1-2s)/2} u~|_{B_r^+(x0)}; r0 = dist(x0, boundary)/10.
inline DoublingReport doubling_scan_bulk(const ExtensionField& field, double x0, const std::vector<double>& radii) {
    const Geometry& geom = field.geometry;
    detail::require_inside_omega(geom, x0);
    DoublingReport rep;
    rep.mode = DoublingReport::Mode::bulk;
    rep.center = x0;
    rep.r0 = geom.omega.distance_to_boundary(x0) / 10.0;
    detail::check_radii(radii, rep.r0);
    if (radii.front() <= 10.0 * field.hx)
        throw ResolutionError("half-ball radii must exceed 10 grid spacings");
    rep.radii = radii;
    for (double r : radii) {
        rep.masses.push_back(weighted_norm(field, Region::half_ball(x0, r)));
        rep.double_masses.push_back(weighted_norm(field, Region::half_ball(x0, 2.0 * r)));
        rep.ratios.push_back(rep.masses.back() > 0.0 ? rep.double_masses.back() / rep.masses.back()
                                                     : std::numeric_limits<double>::infinity());
    }
    detail::fit_report(rep);
    return rep;
}

/// Boundary doubling N(r) = |u|_{L^2(B_r'(x0))}; r0 = dist(x0, boundary)/4.
inline DoublingReport doubling_scan_boundary(const GridFunction& u, const Geometry& geom, double x0,
                                             const std::vector<double>& radii) {
    detail::require_inside_omega(geom, x0);
    DoublingReport rep;
    rep.mode = DoublingReport::Mode::boundary;
    rep.center = x0;
    rep.r0 = geom.omega.distance_to_boundary(x0) / 4.0;
    detail::check_radii(radii, rep.r0);
    rep.radii = radii;
    const double omega_mass = boundary_mass(u, geom.omega.center(), 0.5 * geom.omega.length());
    for (double r : radii) {
        rep.masses.push_back(boundary_mass(u, x0, r));
        rep.double_masses.push_back(boundary_mass(u, x0, 2.0 * r));
        rep.ratios.push_back(rep.masses.back() > 0.0 ? rep.double_masses.back() / rep.masses.back()
                                                     : std::numeric_limits<double>::infinity());
    }
    if (!(rep.masses.front() >= 1e-14 * omega_mass) || omega_mass == 0.0)
        throw ZeroMassError("boundary mass vanishes at the smallest radius");
    detail::fit_report(rep);
    return rep;
}

/// Potential in Omega' built from a few random polynomial bumps, rescaled so
/// that its Holder norm is at most E and its sup at most M.
inline Potential random_potential(const Geometry& geom, const GridSpec& spec, double E, double M, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Interval& op = geom.omega_prime;
    std::vector<Bump> bumps;
    for (int k = 0; k < 3; ++k) {
        const double width = (0.15 + 0.25 * unit(rng)) * op.length();
        const double lo = op.lo + width, hi = op.hi - width;
        const double center = lo < hi ? lo + (hi - lo) * unit(rng) : op.center();
        bumps.push_back({center, width, 2.0 * unit(rng) - 1.0, 2.0});
    }
    GridFunction g = GridFunction::sample(geom, spec, SupportTag::omega_prime, [&](double x) {
        double v = 0.0;
        for (const auto& b : bumps) v += b(x);
        return v;
    });
    const double hn = holder_norm(g, geom), sup = g.sup_norm();
    double scale = 1.0;
    if (hn > 0.0) scale = std::min(scale, E / hn);
    if (sup > 0.0) scale = std::min(scale, M / sup);
    return make_potential(geom, g.scaled(geom, scale), E, M);
}

}  // namespace fraclab
