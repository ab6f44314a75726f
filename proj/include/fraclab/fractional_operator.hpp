#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "fraclab/errors.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/special.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

namespace detail {

// Autocorrelation of the unit hat function: the centered cubic B-spline.
inline double hat_autocorrelation(double t) {
    t = std::abs(t);
    if (t >= 2.0) return 0.0;
    if (t >= 1.0) {
        const double u = 2.0 - t;
        return u * u * u / 6.0;
    }
    return 2.0 / 3.0 - t * t + 0.5 * t * t * t;
}

// Sum over nonzero periodic images, sum_{m != 0} |z + m P|^{-a}, for |z| < P.
inline double image_lattice_sum(double z, double period, double a) {
    constexpr int terms = 64;
    double acc = 0.0;
    for (int m = 1; m <= terms; ++m) {
        acc += std::pow(m * period + z, -a) + std::pow(m * period - z, -a);
    }
    const double edge = (terms + 0.5) * period;
    acc += (std::pow(edge + z, 1.0 - a) + std::pow(edge - z, 1.0 - a)) / ((a - 1.0) * period);
    return acc;
}

}  // namespace detail

/// Galerkin stiffness entries of (-Delta)^s between unit-spaced hat functions,
///   a(k) = (c_{1,s}/2) iint (phi_0(x)-phi_0(y))(phi_k(x)-phi_k(y)) / |x-y|^{1+2s},
/// for k = 0 .. count-1. Equivalently a(k) = ((-Delta)^s B)(k) with B the hat
/// autocorrelation. The cell |t| <= 1 is integrated analytically, the others by
/// Gauss-Legendre with `gauss_points` nodes per cell.
inline std::vector<double> galerkin_stencil(double s, std::size_t count, int gauss_points = 8) {
    const GaussRule rule = gauss_legendre(gauss_points);
    const double c = fractional_constant(s);
    const double a = 1.0 + 2.0 * s;
    std::vector<double> out(count);
    for (std::size_t kk = 0; kk < count; ++kk) {
        const double k = static_cast<double>(kk);
        const double bk = detail::hat_autocorrelation(k);
        auto numerator = [&](double t) {
            return 2.0 * bk - detail::hat_autocorrelation(k + t) - detail::hat_autocorrelation(k - t);
        };
        // On [0, 1] the numerator is g2 t^2 + g3 t^3 exactly.
        const double g_half = numerator(0.5);
        const double g_one = numerator(1.0);
        const double g3 = 2.0 * g_one - 8.0 * g_half;
        const double g2 = g_one - g3;
        double total = g2 / (2.0 - 2.0 * s) + g3 / (3.0 - 2.0 * s);
        // Cells [m, m+1] where the numerator is not the constant 2 B(k).
        const std::size_t m_begin = kk >= 3 ? kk - 2 : 1;
        for (std::size_t m = m_begin; m < kk + 2; ++m) {
            double cell = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double t = static_cast<double>(m) + 0.5 + 0.5 * rule.nodes[q];
                cell += rule.weights[q] * numerator(t) * std::pow(t, -a);
            }
            total += 0.5 * cell;
        }
        if (bk != 0.0) {
            // Tail t >= k + 2, where the numerator is the constant 2 B(k).
            total += 2.0 * bk * std::pow(k + 2.0, -2.0 * s) / (2.0 * s);
        }
        out[kk] = c * total;
    }
    return out;
}

/// Pointwise (-Delta)^s by the Fourier multiplier |xi|^{2s} on the periodic
/// supergrid, without any image correction.
inline std::vector<double> apply_multiplier(const GridFunction& u, double s) {
    const auto& spec = u.spec();
    PeriodicTransform tr(spec.n_super, spec.h);
    return tr.apply_radial(u.values(), [s](double xi) { return xi == 0.0 ? 0.0 : std::pow(xi, 2.0 * s); });
}

/// Fast path for (-Delta)^s u: Fourier multiplier |xi|^{2s} on the supergrid,
/// plus the far-field contribution of the periodic images so that the result
/// approximates the operator on R rather than on the torus.
inline GridFunction apply_spectral(const GridFunction& u, const Geometry& geom) {
    const auto& spec = u.spec();
    const std::size_t n = spec.n_super;
    constexpr std::size_t edge_guard = 8;
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] != 0.0 && (i < edge_guard || i + edge_guard >= n))
            throw SupportError("function has mass within 8 nodes of the box edge");
    }
    const double s = geom.s;
    std::vector<double> out = apply_multiplier(u, s);

    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < n; ++j)
        if (u[j] != 0.0) nz.push_back(j);
    if (!nz.empty()) {
        const double c = fractional_constant(s);
        const double a = 1.0 + 2.0 * s;
        const double period = spec.period();
        // lattice[d + n - 1] for offsets d = i - j in (-n, n)
        std::vector<double> lattice(2 * n - 1);
        for (std::size_t d = 0; d < lattice.size(); ++d) {
            const double z = (static_cast<double>(d) - static_cast<double>(n - 1)) * spec.h;
            lattice[d] = detail::image_lattice_sum(z, period, a);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j : nz) acc += u[j] * lattice[i + n - 1 - j];
            out[i] += c * spec.h * acc;
        }
    }
    return {geom, spec, SupportTag::whole_box, std::move(out)};
}

struct QuadratureDescriptor {
    int gauss_points = 8;
    double analytic_cutoff = 1.0;  // in units of h
};

/// Dense realization of (-Delta)^s: the hat-function Galerkin stiffness divided
/// by the lumped mass h, so (D u)_i approximates (-Delta)^s u(x_i). The matrix
/// is Toeplitz; `matrix()` holds the block on the active node window.
class FracLapDense {
public:
    FracLapDense(const Geometry& geom, const GridSpec& spec, IndexRange active, QuadratureDescriptor quad = {})
        : geom_(geom), spec_(spec), active_(active), quad_(quad) {
        stencil_ = galerkin_stencil(geom.s, spec.n_super, quad.gauss_points);
        const double scale = std::pow(spec.h, -2.0 * geom.s);
        for (double& v : stencil_) v *= scale;
        matrix_ = block(active_, active_);
    }

    double s() const { return geom_.s; }
    const Geometry& geometry() const { return geom_; }
    const GridSpec& grid() const { return spec_; }
    IndexRange active() const { return active_; }
    const QuadratureDescriptor& quadrature() const { return quad_; }
    const Eigen::MatrixXd& matrix() const { return matrix_; }
    /// D(i, j) as a function of |i - j|.
    const std::vector<double>& stencil() const { return stencil_; }

    double entry(std::size_t i, std::size_t j) const { return stencil_[i > j ? i - j : j - i]; }

    Eigen::MatrixXd block(const IndexRange& rows, const IndexRange& cols) const {
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = 0; j < cols.size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    entry(rows.first + i, cols.first + j);
        return m;
    }

    /// Lumped-mass values (D u)_i on every supergrid node (operator on R, no periodization).
    GridFunction apply(const GridFunction& u) const {
        return {geom_, spec_, SupportTag::whole_box, apply_raw(u.values())};
    }

    /// Values of the L^2 projection of (-Delta)^s u_h onto the hat space
    /// (consistent mass), where u_h is the piecewise-linear interpolant of u.
    GridFunction apply_projected(const GridFunction& u) const {
        std::vector<double> rhs = apply_raw(u.values());
        solve_mass(rhs);
        return {geom_, spec_, SupportTag::whole_box, std::move(rhs)};
    }

private:
    std::vector<double> apply_raw(std::span<const double> u) const {
        const std::size_t n = spec_.n_super;
        std::vector<std::size_t> nz;
        for (std::size_t j = 0; j < n; ++j)
            if (u[j] != 0.0) nz.push_back(j);
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j : nz) acc += entry(i, j) * u[j];
            out[i] = acc;
        }
        return out;
    }

    // Thomas algorithm for tridiag(1/6, 2/3, 1/6) y = b, in place.
    static void solve_mass(std::vector<double>& b) {
        const std::size_t n = b.size();
        std::vector<double> cp(n);
        const double lo = 1.0 / 6.0, di = 2.0 / 3.0;
        cp[0] = lo / di;
        b[0] /= di;
        for (std::size_t i = 1; i < n; ++i) {
            const double m = di - lo * cp[i - 1];
            cp[i] = lo / m;
            b[i] = (b[i] - lo * b[i - 1]) / m;
        }
        for (std::size_t i = n - 1; i-- > 0;) b[i] -= cp[i] * b[i + 1];
    }

    Geometry geom_;
    GridSpec spec_;
    IndexRange active_;
    QuadratureDescriptor quad_;
    std::vector<double> stencil_;
    Eigen::MatrixXd matrix_;
};

/// Active window: the hull of Omega and W widened on both sides by dist(Omega, W).
inline IndexRange active_window(const Geometry& geom, const GridSpec& spec) {
    const double margin = geom.omega.distance_to(geom.w);
    const Interval hull{std::min(geom.omega.lo, geom.w.lo) - margin, std::max(geom.omega.hi, geom.w.hi) + margin};
    return spec.nodes_in(hull);
}

inline FracLapDense assemble_dense(const Geometry& geom, const GridSpec& spec, QuadratureDescriptor quad = {}) {
    return {geom, spec, active_window(geom, spec), quad};
}

struct CrossValidation {
    double discrepancy = 0.0;
    bool pass = true;
};

/// Relative l^2 distance, over the active window, between the spectral path and
/// the projected dense path.
inline CrossValidation cross_validate(const GridFunction& u, const FracLapDense& op, double tol) {
    const GridFunction spectral = apply_spectral(u, op.geometry());
    const GridFunction dense = op.apply_projected(u);
    double num = 0.0, den = 0.0;
    const IndexRange act = op.active();
    for (std::size_t i = act.first; i < act.last; ++i) {
        const double d = spectral[i] - dense[i];
        num += d * d;
        den += spectral[i] * spectral[i];
    }
    CrossValidation cv;
    cv.discrepancy = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    cv.pass = cv.discrepancy <= tol && !(tol == 0.0 && den > 0.0);
    return cv;
}

}  // namespace fraclab
