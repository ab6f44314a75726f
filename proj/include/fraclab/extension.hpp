#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "fraclab/errors.hpp"
#include "fraclab/fractional_operator.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/special.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

/// Heights y_j = Y (j/M)^kappa, j = 1..M, with kappa = max(2, 2/(2-2s)).
inline std::vector<double> graded_heights(double s, double Y = 4.0, std::size_t M = 200) {
    if (!(Y > 0.0) || M == 0) throw DomainError("graded heights need Y > 0 and M >= 1");
    const double kappa = std::max(2.0, 2.0 / (2.0 - 2.0 * s));
    std::vector<double> y(M);
    for (std::size_t j = 1; j <= M; ++j) y[j - 1] = Y * std::pow(static_cast<double>(j) / M, kappa);
    return y;
}

/// Optional evaluation window: a sub-interval of the line sampled `refine`
/// times finer than the supergrid (band-limited interpolation).
struct ExtensionWindow {
    Interval x{0.0, 0.0};
    std::size_t refine = 1;
};

/// Samples of the Caffarelli-Silvestre extension on a uniform x grid times
/// a positive height grid. Row i is x_i, column j is y_j; the y = 0 row of the
/// half-plane is stored separately as `trace`.
class ExtensionField {
public:
    double s = 0.5;
    double d_s = 1.0;
    double x_origin = 0.0;
    double hx = 0.0;
    std::vector<double> y;
    Eigen::MatrixXd values;  // nx x ny
    Eigen::MatrixXd dx;      // spectral x derivative, same shape
    std::vector<double> trace;
    /// Source function when the field covers the full supergrid unrefined.
    std::optional<GridFunction> source;
    Geometry geometry;

    std::size_t nx() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t ny() const { return y.size(); }
    double x(std::size_t i) const { return x_origin + static_cast<double>(i) * hx; }
    double x_max() const { return x(nx() - 1); }
    double y_max() const { return y.back(); }

    /// Centered nonuniform differences in y; one-sided at the first and last heights.
    Eigen::MatrixXd dy() const {
        const auto n = values.rows();
        const auto m = static_cast<Eigen::Index>(y.size());
        Eigen::MatrixXd d(n, m);
        if (m < 2) return Eigen::MatrixXd::Zero(n, m);
        d.col(0) = (values.col(1) - values.col(0)) / (y[1] - y[0]);
        d.col(m - 1) = (values.col(m - 1) - values.col(m - 2)) / (y[m - 1] - y[m - 2]);
        for (Eigen::Index j = 1; j + 1 < m; ++j) {
            const double hm = y[j] - y[j - 1], hp = y[j + 1] - y[j];
            d.col(j) = (-hp / (hm * (hm + hp))) * values.col(j - 1) + ((hp - hm) / (hm * hp)) * values.col(j) +
                       (hm / (hp * (hm + hp))) * values.col(j + 1);
        }
        return d;
    }
};

/// Extension of u: column j is the inverse transform of u^_k theta_s(|xi_k| y_j).
inline ExtensionField extend(const GridFunction& u, const Geometry& geom, const std::vector<double>& y_grid,
                             std::optional<ExtensionWindow> window = std::nullopt) {
    const auto& spec = u.spec();
    const double s = geom.s;
    if (y_grid.empty()) throw DomainError("empty height grid");
    for (std::size_t j = 0; j < y_grid.size(); ++j)
        if (!(y_grid[j] > 0.0) || (j > 0 && !(y_grid[j] > y_grid[j - 1])))
            throw DomainError("heights must be positive and strictly increasing");

    const std::size_t n = spec.n_super;
    const std::size_t refine = window ? std::max<std::size_t>(1, window->refine) : 1;
    const std::size_t nf = n * refine;
    const double hf = spec.h / static_cast<double>(refine);

    std::size_t first = 0, last = nf;
    if (window) {
        const double a = std::max(window->x.lo, spec.origin);
        const double b = std::min(window->x.hi, spec.x(n - 1));
        first = static_cast<std::size_t>(std::ceil((a - spec.origin) / hf - 1e-9));
        last = static_cast<std::size_t>(std::floor((b - spec.origin) / hf + 1e-9)) + 1;
        if (last <= first) throw EmptyRegionError("extension window contains no nodes");
    }
    const std::size_t nx = last - first;

    ExtensionField field;
    field.s = s;
    field.d_s = neumann_constant(s);
    field.x_origin = spec.origin + static_cast<double>(first) * hf;
    field.hx = hf;
    field.y = y_grid;
    field.geometry = geom;
    field.values.resize(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(y_grid.size()));
    field.dx.resizeLike(field.values);
    if (!window) field.source = u;

    PeriodicTransform base(n, spec.h);
    PeriodicTransform fine(nf, hf);
    const Spectrum uh = base.forward(u.values());
    const double gain = static_cast<double>(refine);

    // Place the base spectrum into the fine one, splitting the Nyquist mode.
    auto embed = [&](const auto& coeff) {
        Spectrum out(nf, {0.0, 0.0});
        for (std::size_t k = 0; k < n; ++k) {
            const std::complex<double> c = coeff(k) * gain;
            if (refine > 1 && k == n / 2) {
                out[k] += 0.5 * c;
                out[nf - n / 2] += 0.5 * c;
            } else if (k < n / 2) {
                out[k] = c;
            } else {
                out[nf - (n - k)] = c;
            }
        }
        return out;
    };
    auto take = [&](const std::vector<double>& full, Eigen::Ref<Eigen::VectorXd> dst) {
        for (std::size_t i = 0; i < nx; ++i) dst(static_cast<Eigen::Index>(i)) = full[first + i];
    };

    {
        const std::vector<double> tr = fine.inverse(embed([&](std::size_t k) { return uh[k]; }));
        field.trace.assign(tr.begin() + static_cast<std::ptrdiff_t>(first),
                           tr.begin() + static_cast<std::ptrdiff_t>(last));
    }
    if (u.is_zero()) {
        field.values.setZero();
        field.dx.setZero();
        return field;
    }
    std::vector<double> xi(n);
    for (std::size_t k = 0; k < n; ++k) xi[k] = base.wavenumber(k);
    for (std::size_t j = 0; j < y_grid.size(); ++j) {
        std::vector<double> theta(n);
        for (std::size_t k = 0; k < n; ++k) theta[k] = extension_multiplier(s, std::abs(xi[k]) * y_grid[j]);
        const std::vector<double> col = fine.inverse(embed([&](std::size_t k) { return uh[k] * theta[k]; }));
        // Nyquist mode has no well-defined derivative; drop it.
        const std::vector<double> dcol = fine.inverse(embed([&](std::size_t k) {
            return k == n / 2 ? std::complex<double>{0.0, 0.0}
                               : uh[k] * theta[k] * std::complex<double>{0.0, xi[k]};
        }));
        take(col, field.values.col(static_cast<Eigen::Index>(j)));
        take(dcol, field.dx.col(static_cast<Eigen::Index>(j)));
    }
    return field;
}

/// Integration regions in the half-plane {(x, y) : y >= 0}.
struct Region {
    enum class Kind { half_ball, ball, boundary_ball, annulus, slab };
    Kind kind = Kind::half_ball;
    double x0 = 0.0;
    double y0 = 0.0;
    double radius = 0.0;        // outer radius (annulus: R)
    Interval slab_x{0.0, 0.0};  // slab only
    double y_lo = 0.0, y_hi = 0.0;

    /// B_r^+(x0) = {(x, y) : |(x - x0, y)| < r, y > 0}.
    static Region half_ball(double x0, double r) { return {Kind::half_ball, x0, 0.0, r, {}, 0.0, 0.0}; }
    /// Full disc B_r((x0, y0)); must lie in the open upper half-plane.
    static Region ball(double x0, double y0, double r) { return {Kind::ball, x0, y0, r, {}, 0.0, 0.0}; }
    /// B_r'(x0) on the line y = 0.
    static Region boundary_ball(double x0, double r) { return {Kind::boundary_ball, x0, 0.0, r, {}, 0.0, 0.0}; }
    /// B_R^+ \ B_{R/2}^+ centered at x0.
    static Region annulus(double x0, double R) { return {Kind::annulus, x0, 0.0, R, {}, 0.0, 0.0}; }
    /// xs times [y_lo, y_hi].
    static Region slab(Interval xs, double y_lo, double y_hi) { return {Kind::slab, 0.0, 0.0, 0.0, xs, y_lo, y_hi}; }

    Interval x_extent() const {
        if (kind == Kind::slab) return slab_x;
        return {x0 - radius, x0 + radius};
    }
};

namespace detail {

// int_a^b y^p g(y) dy with g the piecewise-linear interpolant through (ys, gs).
inline double weighted_segment_integral(const std::vector<double>& ys, const std::vector<double>& gs, double p,
                                        double a, double b) {
    if (!(b > a)) return 0.0;
    auto moment = [p](double lo, double hi, double k) {
        return (std::pow(hi, p + 1.0 + k) - std::pow(lo, p + 1.0 + k)) / (p + 1.0 + k);
    };
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
        const double lo = std::max(a, ys[k]), hi = std::min(b, ys[k + 1]);
        if (!(hi > lo)) continue;
        const double slope = (gs[k + 1] - gs[k]) / (ys[k + 1] - ys[k]);
        const double c0 = gs[k] - slope * ys[k];
        acc += c0 * moment(lo, hi, 0.0) + slope * moment(lo, hi, 1.0);
    }
    return acc;
}

// int_a^b (P1 interpolant of v)^2 dx on a uniform grid.
inline double p1_square_integral(const std::vector<double>& v, double origin, double h, double a, double b) {
    if (!(b > a) || v.empty()) return 0.0;
    const double x_last = origin + static_cast<double>(v.size() - 1) * h;
    a = std::max(a, origin);
    b = std::min(b, x_last);
    if (!(b > a)) return 0.0;
    const auto k0 = static_cast<std::size_t>(std::floor((a - origin) / h));
    double acc = 0.0;
    for (std::size_t k = k0; k + 1 < v.size(); ++k) {
        const double xl = origin + static_cast<double>(k) * h;
        if (xl >= b) break;
        const double lo = std::max(a, xl), hi = std::min(b, xl + h);
        if (!(hi > lo)) continue;
        auto val = [&](double x) { return v[k] + (v[k + 1] - v[k]) * (x - xl) / h; };
        // Simpson is exact for the quadratic (P1)^2.
        const double fl = val(lo), fm = val(0.5 * (lo + hi)), fh = val(hi);
        acc += (hi - lo) / 6.0 * (fl * fl + 4.0 * fm * fm + fh * fh);
    }
    return acc;
}

// y-interval covered by the region above x, or nullopt when x is outside.
inline std::optional<std::pair<double, double>> region_column(const Region& r, double x) {
    using K = Region::Kind;
    const double dx = x - r.x0;
    switch (r.kind) {
        case K::half_ball: {
            if (!(std::abs(dx) < r.radius)) return std::nullopt;
            return std::pair{0.0, std::sqrt(r.radius * r.radius - dx * dx)};
        }
        case K::ball: {
            if (!(std::abs(dx) < r.radius)) return std::nullopt;
            const double c = std::sqrt(r.radius * r.radius - dx * dx);
            return std::pair{r.y0 - c, r.y0 + c};
        }
        case K::annulus: {
            if (!(std::abs(dx) < r.radius)) return std::nullopt;
            const double inner = 0.5 * r.radius;
            const double lo = std::abs(dx) < inner ? std::sqrt(inner * inner - dx * dx) : 0.0;
            return std::pair{lo, std::sqrt(r.radius * r.radius - dx * dx)};
        }
        case K::slab: {
            if (!r.slab_x.contains(x, 1e-12)) return std::nullopt;
            return std::pair{r.y_lo, r.y_hi};
        }
        case K::boundary_ball: return std::nullopt;
    }
    return std::nullopt;
}

inline void check_region(const ExtensionField& field, const Region& region) {
    const Interval xs = region.x_extent();
    const double tol = 1e-9 * std::max(1.0, std::abs(xs.hi));
    if (xs.lo < field.x_origin - tol || xs.hi > field.x_max() + tol)
        throw GeometryError("region leaves the computed x window");
    double top = 0.0;
    switch (region.kind) {
        case Region::Kind::ball:
            if (!(region.y0 - region.radius > 0.0)) throw GeometryError("interior ball touches y = 0");
            top = region.y0 + region.radius;
            break;
        case Region::Kind::slab:
            if (!(region.y_lo >= 0.0 && region.y_hi > region.y_lo)) throw GeometryError("invalid slab heights");
            top = region.y_hi;
            break;
        case Region::Kind::boundary_ball: top = 0.0; break;
        default: top = region.radius;
    }
    if (top > field.y_max() * (1.0 + 1e-12)) throw GeometryError("region exceeds the height grid");
}

// Squared weighted L^2 norm of the columns `g(i, j)` (with y = 0 value g0(i)) over the region.
template <typename Value, typename Bottom>
double region_quadrature(const ExtensionField& field, const Region& region, Value&& g, Bottom&& g0) {
    check_region(field, region);
    const double p = 1.0 - 2.0 * field.s;
    std::vector<double> ys(field.ny() + 1), gs(field.ny() + 1);
    ys[0] = 0.0;
    for (std::size_t j = 0; j < field.ny(); ++j) ys[j + 1] = field.y[j];

    std::vector<std::size_t> idx;
    std::vector<std::pair<double, double>> spans;
    for (std::size_t i = 0; i < field.nx(); ++i) {
        if (auto c = region_column(region, field.x(i))) {
            idx.push_back(i);
            spans.push_back(*c);
        }
    }
    if (idx.empty()) throw EmptyRegionError("no quadrature nodes in region");
    double acc = 0.0;
    for (std::size_t m = 0; m < idx.size(); ++m) {
        const std::size_t i = idx[m];
        gs[0] = g0(i);
        for (std::size_t j = 0; j < field.ny(); ++j) gs[j + 1] = g(i, j);
        // Trapezoid in x: half weight at the ends of each run of masked nodes.
        const bool run_start = m == 0 || idx[m - 1] + 1 != i;
        const bool run_end = m + 1 == idx.size() || idx[m + 1] != i + 1;
        double wx = field.hx;
        if (run_start) wx *= 0.5;
        if (run_end) wx *= 0.5;
        if (run_start && run_end) wx = field.hx;  // isolated node
        acc += wx * weighted_segment_integral(ys, gs, p, spans[m].first, spans[m].second);
    }
    return acc;
}

}  // namespace detail

/// (iint_region |u~|^2 y^{1-2s} dx dy)^{1/2}; boundary balls give (int |u|^2 dx)^{1/2}.
inline double weighted_norm(const ExtensionField& field, const Region& region) {
    if (region.kind == Region::Kind::boundary_ball) {
        detail::check_region(field, region);
        if (!(region.radius > 0.0) || field.nx() < 2) throw EmptyRegionError("no quadrature nodes in region");
        const double a = region.x0 - region.radius, b = region.x0 + region.radius;
        return std::sqrt(detail::p1_square_integral(field.trace, field.x_origin, field.hx, a, b));
    }
    const double sq = detail::region_quadrature(
        field, region,
        [&](std::size_t i, std::size_t j) {
            const double v = field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            return v * v;
        },
        [&](std::size_t i) { return field.trace[i] * field.trace[i]; });
    return std::sqrt(std::max(sq, 0.0));
}

/// ||u||_{L^2(B_r'(x0))} from grid values, integrating the piecewise-linear interpolant exactly.
inline double boundary_mass(const GridFunction& u, double x0, double r) {
    const auto& spec = u.spec();
    std::vector<double> v(u.values().begin(), u.values().end());
    return std::sqrt(detail::p1_square_integral(v, spec.origin, spec.h, x0 - r, x0 + r));
}

/// (iint_region |grad u~|^2 y^{1-2s})^{1/2}, spectral in x, finite differences in y.
inline double weighted_gradient_norm(const ExtensionField& field, const Region& region) {
    if (region.kind == Region::Kind::boundary_ball) throw DomainError("gradient norm needs a two-dimensional region");
    const Eigen::MatrixXd gy = field.dy();
    auto g = [&](std::size_t i, std::size_t j) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        return field.dx(ii, jj) * field.dx(ii, jj) + gy(ii, jj) * gy(ii, jj);
    };
    // The bottom row reuses the first height; the y-derivative has no trace value.
    auto g0 = [&](std::size_t i) { return g(i, 0); };
    return std::sqrt(std::max(detail::region_quadrature(field, region, g, g0), 0.0));
}

/// Weighted gradient energy over the whole computed box.
inline double weighted_energy(const ExtensionField& field) {
    const Region box = Region::slab({field.x_origin, field.x_max()}, 0.0, field.y_max());
    return weighted_gradient_norm(field, box);
}

/// (-Delta)^s u from the weighted normal derivative of the extension, by a
/// least-squares fit u~(x, y) = a + b y^{2s} + c y^2 over the heights below 1e-2;
/// the limit y^{1-2s} d_y u~ -> 2 s b = -d_s (-Delta)^s u.
inline GridFunction neumann_trace_fd(const ExtensionField& field) {
    if (!field.source) throw DomainError("neumann trace needs a field on the full supergrid");
    std::vector<std::size_t> low;
    for (std::size_t j = 0; j < field.ny(); ++j)
        if (field.y[j] < 1e-2) low.push_back(j);
    if (low.size() < 3) throw ResolutionError("fewer than 3 heights below 1e-2");
    const double s = field.s;
    const auto m = static_cast<Eigen::Index>(low.size());
    Eigen::MatrixXd design(m, 3);
    for (Eigen::Index r = 0; r < m; ++r) {
        const double yv = field.y[low[static_cast<std::size_t>(r)]];
        design(r, 0) = 1.0;
        design(r, 1) = std::pow(yv, 2.0 * s);
        design(r, 2) = yv * yv;
    }
    // Exact y^{2s} and y^2 coincide at s = 1, not in (0, 1).
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    std::vector<double> out(field.nx());
    Eigen::VectorXd rhs(m);
    for (std::size_t i = 0; i < field.nx(); ++i) {
        for (Eigen::Index r = 0; r < m; ++r)
            rhs(r) = field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(low[static_cast<std::size_t>(r)]));
        const Eigen::VectorXd coef = qr.solve(rhs);
        out[i] = -2.0 * s * coef(1) / field.d_s;
    }
    const auto& src = *field.source;
    return {field.geometry, src.spec(), SupportTag::whole_box, std::move(out)};
}

/// (-Delta)^s u as the Neumann-type trace of the extension. The returned values
/// are the spectral limit (identical to apply_spectral); the finite-difference
/// route is computed as a check and must agree within 5% (relative l^2).
inline GridFunction neumann_trace(const ExtensionField& field) {
    if (!field.source) throw DomainError("neumann trace needs a field on the full supergrid");
    const GridFunction spectral = apply_spectral(*field.source, field.geometry);
    if (field.source->is_zero()) return spectral;
    const GridFunction fd = neumann_trace_fd(field);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < spectral.size(); ++i) {
        num += (fd[i] - spectral[i]) * (fd[i] - spectral[i]);
        den += spectral[i] * spectral[i];
    }
    if (num > 0.05 * 0.05 * den)
        throw ResolutionError("finite-difference Neumann trace deviates by " + std::to_string(std::sqrt(num / den)));
    return spectral;
}

/// Flat (x, y, value) rows, including the y = 0 trace row.
inline void write_field_csv(std::ostream& os, const ExtensionField& field) {
    char buf[96];
    os << "x,y,value\n";
    for (std::size_t i = 0; i < field.nx(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", field.x(i), 0.0, field.trace[i]);
        os << buf;
        for (std::size_t j = 0; j < field.ny(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", field.x(i), field.y[j],
                          field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            os << buf;
        }
    }
}

}  // namespace fraclab
