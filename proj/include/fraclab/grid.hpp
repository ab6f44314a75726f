#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

/// Closed interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
    bool closures_intersect(const Interval& other) const { return lo <= other.hi && other.lo <= hi; }
    /// Distance between the two sets (0 when they intersect).
    double distance_to(const Interval& other) const {
        return std::max({0.0, other.lo - hi, lo - other.hi});
    }
    /// Distance from an interior point to the boundary.
    double distance_to_boundary(double x) const { return std::min(x - lo, hi - x); }
};

/// Spatial data of a scenario: Omega, the measurement window W, the potential
/// support Omega', the exponent s and the truncation half-width L.
struct Geometry {
    double s = 0.5;
    Interval omega;
    Interval w;
    Interval omega_prime;
    double box_halfwidth = 32.0;
};

/// Half-open index range [first, last).
struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const { return last - first; }
    bool empty() const { return last <= first; }
    bool contains(std::size_t i) const { return i >= first && i < last; }
};

/// Uniform periodic supergrid x_i = origin + i h, i = 0 .. n_super - 1.
struct GridSpec {
    double h = 0.0;
    std::size_t n_super = 0;
    double origin = 0.0;

    double x(std::size_t i) const { return origin + static_cast<double>(i) * h; }
    double period() const { return static_cast<double>(n_super) * h; }

    /// Nearest node index (clamped to the grid).
    std::size_t nearest(double x) const {
        const double t = std::round((x - origin) / h);
        return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(n_super - 1)));
    }

    /// Nodes whose position lies in the closed interval after snapping its
    /// endpoints to the nearest nodes.
    IndexRange nodes_in(const Interval& iv) const {
        return {nearest(iv.lo), nearest(iv.hi) + 1};
    }

    bool operator==(const GridSpec&) const = default;
};

enum class SupportTag { omega, omega_prime, w, omega_and_w, whole_box };

inline std::string to_string(SupportTag tag) {
    switch (tag) {
        case SupportTag::omega: return "omega";
        case SupportTag::omega_prime: return "omega_prime";
        case SupportTag::w: return "w";
        case SupportTag::omega_and_w: return "omega_and_w";
        case SupportTag::whole_box: return "whole_box";
    }
    return "?";
}

/// Node ranges covered by a support tag.
inline std::vector<IndexRange> support_ranges(const Geometry& geom, const GridSpec& spec, SupportTag tag) {
    switch (tag) {
        case SupportTag::omega: return {spec.nodes_in(geom.omega)};
        case SupportTag::omega_prime: return {spec.nodes_in(geom.omega_prime)};
        case SupportTag::w: return {spec.nodes_in(geom.w)};
        case SupportTag::omega_and_w: {
            auto a = spec.nodes_in(geom.omega);
            auto b = spec.nodes_in(geom.w);
            if (b.first < a.first) std::swap(a, b);
            return {a, b};
        }
        case SupportTag::whole_box: return {{0, spec.n_super}};
    }
    return {};
}

/// Real values sampled on the supergrid, identically zero outside the tagged support.
class GridFunction {
public:
    GridFunction() = default;

    GridFunction(const Geometry& geom, const GridSpec& spec, SupportTag tag, std::vector<double> values)
        : spec_(spec), tag_(tag), ranges_(support_ranges(geom, spec, tag)), values_(std::move(values)) {
        if (values_.size() != spec_.n_super)
            throw DomainError("grid function has " + std::to_string(values_.size()) + " values, expected " +
                              std::to_string(spec_.n_super));
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!std::isfinite(values_[i])) throw DomainError("non-finite grid value at node " + std::to_string(i));
            if (values_[i] != 0.0 && !in_support(i))
                throw SupportError("nonzero value outside support '" + to_string(tag_) + "' at x = " +
                                   std::to_string(spec_.x(i)));
        }
    }

    /// Zero function with the given support tag.
    static GridFunction zeros(const Geometry& geom, const GridSpec& spec, SupportTag tag) {
        return {geom, spec, tag, std::vector<double>(spec.n_super, 0.0)};
    }

    /// Samples `fn` on the support nodes; zero elsewhere.
    static GridFunction sample(const Geometry& geom, const GridSpec& spec, SupportTag tag,
                               const std::function<double(double)>& fn) {
        std::vector<double> v(spec.n_super, 0.0);
        for (const auto& r : support_ranges(geom, spec, tag))
            for (std::size_t i = r.first; i < r.last; ++i) v[i] = fn(spec.x(i));
        return {geom, spec, tag, std::move(v)};
    }

    const GridSpec& spec() const { return spec_; }
    SupportTag support() const { return tag_; }
    const std::vector<IndexRange>& ranges() const { return ranges_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    bool in_support(std::size_t i) const {
        return std::any_of(ranges_.begin(), ranges_.end(), [i](const IndexRange& r) { return r.contains(i); });
    }

    bool is_zero() const {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Discrete L^2 norm (h * sum v^2)^{1/2}.
    double l2_norm() const {
        double acc = 0.0;
        for (double v : values_) acc += v * v;
        return std::sqrt(acc * spec_.h);
    }

    /// Values on the nodes of `r`.
    std::vector<double> slice(const IndexRange& r) const {
        return {values_.begin() + static_cast<std::ptrdiff_t>(r.first),
                values_.begin() + static_cast<std::ptrdiff_t>(r.last)};
    }

    GridFunction scaled(const Geometry& geom, double c) const {
        std::vector<double> v(values_);
        for (double& x : v) x *= c;
        return {geom, spec_, tag_, std::move(v)};
    }

private:
    GridSpec spec_;
    SupportTag tag_ = SupportTag::whole_box;
    std::vector<IndexRange> ranges_;
    std::vector<double> values_;
};

/// Linear combination a*f + b*g of two grid functions on the same grid; the
/// result carries `tag`.
inline GridFunction combine(const Geometry& geom, double a, const GridFunction& f, double b, const GridFunction& g,
                            SupportTag tag) {
    if (!(f.spec() == g.spec())) throw DomainError("grid functions live on different grids");
    std::vector<double> v(f.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * f[i] + b * g[i];
    return {geom, f.spec(), tag, std::move(v)};
}

/// Input to build_geometry.
struct GeometryConfig {
    Interval omega{-1.0, 1.0};
    Interval w{2.0, 3.0};
    Interval omega_prime{-0.75, 0.75};
    double s = 0.5;
    double box_halfwidth = 32.0;
    std::size_t n_super = 4096;
};

struct Problem {
    Geometry geometry;
    GridSpec grid;
};

/// Validates the scenario intervals and builds the supergrid on [-L, L).
/// Interval endpoints are snapped to the nearest node.
inline Problem build_geometry(const GeometryConfig& cfg) {
    if (!(cfg.s > 0.0 && cfg.s < 1.0)) throw DomainError("exponent s must lie in (0, 1)");
    for (const auto* iv : {&cfg.omega, &cfg.w, &cfg.omega_prime})
        if (!(iv->lo < iv->hi)) throw DomainError("intervals need lo < hi");
    if (cfg.omega.closures_intersect(cfg.w))
        throw OverlapError("closures of omega and w intersect");
    if (!(cfg.omega_prime.lo > cfg.omega.lo && cfg.omega_prime.hi < cfg.omega.hi))
        throw GeometryError("omega_prime must be compactly contained in omega");
    if (!(cfg.box_halfwidth > 0.0)) throw DomainError("grid.L must be positive");
    const double quarter = cfg.box_halfwidth / 4.0;
    for (const auto* iv : {&cfg.omega, &cfg.w})
        if (iv->lo < -quarter || iv->hi > quarter)
            throw SupportError("omega and w must lie in [-L/4, L/4]");
    const std::size_t n = cfg.n_super;
    if (n < 16 || (n & (n - 1)) != 0) throw DomainError("grid.n_super must be a power of two >= 16");

    GridSpec spec{2.0 * cfg.box_halfwidth / static_cast<double>(n), n, -cfg.box_halfwidth};
    auto snap = [&](const Interval& iv) {
        return Interval{spec.x(spec.nearest(iv.lo)), spec.x(spec.nearest(iv.hi))};
    };
    Geometry g{cfg.s, snap(cfg.omega), snap(cfg.w), snap(cfg.omega_prime), cfg.box_halfwidth};
    if (g.omega.closures_intersect(g.w)) throw OverlapError("snapped omega and w touch");
    if (!(g.omega_prime.lo > g.omega.lo && g.omega_prime.hi < g.omega.hi))
        throw ResolutionError("omega_prime collapses onto the boundary of omega at this resolution");
    if (spec.nodes_in(g.omega).size() < 16) throw ResolutionError("fewer than 16 nodes in omega");
    if (spec.nodes_in(g.w).size() < 16) throw ResolutionError("fewer than 16 nodes in w");
    return {g, spec};
}

/// Polynomial or smooth compactly supported bump
/// amplitude * (1 - z^2)_+^p,  z = (x - center)/width,  or, for p = inf,
/// amplitude * exp(1 - 1/(1 - z^2)).
struct Bump {
    double center = 0.0;
    double width = 1.0;
    double amplitude = 1.0;
    double smoothness = 3.0;

    double operator()(double x) const {
        const double z = (x - center) / width;
        const double t = 1.0 - z * z;
        if (t <= 0.0) return 0.0;
        if (std::isinf(smoothness)) return amplitude * std::exp(1.0 - 1.0 / t);
        return amplitude * std::pow(t, smoothness);
    }
};

}  // namespace fraclab
