#pragma once

#include <cmath>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/spectral.hpp"

namespace fraclab {

/// H^t(R) norm via the Fourier multiplier (1 + xi^2)^t on the supergrid,
/// with the unitary transform convention so that t = 0 is the discrete L^2 norm.
inline double sobolev_norm(const GridFunction& g, double t) {
    if (t < -1.0 || t > 1.0) throw DomainError("sobolev order must lie in [-1, 1]");
    const auto& spec = g.spec();
    PeriodicTransform tr(spec.n_super, spec.h);
    const Spectrum G = tr.forward(g.values());
    double acc = 0.0;
    for (std::size_t k = 0; k < G.size(); ++k) {
        const double xi = tr.wavenumber(k);
        acc += std::pow(1.0 + xi * xi, t) * std::norm(G[k]);
    }
    const double value = std::sqrt(acc * spec.h / static_cast<double>(spec.n_super));
    if (!std::isfinite(value)) throw DomainError("sobolev norm overflowed");
    return value;
}

/// First column of the Gram matrix of the discrete H^t norm:
/// sobolev_norm(g, t)^2 = sum_ij g_i G(|i-j|) g_j.
inline std::vector<double> sobolev_gram_column(const GridSpec& spec, double t) {
    PeriodicTransform tr(spec.n_super, spec.h);
    Spectrum m(spec.n_super);
    for (std::size_t k = 0; k < m.size(); ++k) {
        const double xi = tr.wavenumber(k);
        m[k] = std::pow(1.0 + xi * xi, t);
    }
    std::vector<double> col = tr.inverse(m);
    for (double& c : col) c *= spec.h;
    return col;
}

/// Zero-extension surrogate for the H^{-s}(W) norm; an upper bound for the
/// quotient norm.
inline double dual_norm_on_window(const GridFunction& g, const Geometry& geom) {
    const IndexRange w = g.spec().nodes_in(geom.w);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i] != 0.0 && !w.contains(i)) throw SupportError("dual norm argument is nonzero outside w");
    return sobolev_norm(g, -geom.s);
}

/// ||f||_{H^s} / ||f||_{L^2}; the data oscillation quantity F.
inline double oscillation_ratio(const GridFunction& f, double s) {
    if (f.is_zero()) throw ZeroDataError("exterior data f vanishes identically");
    return sobolev_norm(f, s) / sobolev_norm(f, 0.0);
}

/// max over node pairs in `nodes` of |q(x) - q(y)| / |x - y|^alpha.
inline double holder_seminorm(const GridFunction& q, const IndexRange& nodes, double alpha) {
    const auto& spec = q.spec();
    double best = 0.0;
    for (std::size_t i = nodes.first; i < nodes.last; ++i)
        for (std::size_t j = i + 1; j < nodes.last; ++j) {
            const double dq = std::abs(q[i] - q[j]);
            if (dq == 0.0) continue;
            best = std::max(best, dq / std::pow(static_cast<double>(j - i) * spec.h, alpha));
        }
    return best;
}

/// Full C^{0,s}(Omega) norm: Holder seminorm over Omega node pairs plus sup |q|.
inline double holder_norm(const GridFunction& q, const Geometry& geom) {
    const IndexRange om = q.spec().nodes_in(geom.omega);
    double sup = 0.0;
    for (std::size_t i = om.first; i < om.last; ++i) sup = std::max(sup, std::abs(q[i]));
    return holder_seminorm(q, om, geom.s) + sup;
}

/// Potential q supported in Omega' with a priori bounds
/// ||q||_{C^{0,s}} <= holder_bound and sup |q| <= sup_bound.
struct Potential {
    GridFunction values;
    double holder_bound = 0.0;
    double sup_bound = 0.0;
};

/// Validates the a priori bounds; a negative bound means "use the measured value".
inline Potential make_potential(const Geometry& geom, GridFunction values, double holder_bound = -1.0,
                                double sup_bound = -1.0) {
    if (values.support() != SupportTag::omega_prime)
        throw SupportError("potential must be tagged with support omega_prime");
    const double h_meas = holder_norm(values, geom);
    const double m_meas = values.sup_norm();
    if (holder_bound < 0.0) holder_bound = h_meas;
    if (sup_bound < 0.0) sup_bound = m_meas;
    const double tol = 1e-12 * std::max(1.0, holder_bound);
    if (h_meas > holder_bound + tol) throw DomainError("potential exceeds its Holder bound");
    if (m_meas > sup_bound + 1e-12 * std::max(1.0, sup_bound)) throw DomainError("potential exceeds its sup bound");
    return {std::move(values), holder_bound, sup_bound};
}

inline Potential zero_potential(const Geometry& geom, const GridSpec& spec) {
    return {GridFunction::zeros(geom, spec, SupportTag::omega_prime), 0.0, 0.0};
}

inline Potential bump_potential(const Geometry& geom, const GridSpec& spec, const Bump& bump) {
    return make_potential(geom, GridFunction::sample(geom, spec, SupportTag::omega_prime, bump));
}

}  // namespace fraclab
