#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fraclab/errors.hpp"
#include "fraclab/fractional_operator.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/norms.hpp"

namespace fraclab {

namespace detail {

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline Eigen::VectorXd restrict(const GridFunction& g, const IndexRange& r) { return to_eigen(g.slice(r)); }

// Standard normal deviates from a 64-bit Mersenne twister (Box-Muller), so that
// streams are identical across standard library implementations.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        constexpr double scale = 1.0 / 18446744073709551616.0;  // 2^-64
        double u1 = 0.0;
        while (u1 == 0.0) u1 = static_cast<double>(engine_()) * scale;
        const double u2 = static_cast<double>(engine_()) * scale;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(th);
        has_spare_ = true;
        return r * std::cos(th);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace detail

inline constexpr double kDefaultGapTolerance = 1e-8;

/// Smallest over largest singular value of D_{Omega Omega} + diag(q).
inline double eigen_gap(const Potential& q, const FracLapDense& op) {
    const IndexRange om = op.grid().nodes_in(op.geometry().omega);
    Eigen::MatrixXd k = op.block(om, om);
    k.diagonal() += detail::restrict(q.values, om);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
    return ev.minCoeff() / ev.maxCoeff();
}

struct ForwardSolution {
    GridFunction u;  // support omega_and_w
    Potential q;
    GridFunction f;
    double residual = 0.0;        // relative to ||D_{Omega W} f||
    double eigen_gap = 0.0;
    double apriori_ratio = 0.0;   // ||u|_Omega||_{H^s} / ||f||_{H^s}
};

/// Solves ((-Delta)^s + q) u = 0 in Omega, u = f outside Omega, in the
/// hat-function Galerkin form with lumped potential mass.
inline ForwardSolution solve_forward(const Potential& q, const GridFunction& f, const Geometry& geom,
                                     const FracLapDense& op, double gap_tol = kDefaultGapTolerance) {
    const auto& spec = op.grid();
    const IndexRange om = spec.nodes_in(geom.omega);
    const IndexRange w = spec.nodes_in(geom.w);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != 0.0 && !w.contains(i)) throw SupportError("exterior data must be supported in w");

    const double gap = eigen_gap(q, op);
    if (!(gap > gap_tol))
        throw EigenvalueError("zero is (numerically) a Dirichlet eigenvalue: gap " + std::to_string(gap));

    Eigen::MatrixXd k = op.block(om, om);
    k.diagonal() += detail::restrict(q.values, om);
    const Eigen::VectorXd coupling = op.block(om, w) * detail::restrict(f, w);
    const Eigen::VectorXd rhs = -coupling;

    Eigen::VectorXd u_om = Eigen::VectorXd::Zero(rhs.size());
    double residual = 0.0;
    if (rhs.norm() > 0.0) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
        u_om = lu.solve(rhs);
        if (!u_om.allFinite()) throw SingularSolveError("factorization produced non-finite values");
        residual = (k * u_om - rhs).norm() / coupling.norm();
    }

    std::vector<double> uv(spec.n_super, 0.0);
    for (std::size_t i = 0; i < om.size(); ++i) uv[om.first + i] = u_om(static_cast<Eigen::Index>(i));
    for (std::size_t i = w.first; i < w.last; ++i) uv[i] = f[i];
    GridFunction u(geom, spec, SupportTag::omega_and_w, std::move(uv));

    ForwardSolution sol{u, q, f, residual, gap, 0.0};
    if (!f.is_zero()) {
        std::vector<double> inner(spec.n_super, 0.0);
        for (std::size_t i = om.first; i < om.last; ++i) inner[i] = u[i];
        sol.apriori_ratio = sobolev_norm(GridFunction(geom, spec, SupportTag::omega, std::move(inner)), geom.s) /
                            sobolev_norm(f, geom.s);
    }
    return sol;
}

/// Lambda_q f on W, possibly perturbed.
struct Measurement {
    GridFunction lambda_f;     // support w
    double noise_level = 0.0;  // epsilon, relative in the dual norm
    std::uint64_t seed = 0;
    double noise_l2 = 0.0;     // ||perturbation||_{L^2(W)}
};

/// (-Delta)^s u restricted to W nodes (lumped-mass values).
inline Measurement dtn_map(const ForwardSolution& sol, const FracLapDense& op) {
    const auto& geom = op.geometry();
    const auto& spec = op.grid();
    const IndexRange om = spec.nodes_in(geom.omega);
    const IndexRange w = spec.nodes_in(geom.w);
    const Eigen::VectorXd lam =
        op.block(w, om) * detail::restrict(sol.u, om) + op.block(w, w) * detail::restrict(sol.f, w);
    std::vector<double> v(spec.n_super, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) v[w.first + i] = lam(static_cast<Eigen::Index>(i));
    return {GridFunction(geom, spec, SupportTag::w, std::move(v)), 0.0, 0, 0.0};
}

/// Adds a Gaussian perturbation on the W nodes, rescaled so that its dual norm
/// equals epsilon times the dual norm of the clean measurement.
inline Measurement add_noise(const Measurement& m, const Geometry& geom, double epsilon, std::uint64_t seed) {
    if (epsilon < 0.0) throw DomainError("noise level must be nonnegative");
    Measurement out = m;
    out.noise_level = epsilon;
    out.seed = seed;
    if (epsilon == 0.0) return out;

    const auto& spec = m.lambda_f.spec();
    const IndexRange w = spec.nodes_in(geom.w);
    detail::NormalStream rng(seed);
    std::vector<double> e(spec.n_super, 0.0);
    for (std::size_t i = w.first; i < w.last; ++i) e[i] = rng.next();
    const GridFunction pert(geom, spec, SupportTag::w, e);
    const double scale = epsilon * dual_norm_on_window(m.lambda_f, geom) / dual_norm_on_window(pert, geom);

    std::vector<double> v(m.lambda_f.values().begin(), m.lambda_f.values().end());
    double l2 = 0.0;
    for (std::size_t i = w.first; i < w.last; ++i) {
        v[i] += scale * e[i];
        l2 += scale * e[i] * scale * e[i];
    }
    out.lambda_f = GridFunction(geom, spec, SupportTag::w, std::move(v));
    out.noise_l2 = std::sqrt(l2 * spec.h);
    return out;
}

}  // namespace fraclab
