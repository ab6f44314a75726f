// fraclab: scenario-driven experiments for the fractional Schrodinger inverse problem.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fraclab/fraclab.hpp"

namespace fs = std::filesystem;
using namespace fraclab;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Setup {
    ScenarioConfig cfg;
    Problem problem;
    GridFunction f;
    Potential q1;
    Potential q2;
    GridFunction perturbation;
    std::string hash;
    fs::path out;
};

// Raised while reading the config or building geometry and inputs (exit 2).
struct SetupFailure {
    std::string message;
};

Setup prepare(const std::string& config_path, const std::string& out_dir, long long seed, double resolution) {
    try {
        std::vector<std::pair<std::string, std::string>> overrides;
        if (seed >= 0) overrides.emplace_back("seed", std::to_string(seed));
        if (!out_dir.empty()) overrides.emplace_back("output.dir", out_dir);
        Setup st;
        st.cfg = load_config(config_path, overrides);
        if (resolution != 1.0) {
            const double n = static_cast<double>(st.cfg.geometry.n_super) * resolution;
            const double l2 = std::log2(n);
            if (!(resolution > 0.0) || l2 != std::floor(l2)) throw ConfigError("--resolution must keep n_super a power of two");
            st.cfg.geometry.n_super = static_cast<std::size_t>(n);
            st.cfg.canonical += "resolution=" + fmt(resolution) + "\n";
        }
        st.hash = config_hash(st.cfg);
        st.problem = build_geometry(st.cfg.geometry);
        const Geometry& g = st.problem.geometry;
        const GridSpec& sp = st.problem.grid;
        auto inside = [](const Bump& b, const Interval& iv) {
            return b.amplitude == 0.0 || (b.center - b.width >= iv.lo - 1e-12 && b.center + b.width <= iv.hi + 1e-12);
        };
        if (!inside(st.cfg.f, g.w)) throw SupportError("f bump must be supported in w");
        if (!inside(st.cfg.q1, g.omega_prime) || !inside(st.cfg.q2, g.omega_prime))
            throw SupportError("potential bumps must be supported in omega_prime");
        st.f = GridFunction::sample(g, sp, SupportTag::w, st.cfg.f);
        st.q1 = bump_potential(g, sp, st.cfg.q1);
        st.perturbation = GridFunction::sample(g, sp, SupportTag::omega_prime, st.cfg.q2);
        st.q2 = make_potential(g, combine(g, 1.0, st.q1.values, 1.0, st.perturbation, SupportTag::omega_prime));
        st.out = st.cfg.output_dir;
        fs::create_directories(st.out);
        return st;
    } catch (const Error& e) {
        throw SetupFailure{e.what()};
    } catch (const fs::filesystem_error& e) {
        throw SetupFailure{std::string("IOError: ") + e.what()};
    }
}

std::string path_of(const Setup& st, const char* name) { return (st.out / name).string(); }

std::string params_text(const LemmaCheck& c) {
    std::string s;
    for (const auto& [k, v] : c.parameters) s += (s.empty() ? "" : ";") + k + "=" + fmt(v);
    return s;
}

int cmd_forward(const Setup& st) {
    const Geometry& g = st.problem.geometry;
    const GridSpec& sp = st.problem.grid;
    const FracLapDense op = assemble_dense(g, sp);
    const ForwardSolution sol = solve_forward(st.q1, st.f, g, op);
    const Measurement m = add_noise(dtn_map(sol, op), g, st.cfg.epsilon, st.cfg.seed);

    ArtifactWriter u(path_of(st, "u.csv"), st.hash);
    u.line("x,u");
    for (const auto& r : sol.u.ranges())
        for (std::size_t i = r.first; i < r.last; ++i) u.row({sp.x(i), sol.u[i]});

    ArtifactWriter mw(path_of(st, "measurement.csv"), st.hash);
    mw.comment("s=" + fmt(g.s)).comment("epsilon=" + fmt(m.noise_level)).comment("seed=" + std::to_string(m.seed));
    mw.line("node_x,lambda_value");
    const IndexRange w = sp.nodes_in(g.w);
    for (std::size_t i = w.first; i < w.last; ++i) mw.row({sp.x(i), m.lambda_f[i]});

    ArtifactWriter rep(path_of(st, "apriori_report.txt"), st.hash);
    rep.kv("residual", sol.residual)
        .kv("eigen_gap", sol.eigen_gap)
        .kv("apriori_ratio", sol.apriori_ratio)
        .kv("f_hs_norm", sobolev_norm(st.f, g.s))
        .kv("f_l2_norm", sobolev_norm(st.f, 0.0))
        .kv("oscillation_F", oscillation_ratio(st.f, g.s))
        .kv("lambda_dual_norm", dual_norm_on_window(dtn_map(sol, op).lambda_f, g))
        .kv("q_holder_norm", st.q1.holder_bound)
        .kv("q_sup", st.q1.sup_bound);
    return 0;
}

void write_doubling(const Setup& st, const char* name, const DoublingReport& r) {
    ArtifactWriter w(path_of(st, name), st.hash);
    w.comment(std::string("mode=") + (r.mode == DoublingReport::Mode::bulk ? "bulk" : "boundary"))
        .comment("center=" + fmt(r.center))
        .comment("r0=" + fmt(r.r0))
        .comment("flag=" + (r.flag.empty() ? std::string("none") : r.flag));
    w.line("r,mass,mass_2r,ratio,beta,prefactor,fit_residual");
    for (std::size_t i = 0; i < r.radii.size(); ++i)
        w.row({r.radii[i], r.masses[i], r.double_masses[i], r.ratios[i], r.beta, r.prefactor, r.fit_residual});
}

int cmd_ucp_scan(const Setup& st) {
    const Geometry& g = st.problem.geometry;
    const GridSpec& sp = st.problem.grid;
    const ScanConfig& sc = st.cfg.scan;
    const FracLapDense op = assemble_dense(g, sp);
    const ForwardSolution sol = solve_forward(st.q1, st.f, g, op);

    // Whole-line field for the slab and annulus checks.
    const double top = std::max(st.cfg.ext_height, 2.0 * sc.annulus_R);
    const ExtensionField global = extend(sol.u, g, graded_heights(g.s, top, st.cfg.ext_heights));
    // Refined local field around x0 for the ball checks.
    const double reach = std::max({2.0 * sc.bulk_r_max, 2.0 * sc.caccioppoli_r, 2.0 * sc.boundary_bulk_r,
                                   2.0 * sc.three_balls_r});
    const double local_top = std::max({reach, sc.three_balls_y0 + 2.0 * sc.three_balls_r}) * 1.01;
    const ExtensionField local = extend(sol.u, g, graded_heights(g.s, local_top, st.cfg.ext_heights),
                                        ExtensionWindow{{sc.x0 - 1.05 * reach, sc.x0 + 1.05 * reach}, sc.refine});

    const DoublingReport bulk = doubling_scan_bulk(local, sc.x0, log_spaced(sc.bulk_r_min, sc.bulk_r_max, sc.count));
    const DoublingReport bnd =
        doubling_scan_boundary(sol.u, g, sc.x0, log_spaced(sc.boundary_r_min, sc.boundary_r_max, sc.count));
    write_doubling(st, "doubling_bulk.csv", bulk);
    write_doubling(st, "doubling_boundary.csv", bnd);

    std::vector<LemmaCheck> checks;
    checks.push_back(caccioppoli_check(local, st.q1, sc.x0, sc.caccioppoli_r));
    checks.push_back(persistence_check(global, st.f, sc.persistence_h));
    checks.push_back(annulus_ratio(global, st.f, sc.annulus_R, g.omega.center()));
    checks.push_back(three_balls_exponent(local, sc.x0, sc.three_balls_y0, sc.three_balls_r));
    checks.push_back(boundary_bulk_check(local, sc.x0, sc.boundary_bulk_r, st.q1));
    ArtifactWriter lw(path_of(st, "lemma_checks.csv"), st.hash);
    lw.line("name,lhs,rhs,implied_constant,parameters");
    for (const auto& c : checks)
        lw.line(c.name + "," + fmt(c.lhs) + "," + fmt(c.rhs) + "," + fmt(c.implied_constant) + "," + params_text(c));

    const GapRange gap = carleman_gap_check(sc.carleman_r_min, sc.carleman_r_max, sc.carleman_points);
    ArtifactWriter cw(path_of(st, "carleman.csv"), st.hash);
    cw.comment("gap_min=" + fmt(gap.min)).comment("gap_max=" + fmt(gap.max));
    cw.line("r,psi_r,psi_4r,gap");
    for (double r : log_spaced(sc.carleman_r_min, sc.carleman_r_max, std::max<std::size_t>(sc.carleman_points, 200))) {
        const double a = carleman_weight(r), b = carleman_weight(4.0 * r);
        cw.row({r, a, b, std::abs(a - b)});
    }
    return 0;
}

void write_certificate(const Setup& st, const StabilityCertificate& c, const EndToEndReport* e) {
    ArtifactWriter w(path_of(st, "certificate.txt"), st.hash);
    const auto& in = c.inputs;
    w.kv("E", in.E).kv("alpha", in.alpha).kv("beta", in.beta).kv("C_low", in.C_low).kv("C_stab", in.C_stab);
    w.kv("mu", in.mu).kv("E_tilde", in.E_tilde).kv("epsilon", in.epsilon).kv("r0", in.r0);
    w.kv("r_candidate", c.r_candidate).kv("r_opt", c.r_opt).kv("bound", c.bound);
    if (e) {
        w.kv("actual", e->actual)
            .kv("reconstruction_error", e->reconstruction_error)
            .kv("oscillation_F", e->F)
            .kv("C_stab_fit", e->C_stab_fit)
            .kv("fudge", e->fudge)
            .kv("mu_fit", e->mu_fit)
            .kv("certified_dominates", e->dominates ? "true" : "false");
        if (!e->notice.empty()) w.kv("notice", e->notice);
    }
}

EndToEndOptions e2e_options(const ScenarioConfig& cfg) {
    EndToEndOptions o;
    o.epsilon = cfg.epsilon;
    o.theta = cfg.theta;
    o.seed = cfg.seed;
    o.realizations = cfg.realizations;
    return o;
}

int cmd_stability(const Setup& st) {
    const Geometry& g = st.problem.geometry;
    const FracLapDense op = assemble_dense(g, st.problem.grid);
    StabilityCurve curve;
    if (st.cfg.sweep_mode == "potential") {
        curve = stability_potential_sweep(st.q1, st.perturbation, st.f, op, st.cfg.sweep_values);
    } else {
        NoiseSweepOptions o;
        o.theta = st.cfg.theta;
        o.seed = st.cfg.seed;
        o.realizations = st.cfg.realizations;
        curve = stability_noise_sweep(st.q2, st.f, op, st.cfg.sweep_values, o);
    }
    ArtifactWriter cw(path_of(st, "curve.csv"), st.hash);
    cw.comment("mode=" + st.cfg.sweep_mode);
    cw.line("t,error,model_value,flagged");
    for (const auto& p : curve.points) cw.row({p.t, p.error, p.model, p.flagged ? 1.0 : 0.0});

    ArtifactWriter fw(path_of(st, "fit.txt"), st.hash);
    if (curve.notice.empty()) {
        fw.kv("gamma", curve.fit.gamma).kv("C", curve.fit.C).kv("residual", curve.fit.residual);
        fw.kv("power_exponent", curve.power_exponent);
    } else {
        fw.kv("notice", curve.notice);
    }

    const EndToEndReport rep = end_to_end(st.q1, st.q2, st.f, op, e2e_options(st.cfg));
    write_certificate(st, rep.certificate, &rep);
    return 0;
}

int cmd_certify(const Setup& st) {
    if (st.cfg.cert.given) {
        const CertConfig& c = st.cfg.cert;
        const StabilityCertificate cert =
            certify_bound({c.E, c.alpha, c.beta, c.C_low, c.C_stab, c.mu, c.E_tilde, c.epsilon, c.r0});
        write_certificate(st, cert, nullptr);
        return 0;
    }
    const FracLapDense op = assemble_dense(st.problem.geometry, st.problem.grid);
    const EndToEndReport rep = end_to_end(st.q1, st.q2, st.f, op, e2e_options(st.cfg));
    write_certificate(st, rep.certificate, &rep);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fraclab: fractional Schrodinger inverse problem experiments"};
    app.require_subcommand(1);
    std::string config, out;
    long long seed = -1;
    double resolution = 1.0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "scenario file")->required();
        sub->add_option("--out", out, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "random seed (overrides seed)");
        sub->add_option("--resolution", resolution, "multiplier on grid.n_super");
    };
    CLI::App* forward = app.add_subcommand("forward", "solve the exterior problem and write the measurement");
    CLI::App* ucp = app.add_subcommand("ucp-scan", "doubling scans and lemma checks");
    CLI::App* stability = app.add_subcommand("stability", "stability sweep, fit and certificate");
    CLI::App* certify = app.add_subcommand("certify", "stability certificate");
    for (CLI::App* sub : {forward, ucp, stability, certify}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    Setup st;
    try {
        st = prepare(config, out, seed, resolution);
    } catch (const SetupFailure& e) {
        std::cerr << "fraclab: " << e.message << "\n";
        return kExitConfig;
    }

    try {
        if (forward->parsed()) return cmd_forward(st);
        if (ucp->parsed()) return cmd_ucp_scan(st);
        if (stability->parsed()) return cmd_stability(st);
        return cmd_certify(st);
    } catch (const Error& e) {
        std::cerr << "fraclab: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "fraclab: " << e.what() << "\n";
        return kExitRuntime;
    }
}
