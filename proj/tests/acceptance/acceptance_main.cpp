// Acceptance run: one PASS/FAIL line per criterion. Pass --write-golden to
// refreeze the doubling envelope under tests/golden/v1.
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <unsupported/Eigen/FFT>

#include "fraclab/fraclab.hpp"

using namespace fraclab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string show(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioConfig s1_config() { return load_config(std::string(FRACLAB_SCENARIO_DIR) + "/s1.cfg"); }

struct S1 {
    ScenarioConfig cfg = s1_config();
    Problem problem;
    GridFunction f;
    Potential q1, q2;
    FracLapDense op;

    explicit S1(double s = 0.5)
        : problem(build_geometry(with_order(cfg.geometry, s))),
          f(GridFunction::sample(geom(), grid(), SupportTag::w, cfg.f)),
          q1(bump_potential(geom(), grid(), cfg.q1)),
          q2(make_potential(geom(), combine(geom(), 1.0, q1.values, 1.0,
                                            GridFunction::sample(geom(), grid(), SupportTag::omega_prime, cfg.q2),
                                            SupportTag::omega_prime))),
          op(assemble_dense(geom(), grid())) {}

    static GeometryConfig with_order(GeometryConfig g, double s) {
        g.s = s;
        return g;
    }
    const Geometry& geom() const { return problem.geometry; }
    const GridSpec& grid() const { return problem.grid; }
};

// Oracles built from Boost only.
double getoor_oracle(double s) {
    using boost::math::tgamma;
    return std::pow(2.0, 2.0 * s) * tgamma(1.0 + s) * tgamma(0.5 + s) / tgamma(0.5);
}

double c1s_oracle(double s) {
    using boost::math::tgamma;
    return std::pow(4.0, s) * tgamma(0.5 + s) / (std::sqrt(std::numbers::pi) * std::abs(tgamma(-s)));
}

// Hypersingular integral of (1 - x^2)_+^s at x; see the unit test for the same construction.
double hypersingular(double s, double x) {
    auto u = [s](double y) { return std::abs(y) < 1.0 ? std::pow(1.0 - y * y, s) : 0.0; };
    const double gx = 1.0 - x * x;
    auto second_difference = [&](double t) {
        const double dp = (2.0 * x * t + t * t) / gx, dm = (-2.0 * x * t + t * t) / gx;
        const double m = 0.5 * s * std::log1p((-2.0 * t * t + (t * t * t * t - 4.0 * x * x * t * t) / gx) / gx);
        const double hh = 0.5 * s * std::log1p((dm - dp) / (1.0 - dm));
        const double sh = std::sinh(0.5 * hh);
        return -2.0 * u(x) * (std::expm1(m) * std::cosh(hh) + 2.0 * sh * sh);
    };
    const double t0 = 1e-8, k0 = second_difference(t0) / (t0 * t0);
    auto inner = [&](double t) {
        if (t < t0) return k0 * std::pow(t, 1.0 - 2.0 * s);
        return second_difference(t) * std::pow(t, -1.0 - 2.0 * s);
    };
    auto outer = [&](double t) { return (2.0 * u(x) - u(x + t) - u(x - t)) * std::pow(t, -1.0 - 2.0 * s); };
    boost::math::quadrature::tanh_sinh<double> ts;
    const double a = 1.0 - std::abs(x), b = 1.0 + std::abs(x);
    double acc = ts.integrate(inner, 0.0, 0.5 * a) + ts.integrate(outer, 0.5 * a, a) + ts.integrate(outer, a, b);
    acc += 2.0 * u(x) * std::pow(b, -2.0 * s) / (2.0 * s);
    return c1s_oracle(s) * acc;
}

Outcome getoor() {
    Outcome o{true, ""};
    double apply_secs = 0.0;
    for (double s : {0.25, 0.5, 0.75}) {
        const S1 sc(s);
        const auto u = GridFunction::sample(sc.geom(), sc.grid(), SupportTag::omega,
                                            [s](double x) { return std::pow(std::max(0.0, 1.0 - x * x), s); });
        const auto t0 = std::chrono::steady_clock::now();
        const GridFunction v = apply_spectral(u, sc.geom());
        apply_secs += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double ref = getoor_oracle(s);
        // deviation at the oracle points; the oracle itself must reproduce the constant
        double dev = 0.0, oracle_dev = 0.0;
        for (double x : {-0.8, -0.4, 0.0, 0.3, 0.7}) {
            const double h = hypersingular(s, x);
            oracle_dev = std::max(oracle_dev, std::abs(h - ref) / ref);
            dev = std::max(dev, std::abs(v[sc.grid().nearest(x)] - h) / ref);
        }
        // every open-interior node, for information: the edge layer dominates here
        const IndexRange om = sc.grid().nodes_in(sc.geom().omega);
        double all = 0.0;
        for (std::size_t i = om.first; i < om.last; ++i)
            if (std::abs(sc.grid().x(i)) < 1.0 - 1e-12) all = std::max(all, std::abs(v[i] - ref) / ref);
        o.pass = o.pass && dev < 0.01 && oracle_dev < 1e-8;
        o.detail += "s=" + show(s) + " max_dev=" + show(dev) + " oracle_dev=" + show(oracle_dev) +
                    " all_nodes=" + show(all) + " ";
    }
    // the budget covers the operator, not the oracle quadrature
    o.pass = o.pass && apply_secs < 1.0;
    o.detail += "apply_time=" + show(apply_secs);
    return o;
}

Outcome backends() {
    const S1 sc;
    std::mt19937_64 rng(sc.cfg.seed);
    std::uniform_real_distribution<double> c(-1.5, 2.5), w(0.6, 1.5), a(-2.0, 2.0);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const auto u = GridFunction::sample(sc.geom(), sc.grid(), SupportTag::whole_box, Bump{c(rng), w(rng), a(rng), 3.0});
        worst = std::max(worst, cross_validate(u, sc.op, 1e-3).discrepancy);
    }
    return {worst < 1e-3, "max_discrepancy=" + show(worst)};
}

Outcome extension() {
    const S1 sc;
    const ForwardSolution sol = solve_forward(sc.q1, sc.f, sc.geom(), sc.op);
    const GridFunction& u = sol.u;

    // independent Poisson column e^{-|xi| y}
    const std::vector<double> ys{1e-4, 0.01, 0.3, 2.0};
    const auto field = extend(u, sc.geom(), ys);
    const std::size_t n = u.size();
    Eigen::FFT<double> fft;
    std::vector<double> in(u.values().begin(), u.values().end());
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, in);
    double poisson = 0.0;
    for (std::size_t j = 0; j < ys.size(); ++j) {
        std::vector<std::complex<double>> sj(spec);
        for (std::size_t k = 0; k < n; ++k) {
            const double kk = k <= n / 2 ? double(k) : double(k) - double(n);
            sj[k] *= std::exp(-std::abs(2.0 * std::numbers::pi * kk / (double(n) * sc.grid().h)) * ys[j]);
        }
        std::vector<double> col;
        fft.inv(col, sj);
        for (std::size_t i = 0; i < n; ++i)
            poisson = std::max(poisson, std::abs(field.values(Eigen::Index(i), Eigen::Index(j)) - col[i]));
    }

    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace = std::max(trace, std::abs(field.values(Eigen::Index(i), 0) - u[i]));
    trace /= u.sup_norm();

    const auto tall = extend(u, sc.geom(), graded_heights(0.5, 4.0, 200));
    const GridFunction fd = neumann_trace_fd(tall);
    const GridFunction sp = apply_spectral(u, sc.geom());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (fd[i] - sp[i]) * (fd[i] - sp[i]);
        den += sp[i] * sp[i];
    }
    const double neumann = std::sqrt(num / den);
    return {poisson < 1e-10 && trace < 1e-3 && neumann < 1e-2,
            "poisson=" + show(poisson) + " trace=" + show(trace) + " neumann=" + show(neumann)};
}

Outcome carleman() {
    const GapRange g = carleman_gap_check(1e-8, 1.0, 400);
    const bool zero = carleman_weight(1.0) == 0.0;
    return {zero && g.min >= 1.25 && g.max <= 1.65,
            "psi(1)=" + show(carleman_weight(1.0)) + " gap=[" + show(g.min) + ", " + show(g.max) + "]"};
}

Outcome forward() {
    const S1 sc;
    const IndexRange w = sc.grid().nodes_in(sc.geom().w);
    std::mt19937_64 rng(sc.cfg.seed + 1);
    std::uniform_real_distribution<double> c(2.2, 2.8), wd(0.1, 0.2), amp(-1.0, 1.0), qa(-0.5, 0.5), qc(-0.3, 0.3);
    double residual = 0.0, recip = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto q = bump_potential(sc.geom(), sc.grid(), Bump{qc(rng), 0.4, qa(rng), 3.0});
        const auto f1 = GridFunction::sample(sc.geom(), sc.grid(), SupportTag::w, Bump{c(rng), wd(rng), amp(rng), 3.0});
        const auto f2 = GridFunction::sample(sc.geom(), sc.grid(), SupportTag::w, Bump{c(rng), wd(rng), amp(rng), 3.0});
        const auto s1 = solve_forward(q, f1, sc.geom(), sc.op);
        const auto s2 = solve_forward(q, f2, sc.geom(), sc.op);
        residual = std::max({residual, s1.residual, s2.residual});
        const auto m1 = dtn_map(s1, sc.op), m2 = dtn_map(s2, sc.op);
        double a = 0.0, b = 0.0;
        for (std::size_t i = w.first; i < w.last; ++i) {
            a += m1.lambda_f[i] * f2[i];
            b += m2.lambda_f[i] * f1[i];
        }
        recip = std::max(recip, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
    }
    const auto z = GridFunction::zeros(sc.geom(), sc.grid(), SupportTag::w);
    const bool zero = solve_forward(sc.q1, z, sc.geom(), sc.op).u.is_zero();
    return {residual < 1e-8 && recip < 1e-9 && zero,
            "residual=" + show(residual) + " reciprocity=" + show(recip) + " zero_data=" + (zero ? "ok" : "bad")};
}

// Doubling ratios for S1 and 10 random potentials with shared (E, M).
struct DoublingRow {
    std::string label;
    double radius;
    double ratio;
};

const double kEnvelope = 0.05;

std::vector<DoublingRow> doubling_rows(bool& ok, std::string& detail) {
    const S1 sc;
    const ScanConfig& scan = sc.cfg.scan;
    const auto bulk_r = log_spaced(scan.bulk_r_min, scan.bulk_r_max, scan.count);
    const auto bnd_r = log_spaced(scan.boundary_r_min, scan.boundary_r_max, scan.count);
    const auto heights = graded_heights(sc.geom().s, 0.75, 300);
    std::vector<DoublingRow> rows;
    double worst_res = 0.0, worst_self = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10; ++k) {
        const Potential q = k == 0 ? sc.q1 : random_potential(sc.geom(), sc.grid(), 2.0, 0.5, std::uint64_t(k));
        const auto sol = solve_forward(q, sc.f, sc.geom(), sc.op);
        const auto field = extend(sol.u, sc.geom(), heights, ExtensionWindow{{scan.x0 - 0.5, scan.x0 + 0.5}, scan.refine});
        const std::string name = k == 0 ? "s1" : "random" + std::to_string(k);
        const DoublingReport bulk = doubling_scan_bulk(field, scan.x0, bulk_r);
        const DoublingReport bnd = doubling_scan_boundary(sol.u, sc.geom(), scan.x0, bnd_r);
        for (const DoublingReport* rep : {&bulk, &bnd}) {
            const std::string mode = rep == &bulk ? "bulk" : "boundary";
            for (std::size_t i = 0; i < rep->radii.size(); ++i) {
                rows.push_back({name + "," + mode, rep->radii[i], rep->ratios[i]});
                ok = ok && rep->ratios[i] >= 1.0 && std::isfinite(rep->ratios[i]);
            }
            ok = ok && std::isfinite(rep->beta) && rep->fit_residual < 0.1;
            worst_res = std::max(worst_res, rep->fit_residual);
        }
        for (std::size_t i = 0; i < bnd.radii.size(); ++i)
            worst_self = std::min(worst_self, bnd.masses[i] / (bnd.prefactor * std::pow(bnd.radii[i], bnd.beta)));
    }
    ok = ok && worst_self >= 0.5;
    detail = "max_fit_residual=" + show(worst_res) + " min_self_consistency=" + show(worst_self);
    return rows;
}

fs::path golden_path() { return fs::path(FRACLAB_GOLDEN_DIR) / "doubling_envelope.csv"; }

void write_golden(const std::vector<DoublingRow>& rows) {
    fs::create_directories(golden_path().parent_path());
    std::ofstream out(golden_path());
    out << "# doubling ratio envelope, +-" << kEnvelope * 100 << "% around the frozen ratio\n";
    out << "case,mode,radius,ratio_lo,ratio_hi\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.label << "," << r.radius << "," << r.ratio * (1.0 - kEnvelope) << "," << r.ratio * (1.0 + kEnvelope) << "\n";
}

Outcome doubling(bool freeze) {
    bool ok = true;
    std::string detail;
    const auto rows = doubling_rows(ok, detail);
    if (freeze) write_golden(rows);
    std::ifstream in(golden_path());
    if (!in) return {false, detail + " golden file missing"};
    std::string line;
    std::size_t idx = 0, outside = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("case,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string c, m, r, lo, hi;
        std::getline(ss, c, ',');
        std::getline(ss, m, ',');
        std::getline(ss, r, ',');
        std::getline(ss, lo, ',');
        std::getline(ss, hi, ',');
        if (idx >= rows.size() || rows[idx].label != c + "," + m) return {false, detail + " golden layout mismatch"};
        const double v = rows[idx].ratio;
        if (v < std::stod(lo) || v > std::stod(hi)) ++outside;
        ++idx;
    }
    if (idx != rows.size()) return {false, detail + " golden row count mismatch"};
    return {ok && outside == 0, detail + " outside_envelope=" + std::to_string(outside) + "/" + std::to_string(rows.size())};
}

Outcome round_trip() {
    const S1 sc;
    const ForwardData d = run_forward(sc.q1, sc.f, sc.op);
    ReconstructionResult res;
    res.u_rec = d.solution.u;
    recover_q(res, sc.op, sc.cfg.theta, 10.0 * sc.q1.holder_bound, &sc.q1);
    const IndexRange omp = sc.grid().nodes_in(sc.geom().omega_prime);
    double err = 0.0;
    std::size_t j = 0;
    std::vector<std::size_t> excluded = res.excluded;
    std::sort(excluded.begin(), excluded.end());
    for (std::size_t i = omp.first; i < omp.last; ++i) {
        while (j < excluded.size() && excluded[j] < i) ++j;
        if (j < excluded.size() && excluded[j] == i) continue;
        err = std::max(err, std::abs((*res.q_rec)[i] - sc.q1.values[i]));
    }
    err /= sc.q1.values.sup_norm();
    return {err < 0.05, "sup_rel=" + show(err) + " excluded=" + std::to_string(res.excluded.size())};
}

Outcome noise_sweep() {
    const S1 sc;
    NoiseSweepOptions opt;
    opt.theta = sc.cfg.theta;
    opt.seed = sc.cfg.seed;
    opt.realizations = sc.cfg.realizations;
    const StabilityCurve c = stability_noise_sweep(sc.q2, sc.f, sc.op, sc.cfg.sweep_values, opt);
    // points are sorted by increasing epsilon; error must not grow as epsilon drops
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i)
        monotone = monotone && c.points[i].error <= 1.1 * c.points[i + 1].error;
    std::string detail = "monotone=" + std::string(monotone ? "yes" : "no") + " gamma=" + show(c.fit.gamma) +
                         " residual=" + show(c.fit.residual) + " p=" + show(c.power_exponent) + " errors=";
    for (const auto& p : c.points) detail += show(p.error) + (p.flagged ? "*" : "") + ";";
    return {monotone && c.fit.valid && c.fit.gamma > 0.0 && c.fit.residual < 0.2 && c.power_exponent < 0.2, detail};
}

Outcome certificate() {
    CertificateInputs in;
    in.E = in.C_low = in.C_stab = in.E_tilde = in.mu = 1.0;
    in.alpha = in.beta = 0.5;
    in.epsilon = std::exp(-10.0);
    in.r0 = 0.5;
    const auto c = certify_bound(in);
    const double dr = std::abs(c.r_opt - 0.1), db = std::abs(c.bound - std::sqrt(0.2));
    const S1 sc;
    EndToEndOptions opt;
    opt.epsilon = sc.cfg.epsilon;
    opt.theta = sc.cfg.theta;
    opt.seed = sc.cfg.seed;
    opt.realizations = sc.cfg.realizations;
    opt.sweep = sc.cfg.sweep_values;
    const auto rep = end_to_end(sc.q1, sc.q2, sc.f, sc.op, opt);
    return {dr < 1e-10 && db < 1e-10 && rep.dominates && rep.certificate.bound >= rep.actual,
            "r_opt_err=" + show(dr) + " bound_err=" + show(db) + " bound=" + show(rep.certificate.bound) +
                " actual=" + show(rep.actual) + " fudge=" + show(rep.fudge)};
}

int run_cli(const std::string& command, const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cmd = std::string(FRACLAB_CLI) + " " + command + " --config " + FRACLAB_SCENARIO_DIR +
                            "/s1.cfg --out " + (dir / "out").string() + " > /dev/null 2> " + (dir / "err").string();
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "fraclab_acceptance";
    std::string detail;
    bool ok = true;
    for (const char* command : {"forward", "ucp-scan", "stability", "certify"}) {
        const fs::path a = root / (std::string(command) + "_a"), b = root / (std::string(command) + "_b");
        if (run_cli(command, a) != 0 || run_cli(command, b) != 0) {
            ok = false;
            detail += std::string(command) + "=error ";
            continue;
        }
        std::size_t files = 0, same = 0;
        for (const auto& e : fs::recursive_directory_iterator(a / "out")) {
            if (!e.is_regular_file()) continue;
            ++files;
            const fs::path other = b / "out" / fs::relative(e.path(), a / "out");
            if (fs::exists(other) && slurp(e.path()) == slurp(other)) ++same;
        }
        ok = ok && files > 0 && same == files;
        detail += std::string(command) + "=" + std::to_string(same) + "/" + std::to_string(files) + " ";
    }
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    bool freeze = false;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--write-golden") freeze = true;

    struct Criterion {
        int id;
        const char* name;
        double budget;  // seconds; 0 means none
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "getoor identity", 0.0, getoor},
        {2, "backend agreement", 10.0, backends},
        {3, "extension correctness", 0.0, extension},
        {4, "carleman weight", 0.1, carleman},
        {5, "forward well-posedness", 0.0, forward},
        {6, "doubling suite", 60.0, [freeze] { return doubling(freeze); }},
        {7, "round-trip reconstruction", 0.0, round_trip},
        {8, "log-stability noise sweep", 300.0, noise_sweep},
        {9, "certificate algebra", 0.0, certificate},
        {10, "cli determinism", 0.0, determinism},
    };
    int failures = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.budget == 0.0 || secs < c.budget;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << " " << c.id << " " << c.name << " (" << show(secs) << " s"
                  << (in_time ? "" : ", over budget") << ") " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
