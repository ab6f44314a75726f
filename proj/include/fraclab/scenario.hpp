#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fraclab/errors.hpp"
#include "fraclab/grid.hpp"
#include "fraclab/io.hpp"

namespace fraclab {

struct ScanConfig {
    double x0 = 0.0;
    double bulk_r_min = 0.01, bulk_r_max = 0.1;
    double boundary_r_min = 0.01, boundary_r_max = 0.2;
    std::size_t count = 12;
    std::size_t refine = 16;
    double caccioppoli_r = 0.2;
    double persistence_h = 0.1;
    double annulus_R = 4.0;
    double three_balls_y0 = 0.5;
    double three_balls_r = 0.1;
    double boundary_bulk_r = 0.2;
    double carleman_r_min = 1e-8, carleman_r_max = 1.0;
    std::size_t carleman_points = 256;
};

struct CertConfig {
    bool given = false;
    double E = 1.0, alpha = 0.5, beta = 0.5, C_low = 1.0, C_stab = 1.0, mu = 1.0, E_tilde = 1.0, epsilon = 0.1,
           r0 = 0.5;
};

/// Scenario file: `key = value` lines, `#` comments; unknown keys are rejected.
struct ScenarioConfig {
    GeometryConfig geometry;
    Bump f{2.5, 0.5, 1.0, 3.0};
    Bump q1{0.0, 0.75, 0.5, 3.0};
    Bump q2{0.0, 0.5, 0.1, 3.0};  // q2 = q1 + this bump
    double epsilon = 1e-6;
    std::size_t realizations = 4;
    double theta = 1e-3;
    double lambda = -1.0;  // negative: discrepancy rule
    double ext_height = 4.0;
    std::size_t ext_heights = 200;
    ScanConfig scan;
    std::string sweep_mode = "noise";
    std::vector<double> sweep_values{1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    CertConfig cert;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    /// Canonical text of the effective configuration (hashed into artifact headers).
    std::string canonical;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not a number");
    }
    if (trim(v.substr(pos)) != "") throw ConfigError("key '" + key + "': trailing characters in '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (!(d >= 0.0) || d != std::floor(d) || d > 1.8e19) throw ConfigError("key '" + key + "' needs a nonnegative integer");
    return static_cast<std::uint64_t>(d);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
}

inline Interval parse_interval(const std::string& key, const std::string& v) {
    const auto xs = parse_list(key, v);
    if (xs.size() != 2) throw ConfigError("key '" + key + "' needs two numbers 'a, b'");
    return {xs[0], xs[1]};
}

}  // namespace detail

/// Applies one key. Throws ConfigError for unknown keys or malformed values.
inline void set_config_value(ScenarioConfig& c, const std::string& key, const std::string& value) {
    using namespace detail;
    auto num = [&] { return parse_double(key, value); };
    auto bump_field = [&](Bump& b, const std::string& field) {
        if (field == "center") b.center = num();
        else if (field == "width") b.width = num();
        else if (field == "amplitude") b.amplitude = num();
        else if (field == "smoothness") b.smoothness = num();
        else throw ConfigError("unknown key '" + key + "'");
    };
    const auto dot = key.find('.');
    const std::string head = key.substr(0, dot);
    const std::string tail = dot == std::string::npos ? "" : key.substr(dot + 1);

    if (key == "geometry.omega") c.geometry.omega = parse_interval(key, value);
    else if (key == "geometry.w") c.geometry.w = parse_interval(key, value);
    else if (key == "geometry.omega_prime") c.geometry.omega_prime = parse_interval(key, value);
    else if (key == "geometry.s") c.geometry.s = num();
    else if (key == "grid.L") c.geometry.box_halfwidth = num();
    else if (key == "grid.n_super") c.geometry.n_super = parse_uint(key, value);
    else if (head == "f" && !tail.empty()) bump_field(c.f, tail);
    else if (head == "q1" && !tail.empty()) bump_field(c.q1, tail);
    else if (head == "q2" && !tail.empty()) bump_field(c.q2, tail);
    else if (key == "noise.epsilon") c.epsilon = num();
    else if (key == "noise.realizations") c.realizations = parse_uint(key, value);
    else if (key == "recon.threshold") c.theta = num();
    else if (key == "recon.lambda") c.lambda = num();
    else if (key == "extension.height") c.ext_height = num();
    else if (key == "extension.heights") c.ext_heights = parse_uint(key, value);
    else if (key == "scan.x0") c.scan.x0 = num();
    else if (key == "scan.bulk_r_min") c.scan.bulk_r_min = num();
    else if (key == "scan.bulk_r_max") c.scan.bulk_r_max = num();
    else if (key == "scan.boundary_r_min") c.scan.boundary_r_min = num();
    else if (key == "scan.boundary_r_max") c.scan.boundary_r_max = num();
    else if (key == "scan.count") c.scan.count = parse_uint(key, value);
    else if (key == "scan.refine") c.scan.refine = parse_uint(key, value);
    else if (key == "scan.caccioppoli_r") c.scan.caccioppoli_r = num();
    else if (key == "scan.persistence_h") c.scan.persistence_h = num();
    else if (key == "scan.annulus_R") c.scan.annulus_R = num();
    else if (key == "scan.three_balls_y0") c.scan.three_balls_y0 = num();
    else if (key == "scan.three_balls_r") c.scan.three_balls_r = num();
    else if (key == "scan.boundary_bulk_r") c.scan.boundary_bulk_r = num();
    else if (key == "scan.carleman_r_min") c.scan.carleman_r_min = num();
    else if (key == "scan.carleman_r_max") c.scan.carleman_r_max = num();
    else if (key == "scan.carleman_points") c.scan.carleman_points = parse_uint(key, value);
    else if (key == "sweep.mode") {
        if (value != "noise" && value != "potential") throw ConfigError("sweep.mode must be 'noise' or 'potential'");
        c.sweep_mode = value;
    } else if (key == "sweep.values") c.sweep_values = parse_list(key, value);
    else if (head == "cert" && !tail.empty()) {
        c.cert.given = true;
        double* slot = tail == "E" ? &c.cert.E
                       : tail == "alpha" ? &c.cert.alpha
                       : tail == "beta" ? &c.cert.beta
                       : tail == "C_low" ? &c.cert.C_low
                       : tail == "C_stab" ? &c.cert.C_stab
                       : tail == "mu" ? &c.cert.mu
                       : tail == "E_tilde" ? &c.cert.E_tilde
                       : tail == "epsilon" ? &c.cert.epsilon
                       : tail == "r0" ? &c.cert.r0
                                      : nullptr;
        if (!slot) throw ConfigError("unknown key '" + key + "'");
        *slot = num();
    } else if (key == "output.dir") c.output_dir = value;
    else if (key == "seed") c.seed = parse_uint(key, value);
    else throw ConfigError("unknown key '" + key + "'");
}

/// Checks that do not need the grid.
inline void validate_config(const ScenarioConfig& c) {
    if (c.sweep_values.empty()) throw ConfigError("sweep.values is empty");
    if (c.scan.count < 2) throw ConfigError("scan.count must be at least 2");
    if (c.scan.refine < 1) throw ConfigError("scan.refine must be at least 1");
    if (c.realizations < 1) throw ConfigError("noise.realizations must be at least 1");
    if (!(c.epsilon >= 0.0)) throw ConfigError("noise.epsilon must be nonnegative");
    if (!(c.theta > 0.0 && c.theta < 1.0)) throw ConfigError("recon.threshold must lie in (0, 1)");
    if (!(c.ext_height > 0.0) || c.ext_heights < 3) throw ConfigError("extension grid needs height > 0 and >= 3 levels");
    for (const Bump* b : {&c.f, &c.q1, &c.q2})
        if (!(b->width > 0.0) || !(b->smoothness > 0.0)) throw ConfigError("bump width and smoothness must be positive");
}

/// Parses a scenario text; `overrides` are applied after the file (e.g. from command-line flags).
inline ScenarioConfig parse_config(const std::string& text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    ScenarioConfig c;
    std::map<std::string, std::string> effective;
    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        set_config_value(c, key, value);
        effective[key] = value;
    }
    for (const auto& [k, v] : overrides) {
        set_config_value(c, k, v);
        effective[k] = v;
    }
    validate_config(c);
    // The output location does not influence results, so it is not hashed.
    for (const auto& [k, v] : effective)
        if (k != "output.dir") c.canonical += k + "=" + v + "\n";
    return c;
}

inline ScenarioConfig load_config(const std::string& path,
                                  const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides);
}

inline std::string config_hash(const ScenarioConfig& c) { return hex64(fnv1a(c.canonical)); }

}  // namespace fraclab
