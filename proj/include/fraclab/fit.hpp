#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fraclab/errors.hpp"

namespace fraclab {

/// n points log-spaced in [a, b].
inline std::vector<double> log_spaced(double a, double b, std::size_t n) {
    if (!(a > 0.0 && b >= a) || n == 0) throw DomainError("log_spaced needs 0 < a <= b and n >= 1");
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = a;
        return out;
    }
    const double la = std::log(a), lb = std::log(b);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(la + (lb - la) * static_cast<double>(i) / (n - 1));
    out.back() = b;
    return out;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_sup = 0.0;
    double residual_rms = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DegenerateError("line fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw DegenerateError("all abscissae coincide");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.slope * x[i] + fit.intercept);
        fit.residual_sup = std::max(fit.residual_sup, std::abs(r));
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / n);
    return fit;
}

/// err ~ C |log(C t)|^{-gamma}.
struct LogModelFit {
    double gamma = 0.0;
    double C = 0.0;
    double residual = 0.0;  // rms of log residuals
    bool valid = false;
};

inline double log_model(double C, double gamma, double t) {
    return C * std::pow(std::abs(std::log(C * t)), -gamma);
}

/// Fits err = C |log(C t)|^{-gamma} in log space. For fixed C, log err is
/// linear in log|log(C t)| with slope -gamma and known intercept log C, so
/// gamma comes from least squares through that intercept; C is found by a
/// scan plus golden-section refinement over log C subject to C max(t) < 1.
inline LogModelFit fit_log_model(const std::vector<double>& t, const std::vector<double>& err) {
    LogModelFit best;
    std::vector<double> tt, ee;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] > 0.0 && err[i] > 0.0) {
            tt.push_back(t[i]);
            ee.push_back(err[i]);
        }
    if (tt.size() < 2) return best;
    const double tmax = *std::max_element(tt.begin(), tt.end());
    const double lc_hi = -std::log(tmax) - 1e-3;  // C tmax < 1
    const double lc_lo = lc_hi - 40.0;

    auto evaluate = [&](double lc, double& gamma) {
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < tt.size(); ++i) {
            const double x = std::log(std::abs(lc + std::log(tt[i])));
            const double y = std::log(ee[i]) - lc;
            sxx += x * x;
            sxy += x * y;
        }
        gamma = sxx > 0.0 ? -sxy / sxx : 0.0;
        double ss = 0.0;
        for (std::size_t i = 0; i < tt.size(); ++i) {
            const double x = std::log(std::abs(lc + std::log(tt[i])));
            const double r = std::log(ee[i]) - lc + gamma * x;
            ss += r * r;
        }
        return std::sqrt(ss / tt.size());
    };

    double best_lc = lc_lo, best_res = std::numeric_limits<double>::infinity(), g = 0.0;
    constexpr int scan = 400;
    for (int k = 0; k <= scan; ++k) {
        const double lc = lc_lo + (lc_hi - lc_lo) * k / scan;
        const double r = evaluate(lc, g);
        if (r < best_res) {
            best_res = r;
            best_lc = lc;
        }
    }
    const double step = (lc_hi - lc_lo) / scan;
    double a = std::max(lc_lo, best_lc - step), b = std::min(lc_hi, best_lc + step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80; ++it) {
        const double c = b - phi * (b - a), d = a + phi * (b - a);
        if (evaluate(c, g) < evaluate(d, g)) b = d;
        else a = c;
    }
    const double lc = 0.5 * (a + b);
    best.residual = evaluate(lc, best.gamma);
    best.C = std::exp(lc);
    best.valid = std::isfinite(best.gamma) && std::isfinite(best.residual);
    return best;
}

/// err ~ A t^p by least squares on logs; returns p.
inline LineFit fit_power_law(const std::vector<double>& t, const std::vector<double>& err) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] > 0.0 && err[i] > 0.0) {
            x.push_back(std::log(t[i]));
            y.push_back(std::log(err[i]));
        }
    return fit_line(x, y);
}

}  // namespace fraclab
