#pragma once

// Linear stability of two uniform layers moving with constant velocities c±.
// Dispersion relation for a mode exp(i(kx - omega t)), s = omega / k:
//   A (s - c+)^2 + B (s - c-)^2 = R,  A = rho+ coth(k H+), B = rho- coth(k H-),
//   R = (g (rho+ - rho-) + sigma k^2) / k.
// Complex roots iff A B [c]^2 > (A + B) R; then Im omega = k sqrt(A B [c]^2 - (A + B) R) / (A + B).

#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "kh/errors.hpp"
#include "kh/stability.hpp"
#include "kh/units.hpp"

namespace kh {

struct ShearConfig {
    double rho_plus = 1025.0;   // kg m^-3, lower (heavier) layer
    double rho_minus = 1.2;     // kg m^-3
    double depth_plus = 1e3;    // m
    double depth_minus = 1e3;   // m
    double c_plus = 0.0;        // m s^-1
    double c_minus = 0.0;       // m s^-1
    double sigma = 0.073;       // N m^-1
    double gravity = 9.81;      // m s^-2
};

inline void validate(const ShearConfig& c) {
    if (!(c.depth_plus > 0.0 && c.depth_minus > 0.0)) throw ConfigError("shear config: depths must be > 0");
    if (!(c.rho_plus >= c.rho_minus && c.rho_minus >= 0.0))
        throw ConfigError("shear config: requires rho+ >= rho- >= 0");
    if (!(c.sigma >= 0.0)) throw ConfigError("shear config: sigma must be >= 0");
    if (!std::isfinite(c.c_plus) || !std::isfinite(c.c_minus)) throw ConfigError("shear config: velocities");
}

inline ShearConfig shear_config(const PhysicalConfig& p, double c_plus = 0.0, double c_minus = 0.0) {
    return {p.rho_plus, p.rho_minus, p.depth_plus, p.depth_minus, c_plus, c_minus, p.surface_tension, p.gravity};
}

namespace detail {

inline double coth(double y) { return y > 20.0 ? 1.0 : 1.0 / std::tanh(y); }

struct DispersionTerms {
    double A, B, R;
};

inline DispersionTerms dispersion_terms(double k, const ShearConfig& c) {
    return {c.rho_plus * coth(k * c.depth_plus), c.rho_minus * coth(k * c.depth_minus),
            (c.gravity * (c.rho_plus - c.rho_minus) + c.sigma * k * k) / k};
}

// A B U^2 - (A + B) R, scaled by 1/(A + B); positive iff mode k is unstable at shear U
inline double instability_excess(double k, double U, const ShearConfig& c) {
    const auto t = dispersion_terms(k, c);
    return (t.A * t.B * U * U) / (t.A + t.B) - t.R;
}

}  // namespace detail

/// Growth rate max Im omega (s^-1); depends on c± only through [c].
inline double mode_growth(double k, const ShearConfig& c) {
    if (!(k > 0.0)) throw ConfigError("mode_growth requires k > 0");
    const auto t = detail::dispersion_terms(k, c);
    const double jc = c.c_plus - c.c_minus;
    const double disc = t.A * t.B * jc * jc - (t.A + t.B) * t.R;
    return disc > 0.0 ? k * std::sqrt(disc) / (t.A + t.B) : 0.0;
}

struct DispersionRoots {
    double re1, re2, im_max;
};

inline DispersionRoots dispersion_roots(double k, const ShearConfig& c) {
    const auto t = detail::dispersion_terms(k, c);
    const double jc = c.c_plus - c.c_minus;
    const double sum = t.A + t.B;
    const double mid = (t.A * c.c_plus + t.B * c.c_minus) / sum;
    const double disc = t.A * t.B * jc * jc - sum * t.R;
    if (disc > 0.0) return {k * mid, k * mid, k * std::sqrt(disc) / sum};
    const double h = std::sqrt(-disc) / sum;
    return {k * (mid - h), k * (mid + h), 0.0};
}

/// Rows k, Re omega_1, Re omega_2, Im omega_max.
inline void write_dispersion_csv(std::ostream& os, const ShearConfig& c, const std::vector<double>& ks) {
    os << "k,re_omega1,re_omega2,im_omega_max\n";
    os.precision(12);
    for (double k : ks) {
        const auto r = dispersion_roots(k, c);
        os << k << ',' << r.re1 << ',' << r.re2 << ',' << r.im_max << '\n';
    }
}

struct KRange {
    double k_min = 1e-3;
    double k_max = 1e5;
    int n_scan = 600;
};

struct CriticalShear {
    double shear = 0.0;  // |[c]| threshold, m s^-1
    double k = 0.0;      // most unstable wavenumber at threshold, rad m^-1
};

namespace detail {

// max_k of the scaled excess on the log scan, refined by golden section on log k
inline std::pair<double, double> max_excess(double U, const ShearConfig& c, const KRange& kr) {
    const double l0 = std::log(kr.k_min), l1 = std::log(kr.k_max);
    int best = 0;
    double bv = -std::numeric_limits<double>::infinity();
    std::vector<double> ls(kr.n_scan);
    for (int i = 0; i < kr.n_scan; ++i) {
        ls[i] = l0 + (l1 - l0) * i / (kr.n_scan - 1);
        const double v = instability_excess(std::exp(ls[i]), U, c);
        if (v > bv) {
            bv = v;
            best = i;
        }
    }
    double kb = std::exp(ls[best]);
    double a = ls[std::max(best - 1, 0)], b = ls[std::min(best + 1, kr.n_scan - 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = instability_excess(std::exp(x1), U, c), f2 = instability_excess(std::exp(x2), U, c);
    for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = instability_excess(std::exp(x1), U, c);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = instability_excess(std::exp(x2), U, c);
        }
    }
    const double km = std::exp(0.5 * (a + b));
    const double vm = instability_excess(km, U, c);
    if (vm > bv) {
        bv = vm;
        kb = km;
    }
    return {bv, kb};
}

}  // namespace detail

/// Smallest |[c]| for which some k in the range is unstable; bisection to 1e-6 relative.
/// Throws NumericalError when no instability is found below 1e4 m/s (e.g. rho- = 0).
inline CriticalShear critical_shear(ShearConfig c, const KRange& kr = {}) {
    validate(c);
    if (!(kr.k_min > 0.0 && kr.k_max > kr.k_min && kr.n_scan >= 3)) throw ConfigError("critical_shear: bad k range");
    c.c_plus = c.c_minus = 0.0;
    auto unstable = [&](double U) { return detail::max_excess(U, c, kr).first > 0.0; };
    double lo = 0.0, hi = 1e-3;
    if (unstable(lo)) return {0.0, detail::max_excess(0.0, c, kr).second};
    while (!unstable(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e4) {
            std::ostringstream os;
            os << "critical_shear: no sign change of the growth rate for |[c]| in [0, 1e4] m/s (rho+ = "
               << c.rho_plus << ", rho- = " << c.rho_minus << ", sigma = " << c.sigma << ", k in [" << kr.k_min
               << ", " << kr.k_max << "])";
            throw NumericalError(os.str());
        }
    }
    while (hi - lo > 1e-7 * hi) {
        const double m = 0.5 * (lo + hi);
        (unstable(m) ? hi : lo) = m;
    }
    return {hi, detail::max_excess(hi, c, kr).second};
}

/// Threshold of the Kelvin-type criterion g (rho+ - rho-) > (1/(4 sigma)) (rho+ rho-)^2/(rho+ + rho-)^2 c0 [c]^4.
/// +inf when rho- = 0, 0 when sigma = 0.
inline double kelvin_criterion_threshold(const ShearConfig& c, double c0) {
    validate(c);
    if (!(c0 > 0.0)) throw ConfigError("kelvin_criterion_threshold: c0 must be > 0");
    if (c.rho_minus == 0.0) return std::numeric_limits<double>::infinity();
    if (c.sigma == 0.0) return 0.0;
    const double s = c.rho_plus + c.rho_minus, pr = c.rho_plus * c.rho_minus;
    return std::pow(4.0 * c.sigma * c.gravity * (c.rho_plus - c.rho_minus) * s * s / (pr * pr * c0), 0.25);
}

/// Relative depths H± / H for the layer pair.
inline std::pair<double, double> relative_depths(const ShearConfig& c) {
    const double s = c.rho_plus + c.rho_minus;
    const double rp = c.rho_plus / s, rm = c.rho_minus / s;
    const double H = c.depth_plus * c.depth_minus / (rp * c.depth_minus + rm * c.depth_plus);
    return {c.depth_plus / H, c.depth_minus / H};
}

struct ArbitrationCell {
    double depth_plus, depth_minus;
    double hbar_plus, hbar_minus;
    double c0_unsquared, c0_squared;
    double dispersion_threshold;
    double threshold_unsquared, threshold_squared;
    double rel_err_unsquared, rel_err_squared;
};

struct ArbitrationResult {
    std::vector<ArbitrationCell> cells;
    bool unsquared_ok = false;  // within tol in every cell
    bool squared_ok = false;
    std::string selected;  // "unsquared", "squared", "both" or "none"
};

/// Compares the dispersion threshold with the criterion threshold for c0 = e(0) and c0 = e(0)^2
/// over depths_plus x depths_minus.
inline ArbitrationResult kelvin_arbitration(const ShearConfig& base, const std::vector<double>& depths_plus,
                                            const std::vector<double>& depths_minus, double tol = 0.05,
                                            const KRange& kr = {}) {
    ArbitrationResult r;
    r.unsquared_ok = r.squared_ok = true;
    for (double hp : depths_plus) {
        for (double hm : depths_minus) {
            ShearConfig c = base;
            c.depth_plus = hp;
            c.depth_minus = hm;
            ArbitrationCell cell{};
            cell.depth_plus = hp;
            cell.depth_minus = hm;
            std::tie(cell.hbar_plus, cell.hbar_minus) = relative_depths(c);
            const double s = c.rho_plus + c.rho_minus;
            const double e0 = c_flat(c.rho_plus / s, c.rho_minus / s, cell.hbar_plus, cell.hbar_minus).value;
            cell.c0_unsquared = e0;
            cell.c0_squared = e0 * e0;
            cell.dispersion_threshold = critical_shear(c, kr).shear;
            cell.threshold_unsquared = kelvin_criterion_threshold(c, cell.c0_unsquared);
            cell.threshold_squared = kelvin_criterion_threshold(c, cell.c0_squared);
            cell.rel_err_unsquared = cell.threshold_unsquared / cell.dispersion_threshold - 1.0;
            cell.rel_err_squared = cell.threshold_squared / cell.dispersion_threshold - 1.0;
            r.unsquared_ok = r.unsquared_ok && std::abs(cell.rel_err_unsquared) <= tol;
            r.squared_ok = r.squared_ok && std::abs(cell.rel_err_squared) <= tol;
            r.cells.push_back(cell);
        }
    }
    r.selected = r.unsquared_ok ? (r.squared_ok ? "both" : "unsquared") : (r.squared_ok ? "squared" : "none");
    return r;
}

}  // namespace kh
