#pragma once

// Dimensional configuration -> dimensionless parameters of the two-fluid
// interfacial problem. The "+" fluid is the lower (heavier) one.

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "kh/errors.hpp"

namespace kh {

struct PhysicalConfig {
    double rho_plus = 0.0;         // kg m^-3
    double rho_minus = 0.0;        // kg m^-3
    double depth_plus = 0.0;       // m
    double depth_minus = 0.0;      // m
    double amplitude = 0.0;        // m
    double wavelength = 0.0;       // m
    double surface_tension = 0.0;  // N m^-1
    double gravity = 9.81;         // m s^-2
};

struct DimensionlessParams {
    double rhobar_plus = 1.0;
    double rhobar_minus = 0.0;
    double eps = 0.0;
    double mu = 1.0;
    double eps_plus = 0.0;
    double eps_minus = 0.0;
    double mu_plus = 1.0;
    double mu_minus = 1.0;
    double hbar_plus = 1.0;
    double hbar_minus = 1.0;
    double bond = std::numeric_limits<double>::infinity();  // +inf when sigma = 0
    double g_reduced = 0.0;                                   // m s^-2, NaN when built from dimensionless data
    double h_eff = 0.0;                                       // m
    double wave_speed = 0.0;                                  // m s^-1
    std::optional<double> upsilon;                            // absent when sigma = 0

    bool bond_infinite() const { return std::isinf(bond); }
};

inline void validate(const PhysicalConfig& c) {
    auto fail = [](const std::string& what) { throw ConfigError("invalid physical config: " + what); };
    if (!(c.rho_minus >= 0.0)) fail("rho_minus must be >= 0");
    if (!(c.rho_plus > c.rho_minus)) fail("rho_plus must exceed rho_minus (stable stratification)");
    if (!(c.depth_plus > 0.0)) fail("depth_plus must be > 0");
    if (!(c.depth_minus > 0.0)) fail("depth_minus must be > 0");
    if (!(c.wavelength > 0.0)) fail("wavelength must be > 0");
    if (!(c.gravity > 0.0)) fail("gravity must be > 0");
    if (!(c.amplitude >= 0.0)) fail("amplitude must be >= 0");
    if (!(c.surface_tension >= 0.0)) fail("surface_tension must be >= 0");
}

/// Effective depth H = H+ H- / (rhobar+ H- + rhobar- H+).
inline double effective_depth(const PhysicalConfig& c) {
    const double s = c.rho_plus + c.rho_minus;
    const double rp = c.rho_plus / s, rm = c.rho_minus / s;
    return c.depth_plus * c.depth_minus / (rp * c.depth_minus + rm * c.depth_plus);
}

inline double reduced_gravity(const PhysicalConfig& c) {
    return (c.rho_plus - c.rho_minus) / (c.rho_plus + c.rho_minus) * c.gravity;
}

/// Upsilon = (rb+ rb-)^2 (a^4/H^2) (rho+ + rho-) g' / (4 sigma).
inline double upsilon(const PhysicalConfig& c) {
    validate(c);
    if (c.surface_tension == 0.0)
        throw ConfigError(
            "upsilon is undefined for sigma = 0; the zero surface tension limit changes the structure of the "
            "criterion and must be requested explicitly");
    const double s = c.rho_plus + c.rho_minus;
    const double rr = (c.rho_plus / s) * (c.rho_minus / s);
    const double H = effective_depth(c);
    const double a2 = c.amplitude * c.amplitude;
    return rr * rr * (a2 * a2 / (H * H)) * s * reduced_gravity(c) / (4.0 * c.surface_tension);
}

/// Surface tension giving a prescribed Upsilon (sigma in cfg is ignored).
inline double sigma_for_upsilon(PhysicalConfig c, double target_upsilon) {
    if (!(target_upsilon > 0.0)) throw ConfigError("target upsilon must be > 0");
    c.surface_tension = 1.0;
    return upsilon(c) / target_upsilon;
}

/// Bo = (rho+ + rho-) g' lambda^2 / sigma; +inf when sigma = 0.
inline double bond_number(const PhysicalConfig& c) {
    validate(c);
    if (c.surface_tension == 0.0) return std::numeric_limits<double>::infinity();
    return (c.rho_plus + c.rho_minus) * reduced_gravity(c) * c.wavelength * c.wavelength / c.surface_tension;
}

/// Typical interfacial shear (a/H) sqrt(g' H).
inline double shear_scale(const PhysicalConfig& c) {
    validate(c);
    const double H = effective_depth(c);
    return c.amplitude / H * std::sqrt(reduced_gravity(c) * H);
}

inline DimensionlessParams derive_params(const PhysicalConfig& c) {
    validate(c);
    DimensionlessParams p;
    const double s = c.rho_plus + c.rho_minus;
    p.rhobar_plus = c.rho_plus / s;
    p.rhobar_minus = c.rho_minus / s;
    p.g_reduced = reduced_gravity(c);
    p.h_eff = effective_depth(c);
    p.wave_speed = std::sqrt(p.g_reduced * p.h_eff);
    p.hbar_plus = c.depth_plus / p.h_eff;
    p.hbar_minus = c.depth_minus / p.h_eff;
    p.eps = c.amplitude / p.h_eff;
    p.mu = p.h_eff * p.h_eff / (c.wavelength * c.wavelength);
    p.eps_plus = c.amplitude / c.depth_plus;
    p.eps_minus = c.amplitude / c.depth_minus;
    p.mu_plus = c.depth_plus * c.depth_plus / (c.wavelength * c.wavelength);
    p.mu_minus = c.depth_minus * c.depth_minus / (c.wavelength * c.wavelength);
    p.bond = bond_number(c);
    if (c.surface_tension > 0.0) p.upsilon = upsilon(c);
    return p;
}

/// Parameters from dimensionless data only. depth_ratio = H-/H+; the relative
/// depths follow from rhobar+/H+ + rhobar-/H- = 1.
inline DimensionlessParams nondim_params(double rhobar_plus, double depth_ratio, double eps, double mu,
                                         double bond = std::numeric_limits<double>::infinity()) {
    if (!(rhobar_plus > 0.5 && rhobar_plus <= 1.0)) throw ConfigError("rhobar_plus must lie in (0.5, 1]");
    if (!(depth_ratio > 0.0)) throw ConfigError("depth_ratio must be > 0");
    if (!(mu > 0.0)) throw ConfigError("mu must be > 0");
    if (!(eps >= 0.0)) throw ConfigError("eps must be >= 0");
    if (!(bond > 0.0)) throw ConfigError("bond must be > 0");
    DimensionlessParams p;
    p.rhobar_plus = rhobar_plus;
    p.rhobar_minus = 1.0 - rhobar_plus;
    p.hbar_plus = rhobar_plus + p.rhobar_minus / depth_ratio;
    p.hbar_minus = depth_ratio * p.hbar_plus;
    p.eps = eps;
    p.mu = mu;
    p.eps_plus = eps / p.hbar_plus;
    p.eps_minus = eps / p.hbar_minus;
    p.mu_plus = mu * p.hbar_plus * p.hbar_plus;
    p.mu_minus = mu * p.hbar_minus * p.hbar_minus;
    p.bond = bond;
    p.g_reduced = std::numeric_limits<double>::quiet_NaN();
    p.h_eff = std::numeric_limits<double>::quiet_NaN();
    p.wave_speed = std::numeric_limits<double>::quiet_NaN();
    if (!std::isinf(bond)) {
        const double rr = p.rhobar_plus * p.rhobar_minus;
        p.upsilon = rr * rr * eps * eps * eps * eps * mu * bond / 4.0;
    }
    return p;
}

/// Upsilon rewritten with dimensionless groups: (rb+ rb-)^2 eps^4 mu Bo / 4.
inline double upsilon_nondim(const DimensionlessParams& p) {
    const double rr = p.rhobar_plus * p.rhobar_minus;
    const double e2 = p.eps * p.eps;
    return rr * rr * e2 * e2 * p.mu * p.bond / 4.0;
}

enum class Verdict { Stable, Critical, Unstable };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Stable: return "stable";
        case Verdict::Critical: return "critical";
        case Verdict::Unstable: return "unstable";
    }
    return "?";
}

inline Verdict practical_verdict(double ups, double lo = 0.1, double hi = 10.0) {
    if (!(lo > 0.0 && lo < hi)) throw ConfigError("practical_verdict requires 0 < lo < hi");
    if (ups < lo) return Verdict::Stable;
    if (ups > hi) return Verdict::Unstable;
    return Verdict::Critical;
}

}  // namespace kh
