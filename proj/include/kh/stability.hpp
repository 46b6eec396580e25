#pragma once

// Stability constants and criteria.
//
//   e(zeta) = sup_V mu (tildeG^{-1} d_x V, d_x V) / |(1 + sqrt(mu)|D|)^{1/2} V|^2
//   c(zeta) = e^2 (1 + eps^2 mu |zeta_x|_inf^2)^{3/2}       (c_coeff_unsquared uses e)
//   a       = 1 + eps [rho+ (d_t + eps V+ d_x) w+ - rho- (d_t + eps V- d_x) w-]
//   (SC)      Upsilon c max(|[V]|, |d_x [V]|, |d_t [V]|)_inf^4 < inf a
//   (SC')     Upsilon c |[V]|_inf^4 < inf a
//   (SCstrong) eps^{-2 gamma} Upsilon c max(...)^4 < inf a
// Upsilon = (rb+ rb-)^2 eps^4 mu Bo / 4; it vanishes with rb- even when Bo is infinite.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "kh/two_fluid.hpp"
#include "kh/units.hpp"

namespace kh {

/// f(x) = x / ((1 + x)(rho- tanh(H+ x) + rho+ tanh(H- x))), the flat mode-wise ratio.
inline double e_mode_ratio(double x, double rp, double rm, double hp, double hm) {
    if (x <= 0.0) return 1.0 / (rm * hp + rp * hm);
    return x / ((1.0 + x) * (rm * std::tanh(hp * x) + rp * std::tanh(hm * x)));
}

struct SupResult {
    double value = 0.0;
    double argmax = 0.0;
    bool at_infinity = false;
};

/// sup_{x >= 0} of the flat ratio: 400-point log scan on [1e-4, 1e4] plus golden
/// section; the x -> infinity limit 1 is returned (argmax = inf) when it dominates.
inline SupResult c_flat(double rp, double rm, double hp, double hm) {
    auto f = [&](double x) { return e_mode_ratio(x, rp, rm, hp, hm); };
    const int npts = 400;
    const double l0 = std::log(1e-4), l1 = std::log(1e4);
    int best = 0;
    double bv = -1.0;
    std::vector<double> xs(npts);
    for (int i = 0; i < npts; ++i) {
        xs[i] = std::exp(l0 + (l1 - l0) * i / (npts - 1));
        const double v = f(xs[i]);
        if (v > bv) {
            bv = v;
            best = i;
        }
    }
    SupResult r{bv, xs[best], false};
    const double f0 = f(0.0);
    if (f0 > r.value) r = {f0, 0.0, false};
    if (best > 0 && best < npts - 1) {
        // golden section on log x
        double a = std::log(xs[best - 1]), b = std::log(xs[best + 1]);
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = f(std::exp(c)), fd = f(std::exp(d));
        for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = f(std::exp(c));
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = f(std::exp(d));
            }
        }
        const double xm = std::exp(0.5 * (a + b));
        if (f(xm) > r.value) r = {f(xm), xm, false};
    }
    if (1.0 >= r.value) r = {1.0, std::numeric_limits<double>::infinity(), true};
    return r;
}

inline SupResult c_flat(const DimensionlessParams& p) {
    return c_flat(p.rhobar_plus, p.rhobar_minus, p.hbar_plus, p.hbar_minus);
}

/// Mode-wise e for a flat interface restricted to the resolved modes 1..n/2-1.
inline double e_flat_discrete(const PeriodicGrid& g, const DimensionlessParams& p) {
    double m = 0.0;
    for (int k = 1; k < g.n() / 2; ++k)
        m = std::max(m, e_mode_ratio(std::sqrt(p.mu) * g.xi(k), p.rhobar_plus, p.rhobar_minus, p.hbar_plus,
                                     p.hbar_minus));
    return m;
}

struct ECoeffResult {
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Largest eigenvalue of T = mu B^{-1} (-d_x) tildeG^{-1} d_x B^{-1}, B = (1 + sqrt(mu)|D|)^{1/2},
/// i.e. the generalized Rayleigh quotient defining e. Krylov-accelerated power
/// iteration (Lanczos with full reorthogonalization); stops when successive
/// estimates differ by less than tol (relative), at most max_iter steps.
inline ECoeffResult e_coeff(const TwoFluid& ops, double tol = 1e-8, int max_iter = 500, unsigned seed = 7) {
    const PeriodicGrid& g = ops.grid();
    const double mu = ops.params().mu, sm = std::sqrt(mu);
    const int n = g.n();
    auto binv = [&](const Field& u) {
        return apply_multiplier(g, [sm](double xi) { return 1.0 / std::sqrt(1.0 + sm * std::abs(xi)); }, u,
                                Nyquist::Zero);
    };
    auto T = [&](const Field& w) {
        const Field v = binv(w);
        const Field dv = remove_mean(derivative(g, v));
        const Field q = ops.invert_tildeG(dv);
        Field r = derivative(g, q);
        for (double& x : r) x = -mu * x;
        return remove_mean(binv(r));
    };
    auto dot = [](const Field& a, const Field& b) {
        double s = 0.0;
        for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    // the range of T: mean-zero, no Nyquist; dimension n - 2
    const int dim = n - 2;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Field v(n);
    for (double& x : v) x = nd(rng);
    v = apply_multiplier(g, [](double) { return 1.0; }, remove_mean(v), Nyquist::Zero);
    const double nv = std::sqrt(dot(v, v));
    for (double& x : v) x /= nv;
    std::vector<Field> basis{v};
    std::vector<double> alpha, beta;
    ECoeffResult res;
    double prev = 0.0;
    const int cap = std::min(max_iter, dim);
    for (int it = 1; it <= cap; ++it) {
        Field w = T(basis.back());
        const double a = dot(w, basis.back());
        alpha.push_back(a);
        for (const Field& b : basis) {
            const double c = dot(w, b);
            for (int i = 0; i < n; ++i) w[i] -= c * b[i];
        }
        const int m = static_cast<int>(alpha.size());
        Eigen::VectorXd dg(m), sd(std::max(m - 1, 1));
        for (int i = 0; i < m; ++i) dg[i] = alpha[i];
        for (int i = 0; i + 1 < m; ++i) sd[i] = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(dg, sd.head(std::max(m - 1, 0)), Eigen::EigenvaluesOnly);
        const double est = es.eigenvalues().maxCoeff();
        res.value = est;
        res.iterations = it;
        if (it > 1 && std::abs(est - prev) <= tol * std::abs(est)) {
            res.converged = true;
            break;
        }
        prev = est;
        const double bn = std::sqrt(dot(w, w));
        if (bn <= 1e-14 * std::max(1.0, std::abs(est))) {
            res.converged = true;  // invariant subspace found: estimate is exact
            break;
        }
        beta.push_back(bn);
        for (double& x : w) x /= bn;
        basis.push_back(std::move(w));
    }
    if (cap == dim && res.iterations == dim) res.converged = true;
    return res;
}

/// c = e^2 (1 + eps^2 mu |zeta_x|^2_inf)^{3/2}.
inline double c_from_e(double e, double eps, double mu, double zx_sup, bool squared = true) {
    const double f = std::pow(1.0 + eps * eps * mu * zx_sup * zx_sup, 1.5);
    return (squared ? e * e : e) * f;
}

struct AField {
    Field a;
    double inf_a = 1.0;
};

/// a from traces at consecutive times; d_t w± centered when both neighbours
/// are given, one-sided otherwise.
inline AField a_field(const PeriodicGrid& g, const DimensionlessParams& p, const TraceBundle& now,
                      const TraceBundle* prev, const TraceBundle* next, double dt) {
    const int n = g.n();
    auto check = [&](const TraceBundle* t) {
        if (t && (t->w_plus.size() != static_cast<size_t>(n) || t->w_minus.size() != static_cast<size_t>(n)))
            throw ConfigError("a_field: trace bundles live on different grids");
    };
    check(&now);
    check(prev);
    check(next);
    if ((prev || next) && !(dt > 0.0)) throw ConfigError("a_field: dt must be > 0");
    Field dtwp(n, 0.0), dtwm(n, 0.0);
    if (prev && next) {
        for (int i = 0; i < n; ++i) {
            dtwp[i] = (next->w_plus[i] - prev->w_plus[i]) / (2.0 * dt);
            dtwm[i] = (next->w_minus[i] - prev->w_minus[i]) / (2.0 * dt);
        }
    } else if (next) {
        for (int i = 0; i < n; ++i) {
            dtwp[i] = (next->w_plus[i] - now.w_plus[i]) / dt;
            dtwm[i] = (next->w_minus[i] - now.w_minus[i]) / dt;
        }
    } else if (prev) {
        for (int i = 0; i < n; ++i) {
            dtwp[i] = (now.w_plus[i] - prev->w_plus[i]) / dt;
            dtwm[i] = (now.w_minus[i] - prev->w_minus[i]) / dt;
        }
    }
    const Field dxwp = derivative(g, now.w_plus), dxwm = derivative(g, now.w_minus);
    AField r;
    r.a.resize(n);
    r.inf_a = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double tp = dtwp[i] + p.eps * now.v_plus[i] * dxwp[i];
        const double tm = dtwm[i] + p.eps * now.v_minus[i] * dxwm[i];
        r.a[i] = 1.0 + p.eps * (p.rhobar_plus * tp - p.rhobar_minus * tm);
        r.inf_a = std::min(r.inf_a, r.a[i]);
    }
    return r;
}

struct StabilityInputs {
    PeriodicGrid grid;
    DimensionlessParams params;
    Field zeta;
    Field jump_v;                      // [V] = V+ - V-
    std::optional<Field> djump_v_dt{};  // d_t [V]; absent -> (SC) falls back to (SC')
    Field a;                           // a samples
    double gamma = 0.0;                // exponent of (SCstrong), in [0, 1]
    double e_coeff = 1.0;              // e(zeta) (from e_coeff or e_flat)
    std::optional<PhysicalConfig> physical{};  // enables the dimensional restatement
};

struct StabilityReport {
    double upsilon = 0.0;
    double c_coeff = 0.0;
    double c_coeff_unsquared = 0.0;
    double e_coeff = 0.0;
    double inf_a = 0.0;
    double jump_sup = 0.0;     // |[V]|_inf
    double jump_sup_d1 = 0.0;  // max_{|alpha| <= 1} |d^alpha [V]|_inf
    bool sc = false, sc_alt = false, sc_strong = false;
    double margin_d = 0.0, margin_d_alt = 0.0;
    Verdict verdict = Verdict::Unstable;
    bool time_derivative_missing = false;
    // dimensional restatement: (rho+ + rho-) g' inf a  vs  (1/4)(rho+ rho-)^2/(sigma (rho+ + rho-)^2) c |omega|^4
    std::optional<double> dim_lhs, dim_rhs;
    std::optional<bool> dim_verdict;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["upsilon"] = upsilon;
        j["c_coeff"] = c_coeff;
        j["c_coeff_unsquared"] = c_coeff_unsquared;
        j["e_coeff"] = e_coeff;
        j["inf_a"] = inf_a;
        j["jump_sup"] = jump_sup;
        j["jump_sup_d1"] = jump_sup_d1;
        j["sc"] = sc;
        j["sc_alt"] = sc_alt;
        j["sc_strong"] = sc_strong;
        j["margin_d"] = margin_d;
        j["margin_d_alt"] = margin_d_alt;
        j["verdict"] = to_string(verdict);
        return j;
    }
};

/// Upsilon, with the rb- = 0 and [V] = 0 cases giving a zero right-hand side even when Bo is infinite.
inline double criterion_rhs(double ups, double c, double jump4) {
    if (jump4 == 0.0 || ups == 0.0) return 0.0;
    return ups * c * jump4;
}

inline double upsilon_or_inf(const DimensionlessParams& p) {
    if (p.rhobar_minus == 0.0 || p.eps == 0.0) return 0.0;
    if (std::isinf(p.bond)) return std::numeric_limits<double>::infinity();
    return upsilon_nondim(p);
}

inline StabilityReport evaluate_criteria(const StabilityInputs& in) {
    const PeriodicGrid& g = in.grid;
    const DimensionlessParams& p = in.params;
    if (in.jump_v.size() != static_cast<size_t>(g.n()) || in.a.size() != static_cast<size_t>(g.n()))
        throw ConfigError("evaluate_criteria: fields do not match the grid");
    StabilityReport r;
    r.upsilon = upsilon_or_inf(p);
    const double zx = sup_norm(derivative(g, in.zeta));
    r.e_coeff = in.e_coeff;
    r.c_coeff = c_from_e(in.e_coeff, p.eps, p.mu, zx, true);
    r.c_coeff_unsquared = c_from_e(in.e_coeff, p.eps, p.mu, zx, false);
    r.inf_a = *std::min_element(in.a.begin(), in.a.end());
    r.jump_sup = sup_norm(in.jump_v);
    r.jump_sup_d1 = std::max(r.jump_sup, sup_norm(derivative(g, in.jump_v)));
    if (in.djump_v_dt)
        r.jump_sup_d1 = std::max(r.jump_sup_d1, sup_norm(*in.djump_v_dt));
    else
        r.time_derivative_missing = true;
    auto p4 = [](double x) { return x * x * x * x; };
    const double rhs_d1 = criterion_rhs(r.upsilon, r.c_coeff, p4(r.jump_sup_d1));
    const double rhs0 = criterion_rhs(r.upsilon, r.c_coeff, p4(r.jump_sup));
    r.margin_d = r.inf_a - rhs_d1;
    r.margin_d_alt = r.inf_a - rhs0;
    r.sc_alt = rhs0 < r.inf_a;
    r.sc = r.time_derivative_missing ? r.sc_alt : rhs_d1 < r.inf_a;
    const double strong_scale = (in.gamma == 0.0 || rhs_d1 == 0.0) ? 1.0 : std::pow(p.eps, -2.0 * in.gamma);
    r.sc_strong = strong_scale * rhs_d1 < r.inf_a;
    r.verdict = r.sc ? Verdict::Stable : Verdict::Unstable;
    if (in.physical) {
        const PhysicalConfig& c = *in.physical;
        validate(c);
        const double rs = c.rho_plus + c.rho_minus;
        r.dim_lhs = rs * reduced_gravity(c) * r.inf_a;
        const double omega = shear_scale(c) * r.jump_sup;
        if (c.rho_minus == 0.0 || omega == 0.0)
            r.dim_rhs = 0.0;
        else if (c.surface_tension == 0.0)
            r.dim_rhs = std::numeric_limits<double>::infinity();
        else
            r.dim_rhs = 0.25 * (c.rho_plus * c.rho_minus) * (c.rho_plus * c.rho_minus) /
                        (c.surface_tension * rs * rs) * r.c_coeff * p4(omega);
        r.dim_verdict = *r.dim_rhs < *r.dim_lhs;
    }
    return r;
}

/// d = 1 capillary coefficient K = (1 + eps^2 mu zeta_x^2)^{-3/2}.
inline Field capillary_K(const PeriodicGrid& g, const DimensionlessParams& p, const Field& zeta) {
    const Field zx = derivative(g, zeta);
    Field k(zx.size());
    for (size_t i = 0; i < k.size(); ++i) k[i] = std::pow(1.0 + p.eps * p.eps * p.mu * zx[i] * zx[i], -1.5);
    return k;
}

/// (Ins u, u) = (a u, u) - eps^2 mu rb+ rb- (E(u [V]), u [V]) + (1/Bo)(K u_x, u_x).
inline double ins_form(const TwoFluid& ops, const Field& u, const Field& a, const Field& jump_v) {
    const PeriodicGrid& g = ops.grid();
    const DimensionlessParams& p = ops.params();
    const int n = g.n();
    Field au(n), uj(n);
    for (int i = 0; i < n; ++i) {
        au[i] = a[i] * u[i];
        uj[i] = u[i] * jump_v[i];
    }
    double val = inner(g, au, u);
    if (p.rhobar_minus != 0.0 && p.eps != 0.0 && sup_norm(jump_v) > 0.0)
        val -= p.eps * p.eps * p.mu * p.rhobar_plus * p.rhobar_minus * inner(g, ops.apply_E(uj), uj);
    if (!std::isinf(p.bond)) {
        const Field ux = derivative(g, u);
        const Field K = capillary_K(g, p, ops.zeta());
        Field kux(n);
        for (int i = 0; i < n; ++i) kux[i] = K[i] * ux[i];
        val += inner(g, kux, ux) / p.bond;
    }
    return val;
}

struct ModewiseMargin {
    double minimum = 0.0;
    double argmin = 0.0;
    bool unbounded_below = false;
};

/// min over xi >= 0 of A(xi) / (1 + xi^2/Bo) with
/// A(xi) = inf a - sqrt(mu) a_U |xi| + (1/Bo) xi^2 / (1 + eps^2 mu zx^2)^{3/2},
/// a_U = eps^2 rb+ rb- e |[V]|^2.
inline ModewiseMargin modewise_margin(const DimensionlessParams& p, double inf_a, double jump_sup, double e,
                                      double zx_sup = 0.0) {
    const double aU = p.eps * p.eps * p.rhobar_plus * p.rhobar_minus * e * jump_sup * jump_sup;
    const double sm = std::sqrt(p.mu);
    ModewiseMargin r;
    if (std::isinf(p.bond)) {
        if (aU > 0.0) {
            r.minimum = -std::numeric_limits<double>::infinity();
            r.argmin = std::numeric_limits<double>::infinity();
            r.unbounded_below = true;
        } else {
            r.minimum = inf_a;
        }
        return r;
    }
    const double ib = 1.0 / p.bond;
    const double kf = 1.0 / std::pow(1.0 + p.eps * p.eps * p.mu * zx_sup * zx_sup, 1.5);
    auto F = [&](double xi) { return (inf_a - sm * aU * xi + ib * xi * xi * kf) / (1.0 + ib * xi * xi); };
    r.minimum = F(0.0);
    r.argmin = 0.0;
    if (aU == 0.0) return r;
    // the minimizer of A alone sits at xi* = sqrt(mu) aU Bo / (2 kf); scan around it
    const double xs = std::max(sm * aU * p.bond / (2.0 * kf), 1e-12);
    const int npts = 2000;
    const double l0 = std::log(xs) - 12.0, l1 = std::log(xs) + 12.0;
    int best = -1;
    std::vector<double> grid(npts);
    for (int i = 0; i < npts; ++i) {
        grid[i] = std::exp(l0 + (l1 - l0) * i / (npts - 1));
        const double v = F(grid[i]);
        if (v < r.minimum) {
            r.minimum = v;
            r.argmin = grid[i];
            best = i;
        }
    }
    if (best > 0 && best < npts - 1) {
        double a = grid[best - 1], b = grid[best + 1];
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - gr * (b - a), d = a + gr * (b - a);
        double fc = F(c), fd = F(d);
        for (int it = 0; it < 300 && b - a > 1e-15 * b; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = F(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = F(d);
            }
        }
        const double xm = 0.5 * (a + b);
        if (F(xm) < r.minimum) {
            r.minimum = F(xm);
            r.argmin = xm;
        }
    }
    return r;
}

}  // namespace kh
