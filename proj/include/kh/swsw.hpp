#pragma once

// Two-layer shallow-water system (d = 1), conservative form in (zeta, v):
//   d_t zeta + d_x [q(zeta) v] = 0,              q = h- h+ / D
//   d_t v + d_x [zeta + (eps/2) r(zeta) v^2] = 0,  r = (rb+ h-^2 - rb- h+^2) / D^2
// with h- = H-(1 - eps- zeta), h+ = H+(1 + eps+ zeta), D = rb+ h- + rb- h+.
// dh+/dzeta = eps, dh-/dzeta = -eps; h+ + h- = H+ + H-.
// Hyperbolicity indicator: 1 - eps^2 rb+ rb- (H+ + H-)^2 v^2 / D^3; its sign is the
// sign of the Jacobian discriminant.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kh/errors.hpp"
#include "kh/evolution.hpp"
#include "kh/symbols.hpp"
#include "kh/units.hpp"

namespace kh {

struct SWState {
    Field zeta;
    Field v;
};

struct SWHeights {
    double h_minus, h_plus, D;
};

inline SWHeights sw_heights(const DimensionlessParams& p, double zeta) {
    const double hm = p.hbar_minus * (1.0 - p.eps_minus * zeta);
    const double hp = p.hbar_plus * (1.0 + p.eps_plus * zeta);
    if (!(hm > 0.0 && hp > 0.0))
        throw GeometryError("dry state: layer height h- = " + std::to_string(hm) + ", h+ = " + std::to_string(hp));
    return {hm, hp, p.rhobar_plus * hm + p.rhobar_minus * hp};
}

struct SWFlux {
    double mass, momentum;
};

inline SWFlux sw_flux(const DimensionlessParams& p, double zeta, double v) {
    const SWHeights h = sw_heights(p, zeta);
    const double q = h.h_minus * h.h_plus / h.D;
    const double r = (p.rhobar_plus * h.h_minus * h.h_minus - p.rhobar_minus * h.h_plus * h.h_plus) / (h.D * h.D);
    return {q * v, zeta + 0.5 * p.eps * r * v * v};
}

/// Fluxes of a whole state.
inline std::pair<Field, Field> flux(const DimensionlessParams& p, const SWState& s) {
    Field a(s.zeta.size()), b(s.zeta.size());
    for (size_t i = 0; i < a.size(); ++i) {
        const SWFlux f = sw_flux(p, s.zeta[i], s.v[i]);
        a[i] = f.mass;
        b[i] = f.momentum;
    }
    return {a, b};
}

struct Jacobian {
    double a11, a12, a21, a22;
    double trace() const { return a11 + a22; }
    double det() const { return a11 * a22 - a12 * a21; }
    double discriminant() const { return trace() * trace() - 4.0 * det(); }
};

/// Analytic flux Jacobian d(F1, F2)/d(zeta, v).
inline Jacobian sw_jacobian(const DimensionlessParams& p, double zeta, double v) {
    const SWHeights h = sw_heights(p, zeta);
    const double e = p.eps, rp = p.rhobar_plus, rm = p.rhobar_minus;
    const double D = h.D, dD = e * (rm - rp);
    const double q = h.h_minus * h.h_plus / D;
    const double dq = e * ((h.h_minus - h.h_plus) * D - h.h_minus * h.h_plus * (rm - rp)) / (D * D);
    const double N = rp * h.h_minus * h.h_minus - rm * h.h_plus * h.h_plus;
    const double r = N / (D * D);
    const double dr = (-2.0 * e * D * D - 2.0 * N * dD) / (D * D * D);
    return {dq * v, q, 1.0 + 0.5 * e * dr * v * v, e * r * v};
}

inline std::pair<std::complex<double>, std::complex<double>> jacobian_eigs(const DimensionlessParams& p, double zeta,
                                                                           double v) {
    const Jacobian j = sw_jacobian(p, zeta, v);
    const std::complex<double> s = std::sqrt(std::complex<double>(j.discriminant(), 0.0));
    return {0.5 * (j.trace() - s), 0.5 * (j.trace() + s)};
}

inline double indicator(const DimensionlessParams& p, double zeta, double v) {
    const SWHeights h = sw_heights(p, zeta);
    const double hs = p.hbar_plus + p.hbar_minus;
    return 1.0 - p.eps * p.eps * p.rhobar_plus * p.rhobar_minus * hs * hs * v * v / (h.D * h.D * h.D);
}

inline Field hyperbolicity_indicator(const DimensionlessParams& p, const SWState& s) {
    Field out(s.zeta.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = indicator(p, s.zeta[i], s.v[i]);
    return out;
}

/// |v| where the indicator vanishes at this zeta (+inf when rho- = 0 or eps = 0).
inline double indicator_boundary_v(const DimensionlessParams& p, double zeta) {
    const SWHeights h = sw_heights(p, zeta);
    const double c = p.eps * p.eps * p.rhobar_plus * p.rhobar_minus * std::pow(p.hbar_plus + p.hbar_minus, 2);
    if (c == 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(h.D * h.D * h.D / c);
}

struct HyperbolicityLoss : std::runtime_error {
    double time;
    int cell;
    double indicator_value;
    HyperbolicityLoss(double t, int i, double ind)
        : std::runtime_error("hyperbolicity lost at t = " + std::to_string(t) + ", cell " + std::to_string(i) +
                             " (indicator " + std::to_string(ind) + ")"),
          time(t),
          cell(i),
          indicator_value(ind) {}
};

/// Largest |lambda| over the cells; throws HyperbolicityLoss on a negative indicator.
inline double max_wave_speed(const DimensionlessParams& p, const SWState& s, double t = 0.0) {
    double m = 0.0;
    for (size_t i = 0; i < s.zeta.size(); ++i) {
        const double ind = indicator(p, s.zeta[i], s.v[i]);
        if (ind < 0.0) throw HyperbolicityLoss(t, static_cast<int>(i), ind);
        const auto [l1, l2] = jacobian_eigs(p, s.zeta[i], s.v[i]);
        m = std::max({m, std::abs(l1.real()), std::abs(l2.real())});
    }
    return m;
}

/// One Rusanov step on a periodic grid of cell width dx.
inline SWState fv_step(const DimensionlessParams& p, const SWState& s, double dx, double dt) {
    const int n = static_cast<int>(s.zeta.size());
    std::vector<SWFlux> F(n);
    std::vector<double> speed(n);
    for (int i = 0; i < n; ++i) {
        F[i] = sw_flux(p, s.zeta[i], s.v[i]);
        const auto [l1, l2] = jacobian_eigs(p, s.zeta[i], s.v[i]);
        speed[i] = std::max(std::abs(l1), std::abs(l2));
    }
    // interface i + 1/2
    std::vector<double> fm(n), fv(n);
    for (int i = 0; i < n; ++i) {
        const int j = (i + 1) % n;
        const double a = std::max(speed[i], speed[j]);
        fm[i] = 0.5 * (F[i].mass + F[j].mass) - 0.5 * a * (s.zeta[j] - s.zeta[i]);
        fv[i] = 0.5 * (F[i].momentum + F[j].momentum) - 0.5 * a * (s.v[j] - s.v[i]);
    }
    SWState o{Field(n), Field(n)};
    const double c = dt / dx;
    for (int i = 0; i < n; ++i) {
        const int k = (i + n - 1) % n;
        o.zeta[i] = s.zeta[i] - c * (fm[i] - fm[k]);
        o.v[i] = s.v[i] - c * (fv[i] - fv[k]);
    }
    return o;
}

struct SWConfig {
    int n_cells = 512;
    double length = 2.0 * std::numbers::pi;
    double t_end = 1.0;
    double cfl = 0.45;  // dt = cfl dx / max|lambda|, cfl <= 0.5
    DimensionlessParams params;
    std::vector<double> output_times;  // snapshots besides t = 0 and t_end
};

struct SWSeries {
    std::vector<double> times;
    std::vector<SWState> states;
    std::vector<double> indicator_min;
    std::optional<HyperbolicityLoss> loss;
    std::string dry_state;  // nonempty when the run stopped on a dry state
    int steps = 0;
    double dx = 0.0;

    /// Cell centers (i + 1/2) dx.
    double x(int i) const { return (i + 0.5) * dx; }

    void write_csv(std::ostream& os) const {
        os << "t,x,zeta_a,v_a,indicator_min\n";
        os.precision(12);
        for (size_t k = 0; k < states.size(); ++k)
            for (size_t i = 0; i < states[k].zeta.size(); ++i)
                os << times[k] << ',' << x(static_cast<int>(i)) << ',' << states[k].zeta[i] << ',' << states[k].v[i]
                   << ',' << indicator_min[k] << '\n';
    }
};

/// Integrates to t_end, hitting every output time exactly; stops on hyperbolicity loss or a dry state.
inline SWSeries run(const SWConfig& cfg, const SWState& init) {
    if (cfg.n_cells < 4) throw ConfigError("swsw run: n_cells must be >= 4");
    if (init.zeta.size() != static_cast<size_t>(cfg.n_cells) || init.v.size() != init.zeta.size())
        throw ConfigError("swsw run: initial data does not match n_cells");
    if (!(cfg.cfl > 0.0 && cfg.cfl <= 0.5)) throw ConfigError("swsw run: cfl must lie in (0, 0.5]");
    SWSeries out;
    out.dx = cfg.length / cfg.n_cells;
    std::vector<double> stops = cfg.output_times;
    stops.push_back(cfg.t_end);
    std::sort(stops.begin(), stops.end());
    auto imin = [&](const SWState& s) {
        const Field ind = hyperbolicity_indicator(cfg.params, s);
        return *std::min_element(ind.begin(), ind.end());
    };
    SWState s = init;
    double t = 0.0;
    try {
        out.times.push_back(0.0);
        out.states.push_back(s);
        out.indicator_min.push_back(imin(s));
        size_t next = 0;
        while (next < stops.size()) {
            if (stops[next] <= t) {
                ++next;
                continue;
            }
            const double a = max_wave_speed(cfg.params, s, t);
            double dt = cfg.cfl * out.dx / std::max(a, 1e-300);
            bool hit = false;
            if (t + dt >= stops[next]) {
                dt = stops[next] - t;
                hit = true;
            }
            s = fv_step(cfg.params, s, out.dx, dt);
            t = hit ? stops[next] : t + dt;
            ++out.steps;
            if (hit) {
                out.times.push_back(t);
                out.states.push_back(s);
                out.indicator_min.push_back(imin(s));
                ++next;
            }
        }
    } catch (const HyperbolicityLoss& e) {
        out.loss = e;
    } catch (const GeometryError& e) {
        out.dry_state = e.what();
    }
    return out;
}

/// Evaluates the trigonometric interpolant of u (nodes i L/n) at x.
inline double fourier_eval(const PeriodicGrid& g, const Spectrum& s, double x) {
    const int n = g.n();
    double v = s[0].real();
    for (int k = 1; k < g.n_modes(); ++k) {
        const double w = (2 * k == n) ? 1.0 : 2.0;
        const double th = g.xi(k) * x;
        v += w * (s[k].real() * std::cos(th) - s[k].imag() * std::sin(th));
    }
    return v / n;
}

struct CompareRow {
    double mu = 0.0;
    double discrepancy = 0.0;  // max over output times of max(|zeta - zeta_a|, |psi_x - v_a|)
    double zeta_part = 0.0, v_part = 0.0;
    bool fitted = true;
    std::string error;
};

struct CompareTable {
    std::vector<CompareRow> rows;
    std::optional<double> mu_exponent;

    void write_csv(std::ostream& os) const {
        os << "mu,discrepancy,zeta_part,v_part,fitted\n";
        os.precision(12);
        for (const auto& r : rows)
            os << r.mu << ',' << r.discrepancy << ',' << r.zeta_part << ',' << r.v_part << ',' << (r.fitted ? 1 : 0)
               << '\n';
    }
};

struct CompareOptions {
    int n_full = 32;
    int n_sw = 8192;
    int n_times = 10;                 // comparison times j t_end / n_times
    double bond_times_mu = std::numeric_limits<double>::infinity();  // Bo = this / mu (fixed physical sigma)
    SolveOptions solve{32, 1e-11, 0};
};

/// Runs the full system and the SW/SW system from (zeta0, psi0) for each mu and reports the sup discrepancy.
inline CompareTable compare_with_full(double rhobar_plus, double depth_ratio, double eps,
                                      const std::function<double(double)>& zeta0,
                                      const std::function<double(double)>& psi0, const std::vector<double>& mu_list,
                                      double t_end, const CompareOptions& opt = {}) {
    CompareTable tab;
    const PeriodicGrid gf(opt.n_full);
    const Field z0 = gf.sample(zeta0), p0 = gf.sample(psi0);
    std::vector<double> times;
    for (int j = 1; j <= opt.n_times; ++j) times.push_back(t_end * j / opt.n_times);
    for (double mu : mu_list) {
        CompareRow row;
        row.mu = mu;
        try {
            const DimensionlessParams p = nondim_params(rhobar_plus, depth_ratio, eps, mu, opt.bond_times_mu / mu);
            // full system, snapshots at the comparison times
            EvolutionConfig ec;
            ec.n_points = opt.n_full;
            ec.params = p;
            ec.t_end = t_end;
            ec.solve = opt.solve;
            const double cap = cfl_cap(p, gf);
            const long per = std::lround(std::ceil(t_end / opt.n_times / (0.9 * cap)));
            ec.dt = t_end / opt.n_times / static_cast<double>(per);
            ec.cadence = static_cast<int>(per);
            const TimeSeries full = run(ec, z0, p0);
            if (full.breakdown_time) throw NumericalError("full system breakdown: " + full.breakdown_reason);
            // SW/SW on cell centers with spectrally interpolated initial data
            SWConfig sc;
            sc.n_cells = opt.n_sw;
            sc.t_end = t_end;
            sc.params = p;
            sc.output_times = times;
            const double dxs = sc.length / sc.n_cells;
            const Field v0 = derivative(gf, full.snapshots.front().psi);
            const Spectrum sz0 = fft(full.snapshots.front().zeta), sv0 = fft(v0);
            SWState init{Field(sc.n_cells), Field(sc.n_cells)};
            for (int i = 0; i < sc.n_cells; ++i) {
                init.zeta[i] = fourier_eval(gf, sz0, (i + 0.5) * dxs);
                init.v[i] = fourier_eval(gf, sv0, (i + 0.5) * dxs);
            }
            const SWSeries sw = run(sc, init);
            if (sw.loss) throw NumericalError(std::string("SW/SW: ") + sw.loss->what());
            if (!sw.dry_state.empty()) throw NumericalError("SW/SW: " + sw.dry_state);
            for (size_t k = 1; k < full.snapshots.size(); ++k) {
                const double t = full.snapshots[k].t;
                size_t m = 0;
                while (m < sw.times.size() && std::abs(sw.times[m] - t) > 1e-9 * t_end) ++m;
                if (m == sw.times.size()) continue;
                const Spectrum sz = fft(full.snapshots[k].zeta), sv = fft(derivative(gf, full.snapshots[k].psi));
                for (int i = 0; i < sc.n_cells; ++i) {
                    const double x = (i + 0.5) * dxs;
                    row.zeta_part = std::max(row.zeta_part, std::abs(fourier_eval(gf, sz, x) - sw.states[m].zeta[i]));
                    row.v_part = std::max(row.v_part, std::abs(fourier_eval(gf, sv, x) - sw.states[m].v[i]));
                }
            }
            row.discrepancy = std::max(row.zeta_part, row.v_part);
        } catch (const std::exception& e) {
            row.fitted = false;
            row.error = e.what();
        }
        tab.rows.push_back(row);
    }
    std::vector<double> x, y;
    for (const auto& r : tab.rows)
        if (r.fitted && r.discrepancy > 0.0) {
            x.push_back(r.mu);
            y.push_back(r.discrepancy);
        }
    tab.mu_exponent = loglog_slope(x, y);
    return tab;
}

}  // namespace kh
