#pragma once

// Time integration of the dimensionless two-fluid system in d = 1:
//   d_t zeta = (1/mu) cal G psi
//   d_t psi  = -zeta - (eps/2) [rb |psi±_x|^2] + (eps/(2 mu)) [rb w±^2] (1 + eps^2 mu zeta_x^2)
//              + (1/Bo) d_x (zeta_x / sqrt(1 + eps^2 mu zeta_x^2))
// with w± (1 + eps^2 mu zeta_x^2) = cal G psi + eps mu zeta_x psi±_x. The capillary
// term is the exact curvature -(1/(Bo eps sqrt(mu))) k(eps sqrt(mu) zeta) after
// cancelling eps sqrt(mu), so eps -> 0 needs no special case.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kh/stability.hpp"
#include "kh/two_fluid.hpp"

namespace kh {

struct EvolutionState {
    Field zeta;
    Field psi;
    double t = 0.0;
};

struct EvolutionConfig {
    int n_points = 64;
    double dt = 0.0;  // 0 -> 0.9 of the cap
    double t_end = 1.0;
    DimensionlessParams params;
    std::optional<bool> dealias;  // unset -> on when eps >= 0.1
    int cadence = 10;             // steps between snapshots
    SolveOptions solve{32, 1e-11, 0};
    double length = 2.0 * std::numbers::pi;
    double tail_threshold = 1e-2;  // breakdown when tail_energy_fraction exceeds it

    bool dealias_on() const { return dealias.value_or(params.eps >= 0.1); }
};

/// dt <= 0.5 min(sqrt(mu)/k_max, sqrt(Bo sqrt(mu))/k_max^{3/2}).
inline double cfl_cap(const DimensionlessParams& p, const PeriodicGrid& g) {
    const double km = g.xi_max(), sm = std::sqrt(p.mu);
    double cap = sm / km;
    if (!std::isinf(p.bond)) cap = std::min(cap, std::sqrt(p.bond * sm) / std::pow(km, 1.5));
    return 0.5 * cap;
}

/// A legitimate end of a run: depth violation, solver failure, NaN, or spectral blow-up.
struct BreakdownError : std::runtime_error {
    double time;
    BreakdownError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
};

struct Rhs {
    Field dzeta, dpsi;
    TraceBundle traces;
};

inline Rhs rhs(const PeriodicGrid& g, const DimensionlessParams& p, const Field& zeta, const Field& psi,
               const SolveOptions& opt = {32, 1e-11, 0}, bool dealias_products = false) {
    const int n = g.n();
    const TwoFluid ops(g, zeta, p, opt);
    Rhs r;
    r.traces = ops.transmission(psi);
    const TraceBundle& t = r.traces;
    const double e = p.eps, mu = p.mu, rp = p.rhobar_plus, rm = p.rhobar_minus;
    r.dzeta.resize(n);
    for (int i = 0; i < n; ++i) r.dzeta[i] = t.g_psi[i] / mu;
    r.dzeta = remove_mean(r.dzeta);

    const Field& zx = ops.zeta_x();
    const Field pxp = derivative(g, t.psi_plus), pxm = derivative(g, t.psi_minus);
    Field flux(n), nl(n);
    for (int i = 0; i < n; ++i) {
        const double den = 1.0 + e * e * mu * zx[i] * zx[i];
        flux[i] = zx[i] / std::sqrt(den);
        const double grad = rp * pxp[i] * pxp[i] - rm * pxm[i] * pxm[i];
        const double ww = rp * t.w_plus[i] * t.w_plus[i] - rm * t.w_minus[i] * t.w_minus[i];
        nl[i] = -0.5 * e * grad + 0.5 * e / mu * ww * den;
    }
    const Field cap = std::isinf(p.bond) ? Field(n, 0.0) : derivative(g, flux);
    r.dpsi.resize(n);
    for (int i = 0; i < n; ++i) r.dpsi[i] = -zeta[i] + nl[i] + (std::isinf(p.bond) ? 0.0 : cap[i] / p.bond);
    if (dealias_products) {
        r.dzeta = dealias(g, r.dzeta);
        r.dpsi = dealias(g, r.dpsi);
    }
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(r.dzeta[i]) || !std::isfinite(r.dpsi[i])) throw NumericalError("rhs: non-finite value");
    return r;
}

/// Classical RK4; solver, geometry and NaN failures become BreakdownError at the step start time.
inline EvolutionState rk4_step(const PeriodicGrid& g, const DimensionlessParams& p, const EvolutionState& s,
                               double dt, const SolveOptions& opt = {32, 1e-11, 0}, bool dealias_products = false) {
    const int n = g.n();
    auto axpy = [n](const Field& a, double c, const Field& b) {
        Field o(n);
        for (int i = 0; i < n; ++i) o[i] = a[i] + c * b[i];
        return o;
    };
    try {
        const Rhs k1 = rhs(g, p, s.zeta, s.psi, opt, dealias_products);
        const Rhs k2 = rhs(g, p, axpy(s.zeta, 0.5 * dt, k1.dzeta), axpy(s.psi, 0.5 * dt, k1.dpsi), opt,
                           dealias_products);
        const Rhs k3 = rhs(g, p, axpy(s.zeta, 0.5 * dt, k2.dzeta), axpy(s.psi, 0.5 * dt, k2.dpsi), opt,
                           dealias_products);
        const Rhs k4 = rhs(g, p, axpy(s.zeta, dt, k3.dzeta), axpy(s.psi, dt, k3.dpsi), opt, dealias_products);
        EvolutionState o{Field(n), Field(n), s.t + dt};
        for (int i = 0; i < n; ++i) {
            o.zeta[i] = s.zeta[i] + dt / 6.0 * (k1.dzeta[i] + 2.0 * k2.dzeta[i] + 2.0 * k3.dzeta[i] + k4.dzeta[i]);
            o.psi[i] = s.psi[i] + dt / 6.0 * (k1.dpsi[i] + 2.0 * k2.dpsi[i] + 2.0 * k3.dpsi[i] + k4.dpsi[i]);
            if (!std::isfinite(o.zeta[i]) || !std::isfinite(o.psi[i]))
                throw BreakdownError("non-finite state", s.t);
        }
        return o;
    } catch (const GeometryError& e) {
        throw BreakdownError(std::string("depth violation: ") + e.what(), s.t);
    } catch (const NumericalError& e) {
        throw BreakdownError(std::string("solver failure: ") + e.what(), s.t);
    }
}

/// Fraction of the spectral energy of u carried by the top third of the retained band
/// (retained band: n/3 with dealiasing, n/2 otherwise).
inline double tail_energy_fraction(const PeriodicGrid& g, const Field& u, bool dealiased = false) {
    const Spectrum s = fft(u);
    double tot = 0.0, tail = 0.0;
    const int kc = 2 * (dealiased ? g.n() / 3 : g.n() / 2) / 3;
    for (int k = 1; k < g.n_modes(); ++k) {
        const double e = std::norm(s[k]);
        tot += e;
        if (k > kc) tail += e;
    }
    return tot > 0.0 ? tail / tot : 0.0;
}

struct DiagnosticsRow {
    double t = 0.0;
    double mass = 0.0;  // integral of zeta
    double zeta_sup = 0.0;
    double jump_sup = 0.0;
    double tail_fraction = 0.0;
};

struct TimeSeries {
    PeriodicGrid grid;
    DimensionlessParams params;
    double dt = 0.0;
    std::vector<EvolutionState> snapshots;
    std::vector<DiagnosticsRow> diagnostics;
    std::optional<double> breakdown_time;
    std::string breakdown_reason;
    int steps = 0;

    const EvolutionState& final_state() const { return snapshots.back(); }

    void write_csv(std::ostream& os) const {
        os << "t,mass,zeta_sup,jump_sup,tail_fraction\n";
        os.precision(15);
        for (const auto& r : diagnostics)
            os << r.t << ',' << r.mass << ',' << r.zeta_sup << ',' << r.jump_sup << ',' << r.tail_fraction << '\n';
    }
};

inline DiagnosticsRow diagnose(const PeriodicGrid& g, const EvolutionState& s, const TraceBundle& t,
                               bool dealiased = false) {
    DiagnosticsRow r;
    r.t = s.t;
    double m = 0.0;
    for (double v : s.zeta) m += v;
    r.mass = m * g.dx();
    r.zeta_sup = sup_norm(s.zeta);
    r.jump_sup = sup_norm(t.jump_v());
    r.tail_fraction = tail_energy_fraction(g, s.zeta, dealiased);
    return r;
}

/// Integrates to t_end or breakdown; snapshots (and diagnostics) every cadence steps and at the end.
inline TimeSeries run(const EvolutionConfig& cfg, const Field& zeta0, const Field& psi0) {
    const PeriodicGrid g(cfg.n_points, cfg.length);
    if (zeta0.size() != static_cast<size_t>(g.n()) || psi0.size() != static_cast<size_t>(g.n()))
        throw ConfigError("run: initial data does not match n_points");
    if (!(cfg.t_end > 0.0)) throw ConfigError("run: t_end must be > 0");
    if (cfg.cadence < 1) throw ConfigError("run: cadence must be >= 1");
    const double cap = cfl_cap(cfg.params, g);
    const double dt0 = cfg.dt > 0.0 ? cfg.dt : 0.9 * cap;
    if (dt0 > cap * (1.0 + 1e-12))
        throw ConfigError("run: dt = " + std::to_string(dt0) + " exceeds the cap " + std::to_string(cap));
    const bool da = cfg.dealias_on();
    TimeSeries ts;
    ts.grid = g;
    ts.params = cfg.params;
    const long nsteps = std::lround(std::ceil(cfg.t_end / dt0 - 1e-9));
    const double dt = cfg.t_end / static_cast<double>(nsteps);
    ts.dt = dt;
    EvolutionState s{da ? dealias(g, zeta0) : zeta0, da ? dealias(g, psi0) : psi0, 0.0};
    auto record = [&](const EvolutionState& st) {
        const TwoFluid ops(g, st.zeta, cfg.params, cfg.solve);
        ts.snapshots.push_back(st);
        ts.diagnostics.push_back(diagnose(g, st, ops.transmission(st.psi), da));
    };
    try {
        record(s);
    } catch (const std::runtime_error& e) {
        throw ConfigError(std::string("run: invalid initial data: ") + e.what());
    }
    for (long k = 1; k <= nsteps; ++k) {
        try {
            EvolutionState nx = rk4_step(g, cfg.params, s, dt, cfg.solve, da);
            nx.t = k * dt;
            const double tf = tail_energy_fraction(g, nx.zeta, da);
            if (tf > cfg.tail_threshold)
                throw BreakdownError("spectral blow-up: tail energy fraction " + std::to_string(tf), nx.t);
            s = std::move(nx);
            ts.steps = static_cast<int>(k);
            if (k % cfg.cadence == 0 || k == nsteps) record(s);
        } catch (const BreakdownError& e) {
            ts.breakdown_time = e.time;
            ts.breakdown_reason = e.what();
            if (ts.snapshots.back().t != s.t) {
                try {
                    record(s);
                } catch (const std::runtime_error&) {
                    ts.snapshots.push_back(s);
                }
            }
            break;
        } catch (const std::runtime_error& e) {
            ts.breakdown_time = s.t;
            ts.breakdown_reason = e.what();
            break;
        }
    }
    return ts;
}

struct MonitorOptions {
    bool exact_e = true;  // Lanczos e(zeta) per snapshot; false -> flat mode-wise value
    double gamma = 0.0;
    std::optional<PhysicalConfig> physical{};
};

/// Criteria along a trajectory; d_t w± and d_t [V] by centered differences (one-sided at the ends).
inline std::vector<StabilityReport> monitor_criterion(const TimeSeries& ts, const SolveOptions& opt = {32, 1e-11, 0},
                                                      const MonitorOptions& mo = {}) {
    const size_t m = ts.snapshots.size();
    if (m < 3) throw ConfigError("monitor_criterion needs at least 3 snapshots");
    const PeriodicGrid& g = ts.grid;
    std::vector<TraceBundle> tr;
    tr.reserve(m);
    for (const auto& s : ts.snapshots) tr.push_back(TwoFluid(g, s.zeta, ts.params, opt).transmission(s.psi));
    std::vector<StabilityReport> out;
    for (size_t i = 0; i < m; ++i) {
        const size_t a = i == 0 ? 0 : i - 1, b = i + 1 == m ? i : i + 1;
        const double h = ts.snapshots[b].t - ts.snapshots[a].t;
        const TraceBundle* prev = i == 0 ? nullptr : &tr[a];
        const TraceBundle* next = i + 1 == m ? nullptr : &tr[b];
        const double step = (prev && next) ? 0.5 * h : h;
        const AField af = a_field(g, ts.params, tr[i], prev, next, step);
        const Field ja = tr[a].jump_v(), jb = tr[b].jump_v();
        Field djdt(g.n());
        for (int k = 0; k < g.n(); ++k) djdt[k] = (jb[k] - ja[k]) / h;
        StabilityInputs in{g, ts.params, ts.snapshots[i].zeta, tr[i].jump_v(), djdt, af.a};
        in.gamma = mo.gamma;
        in.physical = mo.physical;
        in.e_coeff = mo.exact_e ? e_coeff(TwoFluid(g, ts.snapshots[i].zeta, ts.params, opt), 1e-8).value
                                : e_flat_discrete(g, ts.params);
        out.push_back(evaluate_criteria(in));
    }
    return out;
}

/// Binary dump: one JSON header line, then zeta and psi as little-endian float64.
inline void write_dump(const std::string& path, const PeriodicGrid& g, const DimensionlessParams& p,
                       const EvolutionState& s) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path + " for writing");
    nlohmann::ordered_json h;
    h["n_points"] = g.n();
    h["length"] = g.length();
    h["time"] = s.t;
    h["params"] = {{"rhobar_plus", p.rhobar_plus}, {"eps", p.eps},           {"mu", p.mu},
                   {"hbar_plus", p.hbar_plus},     {"hbar_minus", p.hbar_minus},
                   {"bond", std::isinf(p.bond) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(p.bond)}};
    h["layout"] = "zeta[n_points] psi[n_points] float64 little-endian";
    f << h.dump() << '\n';
    auto put = [&f](const Field& u) {
        for (double v : u) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, 8);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
            f.write(reinterpret_cast<const char*>(b), 8);
        }
    };
    put(s.zeta);
    put(s.psi);
}

struct Dump {
    nlohmann::json header;
    EvolutionState state;
};

inline Dump read_dump(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open " + path);
    std::string line;
    std::getline(f, line);
    Dump d;
    d.header = nlohmann::json::parse(line);
    const int n = d.header.at("n_points").get<int>();
    auto get = [&f, n]() {
        Field u(n);
        for (double& v : u) {
            unsigned char b[8];
            f.read(reinterpret_cast<char*>(b), 8);
            if (!f) throw ConfigError("truncated dump");
            std::uint64_t bits = 0;
            for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
            std::memcpy(&v, &bits, 8);
        }
        return u;
    };
    d.state.zeta = get();
    d.state.psi = get();
    d.state.t = d.header.at("time").get<double>();
    return d;
}

/// Linear angular frequency of mode k: omega^2 = (1 + k^2/Bo) (1/mu) cal G[0](k).
inline double linear_frequency(const DimensionlessParams& p, double k) {
    const double cap = std::isinf(p.bond) ? 0.0 : k * k / p.bond;
    return std::sqrt((1.0 + cap) * flat::G(p, k) / p.mu);
}

}  // namespace kh
