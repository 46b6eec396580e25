#pragma once

// Two-fluid operators built from the single-layer strips.
//
// Layer operators are the unit-depth G±_{mu±}[eps± zeta]; the two-fluid
// quantities carry the 1/H± scaling. With S± >= 0 the Schur complements of
// the strips (G+ = S+, G- = -S-):
//   transmission:  psi+ = psi + rho- m,  psi- = -psi + rho+ m, and m minimizes
//                  (rho+/H+) E+(psi+) + (rho-/H-) E-(psi-),
//                  which is exactly (1/H+) G+ psi+ = (1/H-) G- psi-;
//   cal G psi   = (1/H+) G+ psi+;
//   tilde G     = rho+ S-/H- + rho- S+/H+ = -(rho+ G-/H- - rho- G+/H+) >= 0;
//   E           = -d_x tildeG^{-1} d_x, Fourier symbol xi^2 / tildeG >= 0.
// All inverses are gauged by zero mean (psi- for the transmission problem).

#include <cmath>
#include <memory>
#include <vector>

#include "kh/spectral.hpp"
#include "kh/strip.hpp"
#include "kh/units.hpp"

namespace kh {

struct InterfaceState {
    PeriodicGrid grid;
    Field zeta;
    Field psi;
    DimensionlessParams params;
};

struct TraceBundle {
    Field psi_plus, psi_minus;
    Field v_plus, v_minus;
    Field w_plus, w_minus;
    Field g_psi;  // cal G psi
    int iterations = 0;

    Field jump_v() const {
        Field j(v_plus.size());
        for (size_t i = 0; i < j.size(); ++i) j[i] = v_plus[i] - v_minus[i];
        return j;
    }
    Field mean_v() const {
        Field a(v_plus.size());
        for (size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (v_plus[i] + v_minus[i]);
        return a;
    }
};

/// Flat Fourier symbols (argument: signed wavenumber).
namespace flat {

inline double layer_G(double mu_layer, double xi) {
    const double y = std::sqrt(mu_layer) * std::abs(xi);
    return y * std::tanh(y);
}

inline double J(const DimensionlessParams& p, double xi) {
    if (xi == 0.0 || p.rhobar_minus == 0.0) return p.rhobar_plus;
    return p.rhobar_plus +
           p.rhobar_minus * (p.hbar_minus / p.hbar_plus) * layer_G(p.mu_plus, xi) / layer_G(p.mu_minus, xi);
}

/// cal G[0] = sqrt(mu)|xi| tanh(sqrt(mu+)|xi|) tanh(sqrt(mu-)|xi|) / (rho+ tanh(sqrt(mu-)|xi|) + rho- tanh(sqrt(mu+)|xi|)).
inline double G(const DimensionlessParams& p, double xi) {
    const double a = std::abs(xi);
    if (a == 0.0) return 0.0;
    const double tp = std::tanh(std::sqrt(p.mu_plus) * a), tm = std::tanh(std::sqrt(p.mu_minus) * a);
    return std::sqrt(p.mu) * a * tp * tm / (p.rhobar_plus * tm + p.rhobar_minus * tp);
}

/// tilde G[0] = x (rho+ tanh(H- x) + rho- tanh(H+ x)), x = sqrt(mu)|xi|.
inline double tildeG(const DimensionlessParams& p, double xi) {
    const double x = std::sqrt(p.mu) * std::abs(xi);
    return x * (p.rhobar_plus * std::tanh(p.hbar_minus * x) + p.rhobar_minus * std::tanh(p.hbar_plus * x));
}

inline double E(const DimensionlessParams& p, double xi) {
    if (xi == 0.0) return 0.0;
    return xi * xi / tildeG(p, xi);
}

}  // namespace flat

/// Operators attached to one interface shape zeta. Not thread-safe (owns
/// solver workspaces); use one instance per thread.
class TwoFluid {
public:

    TwoFluid(const PeriodicGrid& g, const Field& zeta, const DimensionlessParams& p, SolveOptions opt = {},
             double h_min = 1e-6)
        : grid_(g), zeta_(zeta), p_(p), opt_(opt),
          dp_(build_trivial_diffeo(g, zeta, p.eps_plus, p.mu_plus, Layer::Plus, h_min)),
          dm_(build_trivial_diffeo(g, zeta, p.eps_minus, p.mu_minus, Layer::Minus, h_min)),
          op_p_(std::make_unique<StripOperator>(dp_, opt.nz)),
          op_m_(std::make_unique<StripOperator>(dm_, opt.nz)),
          zeta_x_(dp_.zeta_x) {}

    const PeriodicGrid& grid() const { return grid_; }
    const DimensionlessParams& params() const { return p_; }
    const Field& zeta() const { return zeta_; }
    const Field& zeta_x() const { return zeta_x_; }
    const DiffeoData& diffeo(Layer l) const { return l == Layer::Plus ? dp_ : dm_; }
    const StripOperator& op(Layer l) const { return l == Layer::Plus ? *op_p_ : *op_m_; }
    const SolveOptions& options() const { return opt_; }
    int last_iterations() const { return last_iterations_; }

    /// Unit-depth layer operator G± u.
    Field layer_G(Layer l, const Field& u) const {
        ChainSystem sys(grid_, opt_.nz, {{&op(l), 1.0, 0.0, u}}, false);
        std::vector<double> x;
        run(sys, sys.rhs(nullptr), x);
        return interface_flux(sys, 0, x, layer_sign(l));
    }

    /// (G-)^{-1} g with zero-mean trace.
    Field layer_G_minus_inverse(const Field& g) const {
        const StripSolution s = solve_neumann(dm_, g, opt_);
        return s.trace();
    }

    TraceBundle transmission(const Field& psi) const {
        const int n = grid_.n();
        const double rp = p_.rhobar_plus, rm = p_.rhobar_minus;
        TraceBundle t;
        Field gp;
        if (rm == 0.0) {
            t.psi_plus = psi;
            gp = layer_G(Layer::Plus, psi);
            Field data(n);
            for (int i = 0; i < n; ++i) data[i] = p_.hbar_minus / p_.hbar_plus * gp[i];
            t.psi_minus = layer_G_minus_inverse(remove_mean(data));
        } else {
            Field neg(psi);
            for (double& v : neg) v = -v;
            ChainSystem sys(grid_, opt_.nz,
                            {{op_p_.get(), rp / p_.hbar_plus, rm, psi}, {op_m_.get(), rm / p_.hbar_minus, rp, neg}},
                            true);
            std::vector<double> x;
            run(sys, sys.rhs(nullptr), x);
            // gauge: psi- has zero mean and zero Nyquist coefficient
            double nyq = 0.0, sg = 1.0;
            for (int i = 0; i < n; ++i, sg = -sg) nyq += sg * psi[i];
            sys.gauge_interface(x, mean(psi) / rp, nyq / n / rp);
            t.psi_plus.resize(n);
            t.psi_minus.resize(n);
            const double* m = &x[static_cast<size_t>(sys.m_level()) * n];
            for (int i = 0; i < n; ++i) {
                t.psi_plus[i] = psi[i] + rm * m[i];
                t.psi_minus[i] = -psi[i] + rp * m[i];
            }
            gp = interface_flux(sys, 0, x, 1.0);
        }
        t.iterations = last_iterations_;
        t.g_psi.resize(n);
        for (int i = 0; i < n; ++i) t.g_psi[i] = gp[i] / p_.hbar_plus;
        fill_velocities(t);
        return t;
    }

    Field apply_G(const Field& psi) const { return transmission(psi).g_psi; }
    Field invert_J(const Field& psi) const { return transmission(psi).psi_plus; }

    /// J u = rho+ u - rho- (H-/H+) (G-)^{-1} G+ u, computed literally.
    Field apply_J(const Field& u) const {
        const int n = grid_.n();
        if (p_.rhobar_minus == 0.0) {
            Field out(u);
            for (double& v : out) v *= p_.rhobar_plus;
            return out;
        }
        const Field gp = remove_mean(layer_G(Layer::Plus, u));
        const Field inv = layer_G_minus_inverse(gp);
        Field out(n);
        const double r = p_.hbar_minus / p_.hbar_plus;
        for (int i = 0; i < n; ++i) out[i] = p_.rhobar_plus * u[i] - p_.rhobar_minus * r * inv[i];
        return out;
    }

    Field apply_tildeG(const Field& u) const {
        const int n = grid_.n();
        Field out(n, 0.0);
        const Field gm = layer_G(Layer::Minus, u);
        for (int i = 0; i < n; ++i) out[i] = -p_.rhobar_plus / p_.hbar_minus * gm[i];
        if (p_.rhobar_minus != 0.0) {
            const Field gp = layer_G(Layer::Plus, u);
            for (int i = 0; i < n; ++i) out[i] += p_.rhobar_minus / p_.hbar_plus * gp[i];
        }
        return out;
    }

    /// tildeG^{-1} f for mean-zero f, result gauged to zero mean.
    Field invert_tildeG(const Field& f) const {
        double scale = 1.0;
        for (double v : f) scale = std::max(scale, std::abs(v));
        if (std::abs(mean(f)) > 1e-10 * scale)
            throw IncompatibleData("tildeG^{-1} needs mean-zero data (mean = " + std::to_string(mean(f)) + ")");
        std::vector<ChainSystem::Slot> slots;
        if (p_.rhobar_minus != 0.0) slots.push_back({op_p_.get(), p_.rhobar_minus / p_.hbar_plus, 1.0, {}});
        slots.push_back({op_m_.get(), p_.rhobar_plus / p_.hbar_minus, 1.0, {}});
        ChainSystem sys(grid_, opt_.nz, slots, true);
        std::vector<double> x;
        run(sys, sys.rhs(&f), x);
        sys.gauge_interface(x, 0.0);
        const int n = grid_.n();
        const double* m = &x[static_cast<size_t>(sys.m_level()) * n];
        return Field(m, m + n);
    }

    /// E V = -d_x tildeG^{-1} d_x V.
    Field apply_E(const Field& v) const {
        const Field dv = derivative(grid_, v);
        Field r = derivative(grid_, invert_tildeG(remove_mean(dv)));
        for (double& x : r) x = -x;
        return r;
    }

private:
    void run(const ChainSystem& sys, const std::vector<double>& b, std::vector<double>& x) const {
        const PcgResult r = sys.solve(b, x, opt_);
        last_iterations_ = r.iterations;
    }

    // sign * (A phi)_0 of slot s, i.e. the unit-depth G of that layer.
    Field interface_flux(const ChainSystem& sys, int slot, const std::vector<double>& x, double sign) const {
        std::vector<double> full;
        sys.gather(slot, x, full, true);
        Field g = detail::interface_row(*sys.slots()[slot].op, full);
        for (double& v : g) v *= sign;
        return g;
    }

    void fill_velocities(TraceBundle& t) const {
        const int n = grid_.n();
        const double e = p_.eps, mu = p_.mu;
        const Field pxp = derivative(grid_, t.psi_plus), pxm = derivative(grid_, t.psi_minus);
        t.w_plus.resize(n);
        t.w_minus.resize(n);
        t.v_plus.resize(n);
        t.v_minus.resize(n);
        for (int i = 0; i < n; ++i) {
            const double zx = zeta_x_[i];
            const double den = 1.0 + e * e * mu * zx * zx;
            // (1/H+) G+ psi+ = (1/H-) G- psi- = cal G psi
            t.w_plus[i] = (t.g_psi[i] + e * mu * zx * pxp[i]) / den;
            t.w_minus[i] = (t.g_psi[i] + e * mu * zx * pxm[i]) / den;
            t.v_plus[i] = pxp[i] - e * t.w_plus[i] * zx;
            t.v_minus[i] = pxm[i] - e * t.w_minus[i] * zx;
        }
    }

    PeriodicGrid grid_;
    Field zeta_;
    DimensionlessParams p_;
    SolveOptions opt_;
    DiffeoData dp_, dm_;
    std::unique_ptr<StripOperator> op_p_, op_m_;
    Field zeta_x_;
    mutable int last_iterations_ = 0;
};

/// State-level entry points.
inline TwoFluid make_ops(const InterfaceState& s, const SolveOptions& opt = {}) {
    return TwoFluid(s.grid, s.zeta, s.params, opt);
}
inline Field apply_J(const InterfaceState& s, const Field& u, const SolveOptions& opt = {}) {
    return make_ops(s, opt).apply_J(u);
}
inline Field invert_J(const InterfaceState& s, const Field& psi, const SolveOptions& opt = {}) {
    return make_ops(s, opt).invert_J(psi);
}
inline Field apply_G(const InterfaceState& s, const Field& psi, const SolveOptions& opt = {}) {
    return make_ops(s, opt).apply_G(psi);
}
inline TraceBundle transmission_solve(const InterfaceState& s, const SolveOptions& opt = {}) {
    return make_ops(s, opt).transmission(s.psi);
}
inline Field apply_tildeG(const InterfaceState& s, const Field& u, const SolveOptions& opt = {}) {
    return make_ops(s, opt).apply_tildeG(u);
}
inline Field invert_tildeG(const InterfaceState& s, const Field& f, const SolveOptions& opt = {}) {
    return make_ops(s, opt).invert_tildeG(f);
}
inline Field apply_E(const InterfaceState& s, const Field& v, const SolveOptions& opt = {}) {
    return make_ops(s, opt).apply_E(v);
}

}  // namespace kh
