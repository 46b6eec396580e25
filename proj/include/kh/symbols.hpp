#pragma once

// Symbols with tail of the layer Dirichlet-Neumann operators (d = 1) and a
// harness measuring G+ psi - Op(S+) psi against the elliptic solver.
//
// g = |xi|,  t± = (1 ± eps± zeta) arctan(y)/y |xi|,  y = eps sqrt(mu) zeta_x,
// S± = sqrt(mu±) g tanh(sqrt(mu±) t±) > 0 approximates ±G±.
// S_J and S~ are written with the positive S±, so they are the flat symbols
// of J and tildeG exactly when zeta = 0.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kh/spectral.hpp"
#include "kh/strip.hpp"
#include "kh/two_fluid.hpp"

namespace kh {

/// arctan(y)/y with the removable singularity at 0.
inline double atan_ratio(double y) {
    if (std::abs(y) < 1e-6) return 1.0 - y * y / 3.0;
    return std::atan(y) / y;
}

/// Closed-form t±; slope = eps sqrt(mu) zeta_x (= eps± sqrt(mu±) zeta_x).
inline double eval_t(double zeta, double slope, double xi, double eps_layer, Layer l) {
    return (1.0 + layer_sign(l) * eps_layer * zeta) * atan_ratio(slope) * std::abs(xi);
}

/// General quadrature definition of t± (d = 1 reduction of the integrand).
inline double t_quadrature(double zeta, double slope, double xi, double eps_layer, Layer l) {
    auto f = [&](double z) { return std::abs(xi) / (1.0 + slope * slope * (z + 1.0) * (z + 1.0)); };
    const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -1.0, 0.0, 15, 1e-14);
    return (1.0 + layer_sign(l) * eps_layer * zeta) * integral;
}

inline double eval_S(double zeta, double slope, double xi, double eps_layer, double mu_layer, Layer l) {
    const double sm = std::sqrt(mu_layer);
    return sm * std::abs(xi) * std::tanh(sm * eval_t(zeta, slope, xi, eps_layer, l));
}

/// Symbols attached to a sampled interface.
class TailSymbolSet {
public:
    TailSymbolSet(const PeriodicGrid& g, const Field& zeta, const DimensionlessParams& p)
        : grid_(g), zeta_(zeta), zeta_x_(derivative(g, zeta)), p_(p), slope_scale_(p.eps * std::sqrt(p.mu)) {}

    const PeriodicGrid& grid() const { return grid_; }
    const DimensionlessParams& params() const { return p_; }

    double g(int, double xi) const { return std::abs(xi); }
    double t(int i, double xi, Layer l) const { return eval_t(zeta_[i], slope(i), xi, eps(l), l); }
    double S(int i, double xi, Layer l) const { return eval_S(zeta_[i], slope(i), xi, eps(l), mu(l), l); }
    double S_J(int i, double xi) const {
        if (xi == 0.0 || p_.rhobar_minus == 0.0) return p_.rhobar_plus;
        return p_.rhobar_plus + p_.rhobar_minus * (p_.hbar_minus / p_.hbar_plus) * S(i, xi, Layer::Plus) /
                                    S(i, xi, Layer::Minus);
    }
    double S_tilde(int i, double xi) const {
        return p_.rhobar_plus * S(i, xi, Layer::Minus) / p_.hbar_minus +
               p_.rhobar_minus * S(i, xi, Layer::Plus) / p_.hbar_plus;
    }
    /// S+/S- (0 at xi = 0: the composed operator kills constants).
    double ratio_pm(int i, double xi) const {
        return xi == 0.0 ? 0.0 : S(i, xi, Layer::Plus) / S(i, xi, Layer::Minus);
    }
    double ratio_pm_J(int i, double xi) const { return ratio_pm(i, xi) / S_J(i, xi); }
    /// P^2 / S~ with P^2 = xi^2 / (1 + sqrt(mu)|xi|).
    double p2_over_S_tilde(int i, double xi) const {
        if (xi == 0.0) return 0.0;
        return xi * xi / (1.0 + std::sqrt(p_.mu) * std::abs(xi)) / S_tilde(i, xi);
    }

    /// Wraps a member evaluator as a SymbolFn on this grid.
    template <class F>
    SymbolFn symbol(F f, std::string name) const {
        const bool flat = (p_.eps == 0.0);
        return SymbolFn{[this, f](double x, double xi) { return f(index(x), xi); }, std::move(name), flat};
    }
    SymbolFn S_fn(Layer l) const {
        return symbol([this, l](int i, double xi) { return S(i, xi, l); }, std::string("S") + to_string(l));
    }
    SymbolFn S_J_fn() const {
        return symbol([this](int i, double xi) { return S_J(i, xi); }, "S_J");
    }
    SymbolFn S_tilde_fn() const {
        return symbol([this](int i, double xi) { return S_tilde(i, xi); }, "S_tilde");
    }

private:
    int index(double x) const {
        const int n = grid_.n();
        int i = static_cast<int>(std::lround(x / grid_.dx())) % n;
        return i < 0 ? i + n : i;
    }
    double slope(int i) const { return slope_scale_ * zeta_x_[i]; }
    double eps(Layer l) const { return l == Layer::Plus ? p_.eps_plus : p_.eps_minus; }
    double mu(Layer l) const { return l == Layer::Plus ? p_.mu_plus : p_.mu_minus; }

    PeriodicGrid grid_;
    Field zeta_, zeta_x_;
    DimensionlessParams p_;
    double slope_scale_;
};

/// (4 G_{nz} - G_{nz/2}) / 3: removes the O(dz^2) term of the layer operator.
inline Field dn_apply_richardson(const DiffeoData& d, const Field& psi, const SolveOptions& opt) {
    const Field fine = dn_apply(d, psi, opt);
    SolveOptions coarse = opt;
    coarse.nz = opt.nz / 2;
    const Field c = dn_apply(d, psi, coarse);
    Field out(fine.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = (4.0 * fine[i] - c[i]) / 3.0;
    return out;
}

struct TailRow {
    double eps = 0.0, mu = 0.0;
    double err_hs = 0.0;       // |G+ psi - Op(S+) psi|_{H^s}
    double err_hs_half = 0.0;  // same in H^{s+1/2}
    double norm_psi = 0.0;     // |psi|_{Hdot_mu^{s+1/2}}
    double ratio = 0.0;        // err_hs_half / |G+ psi|_{H^{s+1/2}}
    double ratio_tailless = 0.0;  // same with sqrt(mu) g instead of S+
    bool fitted = true;           // false when the point failed
    std::string error;
};

struct TailReport {
    std::vector<TailRow> rows;
    std::optional<double> eps_exponent;       // fit of err_hs_half vs eps at the most common mu
    std::optional<double> eps_exponent_hs;    // same for err_hs
    std::optional<double> mu_exponent;        // fit of err_hs_half vs mu at the most common eps
    void write_csv(std::ostream& os) const {
        os << "eps,mu,err_hs,err_hs_half,norm_psi,ratio,fitted\n";
        os.precision(10);
        for (const auto& r : rows)
            os << r.eps << ',' << r.mu << ',' << r.err_hs << ',' << r.err_hs_half << ',' << r.norm_psi << ','
               << r.ratio << ',' << (r.fitted ? 1 : 0) << '\n';
    }
};

/// Least-squares slope of log(y) against log(x).
inline std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    if (lx.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

struct TailOptions {
    double s = 0.0;
    int nz = 256;
    double tol = 1e-12;
};

/// Sweep (eps, mu) for the unit-depth "+" layer with interface eps zeta and
/// potential psi. The exact operator is the z-extrapolated elliptic solve.
inline TailReport tail_error_report(const PeriodicGrid& g, const Field& zeta, const Field& psi,
                                    const std::vector<std::pair<double, double>>& sweep, const TailOptions& o = {}) {
    TailReport rep;
    for (const auto& [eps, mu] : sweep) {
        TailRow r;
        r.eps = eps;
        r.mu = mu;
        try {
            const DiffeoData d = build_trivial_diffeo(g, zeta, eps, mu, Layer::Plus);
            const Field exact = dn_apply_richardson(d, psi, SolveOptions{o.nz, o.tol, 0});
            DimensionlessParams p = nondim_params(1.0, 1.0, eps, mu);
            p.eps_plus = eps;
            p.mu_plus = mu;
            const TailSymbolSet sym(g, zeta, p);
            const Field approx = apply_symbol(g, sym.S_fn(Layer::Plus), psi);
            const double sm = std::sqrt(mu);
            const Field tailless =
                apply_multiplier(g, [sm](double xi) { return sm * std::abs(xi); }, psi);
            Field diff(g.n()), diff0(g.n());
            for (int i = 0; i < g.n(); ++i) {
                diff[i] = exact[i] - approx[i];
                diff0[i] = exact[i] - tailless[i];
            }
            r.err_hs = norm_sobolev(g, diff, o.s);
            r.err_hs_half = norm_sobolev(g, diff, o.s + 0.5);
            r.norm_psi = norm_hdot_mu(g, psi, o.s + 0.5, mu);
            const double ng = norm_sobolev(g, exact, o.s + 0.5);
            r.ratio = ng > 0.0 ? r.err_hs_half / ng : 0.0;
            r.ratio_tailless = ng > 0.0 ? norm_sobolev(g, diff0, o.s + 0.5) / ng : 0.0;
        } catch (const std::exception& e) {
            r.fitted = false;
            r.error = e.what();
        }
        rep.rows.push_back(r);
    }
    auto most_common = [&](auto key) {
        double best = 0.0;
        size_t cnt = 0;
        for (const auto& a : rep.rows) {
            size_t c = 0;
            for (const auto& b : rep.rows) c += (key(a) == key(b));
            if (c > cnt) {
                cnt = c;
                best = key(a);
            }
        }
        return best;
    };
    const double mu0 = most_common([](const TailRow& r) { return r.mu; });
    const double eps0 = most_common([](const TailRow& r) { return r.eps; });
    std::vector<double> ex, ey, ey0, mx, my;
    for (const auto& r : rep.rows) {
        if (!r.fitted) continue;
        if (r.mu == mu0 && r.eps > 0.0) {
            ex.push_back(r.eps);
            ey.push_back(r.err_hs_half);
            ey0.push_back(r.err_hs);
        }
        if (r.eps == eps0 && r.eps > 0.0) {
            mx.push_back(r.mu);
            my.push_back(r.err_hs_half);
        }
    }
    rep.eps_exponent = loglog_slope(ex, ey);
    rep.eps_exponent_hs = loglog_slope(ex, ey0);
    rep.mu_exponent = loglog_slope(mx, my);
    return rep;
}

enum class RatioKind { PlusOverMinus, PlusOverMinusJ, P2OverTilde };

struct RatioSymbolReport {
    double discrepancy = 0.0;  // Hdot_mu^{1/2} norm (H^{1/2} for P2OverTilde)
    double reference = 0.0;    // same norm of the exact composed operator output
    double relative = 0.0;
    double predicted_factor = 0.0;  // eps mu^{-1/4}, or eps mu^{-5/4} for P2OverTilde
};

/// Exact composed operators versus one symbolic application:
///  PlusOverMinus:  -(G-)^{-1} G+ f            vs Op(S+/S-) f
///  PlusOverMinusJ: -(1/H+) (G-)^{-1} G+ J^{-1} f vs (1/H+) Op(S+/(S- S_J)) f
///  P2OverTilde:    P^2 tildeG^{-1} d_x f       vs Op(P^2/S~) d_x f
inline RatioSymbolReport ratio_symbol_error(const TwoFluid& ops, const Field& f, RatioKind which) {
    const PeriodicGrid& g = ops.grid();
    const DimensionlessParams& p = ops.params();
    const TailSymbolSet sym(g, ops.zeta(), p);
    Field exact, approx;
    double norm_s = 0.5;
    switch (which) {
        case RatioKind::PlusOverMinus: {
            exact = ops.layer_G_minus_inverse(remove_mean(ops.layer_G(Layer::Plus, f)));
            for (double& v : exact) v = -v;
            approx = apply_symbol(g, sym.symbol([&](int i, double xi) { return sym.ratio_pm(i, xi); }, "S+/S-"), f);
            break;
        }
        case RatioKind::PlusOverMinusJ: {
            const Field jf = ops.invert_J(f);
            exact = ops.layer_G_minus_inverse(remove_mean(ops.layer_G(Layer::Plus, jf)));
            for (double& v : exact) v = -v / p.hbar_plus;
            approx = apply_symbol(
                g, sym.symbol([&](int i, double xi) { return sym.ratio_pm_J(i, xi) / p.hbar_plus; }, "S+/(S-S_J)"), f);
            break;
        }
        case RatioKind::P2OverTilde: {
            const Field fx = derivative(g, f);
            const double sm = std::sqrt(p.mu);
            exact = apply_multiplier(
                g, [sm](double xi) { return xi * xi / (1.0 + sm * std::abs(xi)); }, ops.invert_tildeG(remove_mean(fx)));
            approx = apply_symbol(
                g, sym.symbol([&](int i, double xi) { return sym.p2_over_S_tilde(i, xi); }, "P2/S~"), fx);
            norm_s = 0.0;
            break;
        }
    }
    Field diff(g.n());
    for (int i = 0; i < g.n(); ++i) diff[i] = exact[i] - approx[i];
    RatioSymbolReport r;
    if (which == RatioKind::P2OverTilde) {
        r.discrepancy = norm_sobolev(g, diff, norm_s + 0.5);
        r.reference = norm_sobolev(g, exact, norm_s + 0.5);
        r.predicted_factor = p.eps * std::pow(p.mu, -1.25);
    } else {
        r.discrepancy = norm_hdot_mu(g, diff, norm_s, p.mu);
        r.reference = norm_hdot_mu(g, exact, norm_s, p.mu);
        r.predicted_factor = p.eps * std::pow(p.mu, -0.25);
    }
    r.relative = r.reference > 0.0 ? r.discrepancy / r.reference : 0.0;
    return r;
}

}  // namespace kh
