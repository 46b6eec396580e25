#pragma once

// Single-layer Dirichlet-Neumann operators on the straightened unit strip.
//
// Layer "+" occupies z in (-1, 0), layer "-" occupies z in (0, 1); the
// interface is z = 0. Both are discretized in the distance s = |z| from the
// interface: nodes s_j = j h, j = 0..nz, with spectral derivatives in x.
// The discrete operator is the gradient of the quadratic energy
//   E(phi) = sum_{half cells} h sum_x (a, b) P (a, b)^T,
//   a = sqrt(mu) D (phi_j + phi_{j+1}) / 2,  b = (phi_{j+1} - phi_j) / h,
// so it is symmetric and positive semidefinite by construction, and the
// Dirichlet-Neumann map is its Schur complement on the interface level.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kh/errors.hpp"
#include "kh/spectral.hpp"

namespace kh {

enum class Layer { Plus, Minus };

inline double layer_sign(Layer l) { return l == Layer::Plus ? 1.0 : -1.0; }
inline const char* to_string(Layer l) { return l == Layer::Plus ? "+" : "-"; }

struct PEntries {
    double p11, p12, p22;
};

/// Trivial diffeomorphism Sigma(x, z) = (x, z + sigma(x, z)) with
/// sigma = eps (1 ± z) zeta(x).
struct DiffeoData {
    PeriodicGrid grid;
    Field zeta;
    Field zeta_x;
    double eps_layer = 0.0;
    double mu_layer = 1.0;
    Layer layer = Layer::Plus;

    double sgn() const { return layer_sign(layer); }
    double sigma(int i, double z) const { return eps_layer * (1.0 + sgn() * z) * zeta[i]; }
    double dz_sigma(int i) const { return sgn() * eps_layer * zeta[i]; }
    double dx_sigma(int i, double z) const { return eps_layer * (1.0 + sgn() * z) * zeta_x[i]; }
    /// Entries of P(Sigma) acting on (sqrt(mu) d_x, d_z).
    PEntries p(int i, double z) const {
        const double p11 = 1.0 + dz_sigma(i);
        const double sx = dx_sigma(i, z);
        return {p11, -std::sqrt(mu_layer) * sx, (1.0 + mu_layer * sx * sx) / p11};
    }
    /// min over x of 1 ± eps zeta.
    double min_depth() const {
        double m = 1e300;
        for (double z : zeta) m = std::min(m, 1.0 + sgn() * eps_layer * z);
        return m;
    }
};

inline DiffeoData build_trivial_diffeo(const PeriodicGrid& g, const Field& zeta, double eps_layer, double mu_layer,
                                       Layer layer, double h_min = 1e-6) {
    if (static_cast<int>(zeta.size()) != g.n()) throw ConfigError("zeta does not match the grid");
    if (!(mu_layer > 0.0)) throw ConfigError("mu_layer must be > 0");
    DiffeoData d{g, zeta, derivative(g, zeta), eps_layer, mu_layer, layer};
    const double md = d.min_depth();
    if (!(md >= h_min))
        throw GeometryError(std::string("nonvanishing depth violated in layer ") + to_string(layer) +
                            ": min(1 " + (layer == Layer::Plus ? "+" : "-") + " eps zeta) = " + std::to_string(md));
    return d;
}

struct SolveOptions {
    int nz = 64;
    double tol = 1e-10;
    int max_iter = 0;  // 0 -> 10 * nx * nz
};

/// Matrix-free operator of one layer on all nodes j = 0..nz.
class StripOperator {
public:
    StripOperator(const DiffeoData& d, int nz) : grid_(d.grid), nz_(nz), h_(1.0 / nz), smu_(std::sqrt(d.mu_layer)) {
        if (nz < 2) throw ConfigError("nz must be >= 2");
        const int n = grid_.n();
        p11_.resize(n);
        p12s_.assign(static_cast<size_t>(nz) * n, 0.0);
        p22_.assign(static_cast<size_t>(nz) * n, 0.0);
        q22_.assign(nz, 0.0);
        // dz/ds = -sgn: s is the distance from the interface
        const double dzds = -d.sgn();
        double q11 = 0.0;
        for (int i = 0; i < n; ++i) {
            p11_[i] = 1.0 + d.dz_sigma(i);
            q11 += p11_[i];
        }
        q11_ = q11 / n;
        flat_ = (d.eps_layer == 0.0);
        for (int c = 0; c < nz; ++c) {
            const double s = (c + 0.5) * h_;
            const double z = dzds * s;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                const PEntries pe = d.p(i, z);
                p12s_[static_cast<size_t>(c) * n + i] = pe.p12 * dzds;
                p22_[static_cast<size_t>(c) * n + i] = pe.p22;
                acc += pe.p22;
            }
            q22_[c] = acc / n;
        }
        work_.resize(grid_.n_modes());
        dphi_.resize(static_cast<size_t>(nz + 1) * n);
        acc_.resize(static_cast<size_t>(nz + 1) * n);
        tmp_.resize(n);
    }

    const PeriodicGrid& grid() const { return grid_; }
    int nz() const { return nz_; }
    double h() const { return h_; }
    double sqrt_mu() const { return smu_; }
    double q11() const { return q11_; }
    double q22(int c) const { return q22_[c]; }
    const Field& p11() const { return p11_; }

    /// out = A phi on all nodes (both arrays hold nz + 1 levels of n values).
    void apply(const double* phi, double* out) const {
        const int n = grid_.n();
        for (int j = 0; j <= nz_; ++j) {
            double* dj = &dphi_[static_cast<size_t>(j) * n];
            derivative_inplace(grid_, phi + static_cast<size_t>(j) * n, dj, work_.data());
            for (int i = 0; i < n; ++i) dj[i] *= smu_;
        }
        std::fill(acc_.begin(), acc_.end(), 0.0);
        std::fill(out, out + static_cast<size_t>(nz_ + 1) * n, 0.0);
        const double ih = 1.0 / h_;
        for (int c = 0; c < nz_; ++c) {
            const double* f0 = phi + static_cast<size_t>(c) * n;
            const double* f1 = f0 + n;
            const double* d0 = &dphi_[static_cast<size_t>(c) * n];
            const double* d1 = d0 + n;
            const double* p12 = &p12s_[static_cast<size_t>(c) * n];
            const double* p22 = &p22_[static_cast<size_t>(c) * n];
            double* g0 = &acc_[static_cast<size_t>(c) * n];
            double* g1 = g0 + n;
            double* o0 = out + static_cast<size_t>(c) * n;
            double* o1 = o0 + n;
            for (int i = 0; i < n; ++i) {
                const double a = 0.5 * (d0[i] + d1[i]);
                const double b = (f1[i] - f0[i]) * ih;
                const double fa = p11_[i] * a + p12[i] * b;
                const double fb = p12[i] * a + p22[i] * b;
                g0[i] += 0.5 * fa;
                g1[i] += 0.5 * fa;
                o0[i] -= fb;
                o1[i] += fb;
            }
        }
        const double sc = -h_ * smu_;
        for (int j = 0; j <= nz_; ++j) {
            derivative_inplace(grid_, &acc_[static_cast<size_t>(j) * n], tmp_.data(), work_.data());
            double* oj = out + static_cast<size_t>(j) * n;
            for (int i = 0; i < n; ++i) oj[i] += sc * tmp_[i];
        }
    }

    /// 2x2 flat half-cell block for Fourier mode k at half level c (x-averaged coefficients).
    void flat_block(int k, int c, double& diag, double& off) const {
        const double xi = (k == grid_.n() / 2) ? 0.0 : grid_.xi(k);
        const double kap2 = smu_ * smu_ * xi * xi;
        const double m = h_ * kap2 * q11_ / 4.0;
        const double s = q22_[c] / h_;
        diag = m + s;
        off = m - s;
    }

private:
    PeriodicGrid grid_;
    int nz_;
    double h_;
    double smu_;
    bool flat_ = false;
    Field p11_;
    std::vector<double> p12s_, p22_;
    double q11_ = 1.0;
    std::vector<double> q22_;
    mutable std::vector<cplx> work_;
    mutable std::vector<double> dphi_, acc_, tmp_;
};

struct PcgResult {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    std::vector<double> history;
};

/// One or two strips glued along an interface unknown m:
///   phi_0(slot) = scale * m + base,  phi_j(slot) = x_j + base (j >= 1).
/// Level order: slot 0 interior j = nz..1, then m (if present), then slot 1
/// interior j = 1..nz.
class ChainSystem {
public:
    struct Slot {
        const StripOperator* op;
        double weight;
        double scale;
        Field base;
    };

    ChainSystem(const PeriodicGrid& g, int nz, std::vector<Slot> slots, bool has_m)
        : grid_(g), nz_(nz), slots_(std::move(slots)), has_m_(has_m) {
        if (slots_.empty() || slots_.size() > 2) throw ConfigError("chain needs one or two strips");
        if (slots_.size() == 2 && !has_m_) throw ConfigError("two strips need an interface unknown");
        n_levels_ = nz_ * static_cast<int>(slots_.size()) + (has_m_ ? 1 : 0);
        full_.resize(static_cast<size_t>(nz_ + 1) * g.n());
        out_.resize(full_.size());
        build_preconditioner();
    }

    int n_levels() const { return n_levels_; }
    int m_level() const { return nz_; }
    bool singular() const { return has_m_; }
    size_t size() const { return static_cast<size_t>(n_levels_) * grid_.n(); }
    const std::vector<Slot>& slots() const { return slots_; }

    int level_of(int slot, int j) const { return slot == 0 ? nz_ - j : nz_ + j; }

    /// Null vector profile over levels (constants), valid when singular().
    double null_profile(int level) const {
        if (has_m_ && level == m_level()) return 1.0;
        const int slot = (level < nz_) ? 0 : 1;
        return slots_[slot].scale;
    }

    /// Full nodal field of a slot from the unknown vector x.
    void gather(int slot, const std::vector<double>& x, std::vector<double>& full, bool with_base) const {
        const int n = grid_.n();
        const Slot& s = slots_[slot];
        full.assign(static_cast<size_t>(nz_ + 1) * n, 0.0);
        for (int i = 0; i < n; ++i) {
            double v = with_base && !s.base.empty() ? s.base[i] : 0.0;
            if (has_m_) v += s.scale * x[static_cast<size_t>(m_level()) * n + i];
            full[i] = v;
        }
        const bool lift = with_base && !s.base.empty();
        for (int j = 1; j <= nz_; ++j) {
            const double* src = &x[static_cast<size_t>(level_of(slot, j)) * n];
            double* dst = &full[static_cast<size_t>(j) * n];
            for (int i = 0; i < n; ++i) dst[i] = src[i] + (lift ? s.base[i] : 0.0);
        }
    }

    void apply(const std::vector<double>& x, std::vector<double>& y) const {
        const int n = grid_.n();
        y.assign(size(), 0.0);
        for (int sidx = 0; sidx < static_cast<int>(slots_.size()); ++sidx) {
            gather(sidx, x, full_, false);
            const Slot& s = slots_[sidx];
            s.op->apply(full_.data(), out_.data());
            scatter_add(sidx, s.weight, n, y);
        }
    }

    /// Right-hand side for the affine part (bases) plus an interface source f.
    std::vector<double> rhs(const Field* f_interface) const {
        const int n = grid_.n();
        std::vector<double> b(size(), 0.0);
        for (int sidx = 0; sidx < static_cast<int>(slots_.size()); ++sidx) {
            const Slot& s = slots_[sidx];
            if (s.base.empty()) continue;
            // the base is lifted constantly in z, so constants give a zero right-hand side
            for (int j = 0; j <= nz_; ++j) std::copy(s.base.begin(), s.base.end(), &full_[static_cast<size_t>(j) * n]);
            s.op->apply(full_.data(), out_.data());
            scatter_add(sidx, -s.weight, n, b);
        }
        if (f_interface) {
            if (!has_m_) throw ConfigError("interface source requires an interface unknown");
            for (int i = 0; i < n; ++i) b[static_cast<size_t>(m_level()) * n + i] += (*f_interface)[i];
        }
        return b;
    }

    /// Removes the two null directions: profile x constant and profile x (-1)^i
    /// (the spectral derivative annihilates the Nyquist mode).
    void project_null(std::vector<double>& v) const {
        if (!singular()) return;
        const int n = grid_.n();
        for (double alt : {1.0, -1.0}) {
            double num = 0.0, den = 0.0;
            for (int l = 0; l < n_levels_; ++l) {
                const double w = null_profile(l);
                double s = 0.0, sg = 1.0;
                for (int i = 0; i < n; ++i, sg *= alt) s += sg * v[static_cast<size_t>(l) * n + i];
                num += w * s;
                den += w * w * n;
            }
            const double c = num / den;
            for (int l = 0; l < n_levels_; ++l) {
                const double w = null_profile(l) * c;
                double sg = 1.0;
                for (int i = 0; i < n; ++i, sg *= alt) v[static_cast<size_t>(l) * n + i] -= sg * w;
            }
        }
    }

    /// Shift x along the null vectors so that mean(m) = target_mean and the
    /// Nyquist coefficient (1/n) sum (-1)^i m_i = target_nyquist.
    void gauge_interface(std::vector<double>& x, double target_mean, double target_nyquist = 0.0) const {
        const int n = grid_.n();
        for (double alt : {1.0, -1.0}) {
            double s = 0.0, sg = 1.0;
            for (int i = 0; i < n; ++i, sg *= alt) s += sg * x[static_cast<size_t>(m_level()) * n + i];
            const double c = s / n - (alt > 0.0 ? target_mean : target_nyquist);
            for (int l = 0; l < n_levels_; ++l) {
                const double w = null_profile(l) * c;
                sg = 1.0;
                for (int i = 0; i < n; ++i, sg *= alt) x[static_cast<size_t>(l) * n + i] -= sg * w;
            }
        }
    }

    void precondition(const std::vector<double>& r, std::vector<double>& z) const {
        const int n = grid_.n(), nm = grid_.n_modes(), L = n_levels_;
        spec_.resize(static_cast<size_t>(L) * nm);
        for (int l = 0; l < L; ++l) fft_forward(&r[static_cast<size_t>(l) * n], &spec_[static_cast<size_t>(l) * nm], n);
        col_.resize(L);
        for (int k = 0; k < nm; ++k) {
            for (int l = 0; l < L; ++l) col_[l] = spec_[static_cast<size_t>(l) * nm + k];
            const bool null_mode = singular() && (k == 0 || k == n / 2);
            if (null_mode) {
                project_profile(col_);
                col_[m_level()] = 0.0;
            }
            thomas(k, col_);
            if (null_mode) project_profile(col_);
            for (int l = 0; l < L; ++l) spec_[static_cast<size_t>(l) * nm + k] = col_[l];
        }
        z.resize(size());
        for (int l = 0; l < L; ++l) fft_inverse(&spec_[static_cast<size_t>(l) * nm], &z[static_cast<size_t>(l) * n], n);
    }

    PcgResult solve(const std::vector<double>& b_in, std::vector<double>& x, const SolveOptions& opt) const {
        const size_t N = size();
        std::vector<double> b = b_in;
        project_null(b);
        if (x.size() != N) x.assign(N, 0.0);
        PcgResult res;
        const double bnorm = std::sqrt(dot(b, b));
        if (bnorm == 0.0) {
            std::fill(x.begin(), x.end(), 0.0);
            res.converged = true;
            return res;
        }
        std::vector<double> r(N), z, p, q;
        apply(x, q);
        for (size_t i = 0; i < N; ++i) r[i] = b[i] - q[i];
        project_null(r);
        double rn = std::sqrt(dot(r, r));
        res.history.push_back(rn / bnorm);
        if (rn <= opt.tol * bnorm) {
            res.converged = true;
            res.rel_residual = rn / bnorm;
            return res;
        }
        precondition(r, z);
        p = z;
        double rz = dot(r, z);
        const int cap = opt.max_iter > 0 ? opt.max_iter : 10 * grid_.n() * nz_;
        for (int it = 1; it <= cap; ++it) {
            apply(p, q);
            const double pq = dot(p, q);
            if (!(pq > 0.0)) break;
            const double alpha = rz / pq;
            for (size_t i = 0; i < N; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            rn = std::sqrt(dot(r, r));
            res.history.push_back(rn / bnorm);
            res.iterations = it;
            if (!std::isfinite(rn)) break;
            if (rn <= opt.tol * bnorm) {
                res.converged = true;
                break;
            }
            precondition(r, z);
            const double rz_new = dot(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
        }
        res.rel_residual = rn / bnorm;
        if (!res.converged) {
            std::string h;
            for (size_t i = 0; i < res.history.size(); i += std::max<size_t>(1, res.history.size() / 8))
                h += " " + std::to_string(res.history[i]);
            throw NumericalError("PCG did not converge after " + std::to_string(res.iterations) +
                                 " iterations; relative residual " + std::to_string(res.rel_residual) +
                                 "; history:" + h);
        }
        return res;
    }

private:
    static double dot(const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    }

    void scatter_add(int sidx, double w, int n, std::vector<double>& y) const {
        const Slot& s = slots_[sidx];
        if (has_m_) {
            double* ym = &y[static_cast<size_t>(m_level()) * n];
            for (int i = 0; i < n; ++i) ym[i] += w * s.scale * out_[i];
        }
        for (int j = 1; j <= nz_; ++j) {
            double* yl = &y[static_cast<size_t>(level_of(sidx, j)) * n];
            const double* oj = &out_[static_cast<size_t>(j) * n];
            for (int i = 0; i < n; ++i) yl[i] += w * oj[i];
        }
    }

    void project_profile(std::vector<cplx>& v) const {
        cplx num = 0.0;
        double den = 0.0;
        for (int l = 0; l < n_levels_; ++l) {
            num += null_profile(l) * v[l];
            den += null_profile(l) * null_profile(l);
        }
        const cplx c = num / den;
        for (int l = 0; l < n_levels_; ++l) v[l] -= null_profile(l) * c;
    }

    // Per-mode tridiagonal of the flat (x-averaged) chain, factored once.
    void build_preconditioner() {
        const int nm = grid_.n_modes(), L = n_levels_;
        sub_.assign(static_cast<size_t>(nm) * L, 0.0);
        cp_.assign(static_cast<size_t>(nm) * L, 0.0);
        den_.assign(static_cast<size_t>(nm) * L, 0.0);
        std::vector<double> a(L), b(L), c(L);
        for (int k = 0; k < nm; ++k) {
            std::fill(a.begin(), a.end(), 0.0);
            std::fill(b.begin(), b.end(), 0.0);
            std::fill(c.begin(), c.end(), 0.0);
            for (int sidx = 0; sidx < static_cast<int>(slots_.size()); ++sidx) {
                const Slot& s = slots_[sidx];
                for (int hc = 0; hc < nz_; ++hc) {
                    double dg, off;
                    s.op->flat_block(k, hc, dg, off);
                    dg *= s.weight;
                    off *= s.weight;
                    // node hc and hc+1 -> levels (node 0 -> m with factor scale, or dropped)
                    int l0 = -1, l1 = level_of(sidx, hc + 1);
                    double f0 = 1.0;
                    if (hc == 0) {
                        if (has_m_) {
                            l0 = m_level();
                            f0 = s.scale;
                        }
                    } else {
                        l0 = level_of(sidx, hc);
                    }
                    b[l1] += dg;
                    if (l0 >= 0) {
                        b[l0] += f0 * f0 * dg;
                        // l0 and l1 are adjacent levels
                        if (l1 == l0 + 1) {
                            c[l0] += f0 * off;
                            a[l1] += f0 * off;
                        } else {
                            c[l1] += f0 * off;
                            a[l0] += f0 * off;
                        }
                    }
                }
            }
            if (singular() && (k == 0 || k == grid_.n() / 2)) {
                const int m = m_level();
                b[m] = 1.0;
                if (m > 0) c[m - 1] = 0.0;
                if (m + 1 < L) a[m + 1] = 0.0;
                a[m] = 0.0;
                c[m] = 0.0;
            }
            double* sub = &sub_[static_cast<size_t>(k) * L];
            double* cp = &cp_[static_cast<size_t>(k) * L];
            double* den = &den_[static_cast<size_t>(k) * L];
            for (int l = 0; l < L; ++l) {
                const double d = b[l] - (l > 0 ? a[l] * cp[l - 1] : 0.0);
                if (!(std::abs(d) > 0.0)) throw NumericalError("singular flat preconditioner");
                den[l] = 1.0 / d;
                cp[l] = c[l] * den[l];
                sub[l] = a[l];
            }
        }
    }

    void thomas(int k, std::vector<cplx>& v) const {
        const int L = n_levels_;
        const double* sub = &sub_[static_cast<size_t>(k) * L];
        const double* cp = &cp_[static_cast<size_t>(k) * L];
        const double* den = &den_[static_cast<size_t>(k) * L];
        v[0] *= den[0];
        for (int l = 1; l < L; ++l) v[l] = (v[l] - sub[l] * v[l - 1]) * den[l];
        for (int l = L - 2; l >= 0; --l) v[l] -= cp[l] * v[l + 1];
    }

    PeriodicGrid grid_;
    int nz_;
    std::vector<Slot> slots_;
    bool has_m_;
    int n_levels_ = 0;
    std::vector<double> sub_, cp_, den_;
    mutable std::vector<double> full_, out_;
    mutable std::vector<cplx> spec_, col_;
};

struct StripSolution {
    std::vector<double> phi;  // (nz + 1) x n, level j is s = j/nz from the interface
    double residual_norm = 0.0;
    int iterations = 0;
    int nz = 0;
    Field trace() const { return Field(phi.begin(), phi.begin() + static_cast<long>(phi.size() / (nz + 1))); }
};

namespace detail {
inline Field interface_row(const StripOperator& op, const std::vector<double>& phi) {
    std::vector<double> out(phi.size());
    op.apply(phi.data(), out.data());
    const int n = op.grid().n();
    return Field(out.begin(), out.begin() + n);
}
}  // namespace detail

/// phi with phi|_{z=0} = psi and zero conormal flux on the far wall.
inline StripSolution solve_dirichlet(const DiffeoData& d, const Field& psi, const SolveOptions& opt = {}) {
    StripOperator op(d, opt.nz);
    ChainSystem sys(d.grid, opt.nz, {{&op, 1.0, 0.0, psi}}, false);
    std::vector<double> x;
    const PcgResult r = sys.solve(sys.rhs(nullptr), x, opt);
    StripSolution s;
    s.nz = opt.nz;
    sys.gather(0, x, s.phi, true);
    s.residual_norm = r.rel_residual;
    s.iterations = r.iterations;
    return s;
}

/// G psi = e_z . P grad phi at the interface (upward conormal derivative).
inline Field dn_apply(const DiffeoData& d, const Field& psi, const SolveOptions& opt = {}) {
    const StripSolution s = solve_dirichlet(d, psi, opt);
    StripOperator op(d, opt.nz);
    Field g = detail::interface_row(op, s.phi);
    for (double& v : g) v *= d.sgn();
    return g;
}

/// phi with upward conormal derivative g at z = 0; trace gauged to zero mean and
/// zero Nyquist coefficient (the Nyquist part of g is outside the range).
inline StripSolution solve_neumann(const DiffeoData& d, const Field& g, const SolveOptions& opt = {}) {
    double scale = 1.0;
    for (double v : g) scale = std::max(scale, std::abs(v));
    if (std::abs(mean(g)) > 1e-10 * scale)
        throw IncompatibleData("Neumann data must have zero mean (mean = " + std::to_string(mean(g)) + ")");
    StripOperator op(d, opt.nz);
    ChainSystem sys(d.grid, opt.nz, {{&op, 1.0, 1.0, {}}}, true);
    Field f = g;
    for (double& v : f) v *= d.sgn();
    std::vector<double> x;
    const PcgResult r = sys.solve(sys.rhs(&f), x, opt);
    sys.gauge_interface(x, 0.0);
    StripSolution s;
    s.nz = opt.nz;
    sys.gather(0, x, s.phi, true);
    s.residual_norm = r.rel_residual;
    s.iterations = r.iterations;
    return s;
}

/// Flat multiplier ±sqrt(mu)|D| tanh(sqrt(mu)|D|) (Nyquist dropped, as in the elliptic path).
inline Field dn_flat(const PeriodicGrid& g, double mu_layer, Layer layer, const Field& psi) {
    const double sm = std::sqrt(mu_layer), sg = layer_sign(layer);
    return apply_multiplier(
        g, [&](double xi) { return sg * sm * std::abs(xi) * std::tanh(sm * std::abs(xi)); }, psi, Nyquist::Zero);
}

/// First shape derivative of zeta -> G[eps zeta] psi in direction h, for the
/// "+" layer (unit depth): -eps G(h w) - eps mu d_x(h V),
/// w = (G psi + eps mu zeta_x psi_x)/(1 + eps^2 mu zeta_x^2), V = psi_x - eps w zeta_x.
/// The "-" layer uses G-[eps zeta] = -G+[-eps zeta].
inline Field shape_derivative(const PeriodicGrid& g, const Field& zeta, const Field& h, const Field& psi, double eps,
                              double mu, Layer layer, const SolveOptions& opt = {}) {
    Field z = zeta;
    if (layer == Layer::Minus)
        for (double& v : z) v = -v;
    const DiffeoData d = build_trivial_diffeo(g, z, eps, mu, Layer::Plus);
    const Field gpsi = dn_apply(d, psi, opt);
    const Field zx = derivative(g, z), px = derivative(g, psi);
    const int n = g.n();
    Field w(n), hw(n), hv(n);
    for (int i = 0; i < n; ++i) {
        w[i] = (gpsi[i] + eps * mu * zx[i] * px[i]) / (1.0 + eps * eps * mu * zx[i] * zx[i]);
        const double V = px[i] - eps * w[i] * zx[i];
        hw[i] = h[i] * w[i];
        hv[i] = h[i] * V;
    }
    const Field ghw = dn_apply(d, hw, opt);
    const Field dhv = derivative(g, hv);
    Field out(n);
    for (int i = 0; i < n; ++i) out[i] = -eps * ghw[i] - eps * mu * dhv[i];
    return out;
}

}  // namespace kh
