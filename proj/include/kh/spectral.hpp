#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "kh/errors.hpp"

namespace kh {

using Field = std::vector<double>;
using cplx = std::complex<double>;
using Spectrum = std::vector<cplx>;

class PeriodicGrid {
public:
    PeriodicGrid() = default;
    explicit PeriodicGrid(int n_points, double length = 2.0 * std::numbers::pi) : n_(n_points), length_(length) {
        if (n_points < 8 || n_points % 2 != 0) throw ConfigError("grid needs n_points >= 8 and even");
        if (!(length > 0.0)) throw ConfigError("grid length must be > 0");
    }
    int n() const { return n_; }
    int n_modes() const { return n_ / 2 + 1; }
    double length() const { return length_; }
    double dx() const { return length_ / n_; }
    double x(int i) const { return i * dx(); }
    /// Wavenumber of r2c index k (0 <= k <= n/2).
    double xi(int k) const { return 2.0 * std::numbers::pi / length_ * k; }
    double xi_max() const { return xi(n_ / 2); }
    Field nodes() const {
        Field f(n_);
        for (int i = 0; i < n_; ++i) f[i] = x(i);
        return f;
    }
    Field sample(const std::function<double(double)>& f) const {
        Field out(n_);
        for (int i = 0; i < n_; ++i) out[i] = f(x(i));
        return out;
    }
    bool operator==(const PeriodicGrid& o) const { return n_ == o.n_ && length_ == o.length_; }

private:
    int n_ = 0;
    double length_ = 0.0;
};

namespace detail {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// Plans are created once per size under a lock and executed through the
// new-array interface with FFTW_UNALIGNED, which is reentrant.
inline const PlanPair& plans_for(int n) {
    static std::mutex m;
    static std::map<int, std::unique_ptr<PlanPair>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;
    auto p = std::make_unique<PlanPair>();
    std::vector<double> r(n);
    std::vector<fftw_complex> c(n / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p->fwd = fftw_plan_dft_r2c_1d(n, r.data(), c.data(), flags);
    p->bwd = fftw_plan_dft_c2r_1d(n, c.data(), r.data(), flags | FFTW_DESTROY_INPUT);
    if (!p->fwd || !p->bwd) throw NumericalError("FFTW planning failed for n = " + std::to_string(n));
    auto& ref = *p;
    cache.emplace(n, std::move(p));
    return ref;
}

}  // namespace detail

/// Unnormalized forward r2c transform: uhat_k = sum_j u_j e^{-2 pi i jk/n}.
inline void fft_forward(const double* u, cplx* uhat, int n) {
    const auto& p = detail::plans_for(n);
    fftw_execute_dft_r2c(p.fwd, const_cast<double*>(u), reinterpret_cast<fftw_complex*>(uhat));
}

/// Inverse c2r including the 1/n factor. The input spectrum is destroyed.
inline void fft_inverse(cplx* uhat, double* u, int n) {
    const auto& p = detail::plans_for(n);
    fftw_execute_dft_c2r(p.bwd, reinterpret_cast<fftw_complex*>(uhat), u);
    const double s = 1.0 / n;
    for (int i = 0; i < n; ++i) u[i] *= s;
}

inline Spectrum fft(const Field& u) {
    Spectrum s(u.size() / 2 + 1);
    fft_forward(u.data(), s.data(), static_cast<int>(u.size()));
    return s;
}

inline Field ifft(Spectrum s, int n) {
    Field u(n);
    fft_inverse(s.data(), u.data(), n);
    return u;
}

enum class Nyquist { Keep, Zero };

/// Diagonal Fourier action u -> m(|xi|) u for an even real multiplier m.
inline Field apply_multiplier(const PeriodicGrid& g, const std::function<double(double)>& m, const Field& u,
                              Nyquist ny = Nyquist::Keep) {
    Spectrum s = fft(u);
    for (int k = 0; k < g.n_modes(); ++k) {
        const double mk = m(g.xi(k));
        if (!std::isfinite(mk)) throw NumericalError("multiplier is not finite at xi = " + std::to_string(g.xi(k)));
        s[k] *= mk;
    }
    if (ny == Nyquist::Zero) s[g.n() / 2] = 0.0;
    return ifft(std::move(s), g.n());
}

/// Spectral derivative; the Nyquist coefficient is dropped so that the
/// discrete operator is real and skew-symmetric.
inline Field derivative(const PeriodicGrid& g, const Field& u) {
    Spectrum s = fft(u);
    for (int k = 0; k < g.n_modes(); ++k) s[k] *= cplx(0.0, g.xi(k));
    s[g.n() / 2] = 0.0;
    return ifft(std::move(s), g.n());
}

inline void derivative_inplace(const PeriodicGrid& g, const double* u, double* du, cplx* work) {
    const int n = g.n();
    fft_forward(u, work, n);
    for (int k = 0; k < g.n_modes(); ++k) work[k] *= cplx(0.0, g.xi(k));
    work[n / 2] = 0.0;
    fft_inverse(work, du, n);
}

/// 2/3-rule filter: modes with k > n/3 are removed.
inline Field dealias(const PeriodicGrid& g, const Field& u) {
    Spectrum s = fft(u);
    const int kc = g.n() / 3;
    for (int k = kc + 1; k < g.n_modes(); ++k) s[k] = 0.0;
    return ifft(std::move(s), g.n());
}

inline double mean(const Field& u) {
    double s = 0.0;
    for (double v : u) s += v;
    return s / static_cast<double>(u.size());
}

inline Field remove_mean(Field u) {
    const double m = mean(u);
    for (double& v : u) v -= m;
    return u;
}

inline double sup_norm(const Field& u) {
    double m = 0.0;
    for (double v : u) m = std::max(m, std::abs(v));
    return m;
}

/// Quadrature inner product (u, v) = dx sum u_i v_i.
inline double inner(const PeriodicGrid& g, const Field& u, const Field& v) {
    double s = 0.0;
    for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s * g.dx();
}

inline double norm_l2(const PeriodicGrid& g, const Field& u) { return std::sqrt(inner(g, u, u)); }

/// Symbol sigma(x, xi) of a pseudodifferential operator; xi is signed.
struct SymbolFn {
    std::function<double(double x, double xi)> eval;
    std::string name;
    bool x_independent = false;
};

/// Discrete Kohn-Nirenberg quantization:
/// Op(s)u(x_j) = Re sum_xi e^{i x_j xi} s(x_j, xi) uhat(xi) / n over the full
/// symmetric frequency set; O(n^2).
inline Field apply_symbol(const PeriodicGrid& g, const SymbolFn& s, const Field& u, Nyquist ny = Nyquist::Keep) {
    const int n = g.n();
    const Spectrum uh = fft(u);
    if (s.x_independent) {
        return apply_multiplier(g, [&](double xi) { return s.eval(0.0, xi); }, u, ny);
    }
    std::vector<cplx> tw(n);
    for (int m = 0; m < n; ++m) tw[m] = std::polar(1.0, 2.0 * std::numbers::pi * m / n);
    Field out(n);
    for (int j = 0; j < n; ++j) {
        const double xj = g.x(j);
        cplx acc = s.eval(xj, 0.0) * uh[0];
        for (int k = 1; k < n / 2; ++k) {
            const cplx e = tw[(static_cast<long>(j) * k) % n];
            acc += e * s.eval(xj, g.xi(k)) * uh[k];
            acc += std::conj(e) * s.eval(xj, -g.xi(k)) * std::conj(uh[k]);
        }
        if (ny == Nyquist::Keep) {
            const cplx e = tw[(static_cast<long>(j) * (n / 2)) % n];
            acc += e * s.eval(xj, g.xi(n / 2)) * uh[n / 2];
        }
        out[j] = acc.real() / n;
    }
    return out;
}

namespace detail {
// sum over the full spectrum of w(xi) |uhat|^2 with the quadrature weight L/n^2
inline double spectral_sum(const PeriodicGrid& g, const Field& u, const std::function<double(double)>& w) {
    const Spectrum s = fft(u);
    const int n = g.n();
    double acc = w(0.0) * std::norm(s[0]);
    for (int k = 1; k < n / 2; ++k) acc += 2.0 * w(g.xi(k)) * std::norm(s[k]);
    acc += w(g.xi(n / 2)) * std::norm(s[n / 2]);
    return acc * g.length() / (static_cast<double>(n) * n);
}
}  // namespace detail

/// |u|_{H^s} = |(1 + xi^2)^{s/2} uhat|.
inline double norm_sobolev(const PeriodicGrid& g, const Field& u, double s) {
    return std::sqrt(detail::spectral_sum(g, u, [s](double xi) { return std::pow(1.0 + xi * xi, s); }));
}

/// |P u|_{H^s} with P = |D| / (1 + sqrt(mu)|D|)^{1/2}.
inline double norm_hdot_mu(const PeriodicGrid& g, const Field& u, double s, double mu) {
    const double sm = std::sqrt(mu);
    return std::sqrt(detail::spectral_sum(g, u, [s, sm](double xi) {
        const double a = std::abs(xi);
        return a * a / (1.0 + sm * a) * std::pow(1.0 + xi * xi, s);
    }));
}

/// |u|^2_{H^1_sigma} = |u|^2 + |u_x|^2 / Bo.
inline double norm_h1_sigma(const PeriodicGrid& g, const Field& u, double bond) {
    if (!(bond > 0.0)) throw ConfigError("norm_h1_sigma requires Bo > 0");
    const double ib = std::isinf(bond) ? 0.0 : 1.0 / bond;
    return std::sqrt(detail::spectral_sum(g, u, [ib](double xi) { return 1.0 + ib * xi * xi; }));
}

}  // namespace kh
