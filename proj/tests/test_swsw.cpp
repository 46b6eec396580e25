#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "kh/swsw.hpp"

using namespace kh;
using Catch::Approx;

namespace {

SWState sample_state(int n, double length, const std::function<double(double)>& z,
                     const std::function<double(double)>& v) {
    SWState s{Field(n), Field(n)};
    const double dx = length / n;
    for (int i = 0; i < n; ++i) {
        s.zeta[i] = z((i + 0.5) * dx);
        s.v[i] = v((i + 0.5) * dx);
    }
    return s;
}

// L1 distance between a coarse solution and the pairwise average of a fine one
double l1_to_coarse(const Field& coarse, const Field& fine, double dx) {
    double s = 0.0;
    for (size_t i = 0; i < coarse.size(); ++i) s += std::abs(coarse[i] - 0.5 * (fine[2 * i] + fine[2 * i + 1]));
    return s * dx;
}

}  // namespace

TEST_CASE("flux: normalization and one-layer reduction") {
    const auto p = nondim_params(0.7, 1.8, 0.4, 0.01);
    CHECK(sw_flux(p, 0.0, 1.0).mass == Approx(1.0).epsilon(1e-14));
    CHECK(sw_flux(p, 0.3, 0.0).momentum == 0.3);

    const auto one = nondim_params(1.0, 1.5, 0.3, 0.01);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> uz(-0.9, 0.9), uv(-2.0, 2.0);
    for (int k = 0; k < 50; ++k) {
        const double z = uz(rng), v = uv(rng);
        const SWFlux f = sw_flux(one, z, v);
        CHECK(f.mass == Approx((1.0 + one.eps * z) * v).epsilon(1e-13));
        CHECK(f.momentum == Approx(z + 0.5 * one.eps * v * v).epsilon(1e-13).margin(1e-15));
    }
    CHECK_THROWS_AS(sw_flux(p, 1.0 / p.eps_minus, 0.0), GeometryError);
}

TEST_CASE("jacobian: rest eigenvalues, analytic derivative, indicator boundary") {
    for (double rb : {0.55, 0.7, 0.999}) {
        for (double ratio : {0.3, 1.0, 4.0}) {
            const auto p = nondim_params(rb, ratio, 0.5, 0.01);
            const auto [l1, l2] = jacobian_eigs(p, 0.0, 0.0);
            CHECK(std::abs(l1 - std::complex<double>(-1.0)) <= 1e-12);
            CHECK(std::abs(l2 - std::complex<double>(1.0)) <= 1e-12);

            // central differences of the flux
            const double z = 0.2, v = 0.3, h = 1e-6;
            const Jacobian j = sw_jacobian(p, z, v);
            const SWFlux zp = sw_flux(p, z + h, v), zm = sw_flux(p, z - h, v);
            const SWFlux vp = sw_flux(p, z, v + h), vm = sw_flux(p, z, v - h);
            CHECK(j.a11 == Approx((zp.mass - zm.mass) / (2 * h)).epsilon(1e-7));
            CHECK(j.a21 == Approx((zp.momentum - zm.momentum) / (2 * h)).epsilon(1e-7));
            CHECK(j.a12 == Approx((vp.mass - vm.mass) / (2 * h)).epsilon(1e-7));
            CHECK(j.a22 == Approx((vp.momentum - vm.momentum) / (2 * h)).epsilon(1e-7).margin(1e-9));

            for (double zz : {-0.4, 0.0, 0.5}) {
                const double vb = indicator_boundary_v(p, zz);
                CHECK(std::abs(indicator(p, zz, vb)) <= 1e-12);
                const Jacobian jb = sw_jacobian(p, zz, vb);
                CHECK(std::abs(jb.discriminant()) <= 1e-9 * (1.0 + jb.trace() * jb.trace()));
            }
        }
    }
}

TEST_CASE("indicator: sign agrees with the discriminant; one layer is always hyperbolic") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> urb(0.51, 0.99), urat(0.2, 5.0), ueps(0.05, 0.9), u01(-0.95, 0.95);
    int checked = 0;
    for (int k = 0; k < 2000; ++k) {
        const auto p = nondim_params(urb(rng), urat(rng), ueps(rng), 0.01);
        const double zlim = std::min(1.0 / p.eps_plus, 1.0 / p.eps_minus);
        const double z = u01(rng) * zlim;
        const double vb = indicator_boundary_v(p, z);
        const double v = vb * 2.0 * std::abs(u01(rng));
        const double ind = indicator(p, z, v);
        if (std::abs(ind) < 1e-9) continue;
        const double disc = sw_jacobian(p, z, v).discriminant();
        CHECK((ind > 0.0) == (disc > 0.0));
        ++checked;
    }
    CHECK(checked > 1900);

    const auto one = nondim_params(1.0, 2.0, 0.8, 0.01);
    CHECK(std::isinf(indicator_boundary_v(one, 0.0)));
    for (double z : {-0.5, 0.0, 0.7})
        for (double v : {-50.0, 0.0, 3.0, 100.0}) {
            CHECK(indicator(one, z, v) == 1.0);
            CHECK(sw_jacobian(one, z, v).discriminant() > 0.0);
        }
    const auto p = nondim_params(0.7, 1.0, 0.5, 0.01);
    const SWState rest{Field(8, 0.2), Field(8, 0.0)};
    for (double x : hyperbolicity_indicator(p, rest)) CHECK(x == 1.0);
}

TEST_CASE("fv: constant states are fixed points and the mass is conserved") {
    const auto p = nondim_params(0.7, 1.3, 0.5, 0.01);
    const SWState c{Field(64, 0.3), Field(64, -0.4)};
    const SWState c1 = fv_step(p, c, 0.1, 0.01);
    CHECK(c1.zeta == c.zeta);
    CHECK(c1.v == c.v);

    SWConfig cfg;
    cfg.n_cells = 512;
    cfg.params = p;
    cfg.t_end = 1.0;
    const SWState s0 = sample_state(512, cfg.length, [](double x) { return 0.3 + 0.5 * std::cos(x); },
                                    [](double x) { return 0.4 * std::sin(2 * x); });
    const SWSeries ts = run(cfg, s0);
    REQUIRE_FALSE(ts.loss.has_value());
    REQUIRE(ts.dry_state.empty());
    CHECK(ts.times.back() == 1.0);
    auto mass = [&](const SWState& s) { return std::accumulate(s.zeta.begin(), s.zeta.end(), 0.0) * ts.dx; };
    const double m0 = mass(s0);
    for (const auto& s : ts.states) CHECK(std::abs(mass(s) - m0) <= 1e-13);
    std::ostringstream os;
    ts.write_csv(os);
    CHECK(os.str().rfind("t,x,zeta_a,v_a,indicator_min\n", 0) == 0);
}

TEST_CASE("fv: first-order self-convergence on a smooth pulse") {
    const auto p = nondim_params(0.7, 1.0, 0.1, 0.01);
    auto solve = [&](int n) {
        SWConfig cfg;
        cfg.n_cells = n;
        cfg.params = p;
        cfg.t_end = 0.5;
        const SWSeries ts = run(cfg, sample_state(n, cfg.length,
                                                  [](double x) { return std::exp(std::cos(x)) - 1.2660658777520082; },
                                                  [](double x) { return 0.5 * std::sin(x); }));
        REQUIRE_FALSE(ts.loss.has_value());
        return ts.states.back().zeta;
    };
    const Field a = solve(200), b = solve(400), c = solve(800);
    const double dx = 2.0 * std::numbers::pi / 200;
    const double order = std::log2(l1_to_coarse(a, b, dx) / l1_to_coarse(b, c, dx / 2));
    CHECK(order >= 0.8);
    CHECK(order <= 1.2);
}

TEST_CASE("run: data violating hyperbolicity are refused at t = 0") {
    const auto p = nondim_params(0.6, 1.0, 0.5, 0.01);
    SWConfig cfg;
    cfg.n_cells = 64;
    cfg.params = p;
    const double vb = indicator_boundary_v(p, 0.0);
    const SWSeries ts = run(cfg, sample_state(64, cfg.length, [](double) { return 0.0; },
                                              [&](double x) { return 1.5 * vb * std::sin(x); }));
    REQUIRE(ts.loss.has_value());
    CHECK(ts.loss->time == 0.0);
    CHECK(ts.loss->indicator_value < 0.0);
    CHECK(ts.steps == 0);
    CHECK(ts.indicator_min.front() < 0.0);
}

TEST_CASE("fourier_eval reproduces a trigonometric polynomial off the grid") {
    PeriodicGrid g(16);
    auto f = [](double x) { return 0.3 + std::cos(x) - 0.5 * std::sin(3 * x) + 0.2 * std::cos(8 * x); };
    const Spectrum s = fft(g.sample(f));
    for (double x : {0.1, 1.7, 4.0}) CHECK(fourier_eval(g, s, x) == Approx(f(x)).margin(1e-13));
}

TEST_CASE("compare_with_full: short horizons shrink the discrepancy") {
    CompareOptions o;
    o.n_full = 16;
    o.n_sw = 512;
    o.n_times = 2;
    auto z0 = [](double x) { return 0.5 * std::cos(x); };
    auto p0 = [](double x) { return 0.3 * std::cos(x); };
    const CompareTable a = compare_with_full(0.6, 1.0, 0.5, z0, p0, {0.02}, 0.2, o);
    const CompareTable b = compare_with_full(0.6, 1.0, 0.5, z0, p0, {0.02}, 0.05, o);
    REQUIRE(a.rows.size() == 1);
    REQUIRE(a.rows[0].fitted);
    REQUIRE(b.rows[0].fitted);
    CHECK(b.rows[0].discrepancy < a.rows[0].discrepancy);
    CHECK(b.rows[0].discrepancy < 0.5 * a.rows[0].discrepancy);
    std::ostringstream os;
    a.write_csv(os);
    CHECK(os.str().rfind("mu,discrepancy,zeta_part,v_part,fitted\n", 0) == 0);
}
