#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "kh/spectral.hpp"

using namespace kh;
using Catch::Approx;

namespace {

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Field random_field(const PeriodicGrid& g, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Field u(g.n());
    for (double& v : u) v = nd(rng);
    return u;
}

}  // namespace

TEST_CASE("grid: construction rules and nodes") {
    CHECK_THROWS_AS(PeriodicGrid(6), ConfigError);
    CHECK_THROWS_AS(PeriodicGrid(9), ConfigError);
    CHECK_THROWS_AS(PeriodicGrid(16, 0.0), ConfigError);
    const PeriodicGrid g(16, 4.0);
    CHECK(g.dx() == 0.25);
    CHECK(g.xi(2) == Approx(std::numbers::pi));
    CHECK(g.n_modes() == 9);
}

TEST_CASE("apply_multiplier: identity, eigenfunctions, non-finite multipliers") {
    const PeriodicGrid g(32);
    const Field u = random_field(g, 1);
    CHECK(max_diff(apply_multiplier(g, [](double) { return 1.0; }, u), u) < 1e-14);
    const Field s3 = g.sample([](double x) { return std::sin(3 * x); });
    const Field r = apply_multiplier(g, [](double xi) { return std::abs(xi); }, s3);
    CHECK(max_diff(r, g.sample([](double x) { return 3.0 * std::sin(3 * x); })) < 1e-13);
    const Field c2 = g.sample([](double x) { return std::cos(2 * x); });
    const Field t = apply_multiplier(g, [](double xi) { return std::tanh(std::abs(xi)); }, c2);
    CHECK(t[0] == Approx(0.9640275800758169).epsilon(1e-13));
    CHECK_THROWS_AS(apply_multiplier(g, [](double xi) { return xi > 5 ? NAN : 1.0; }, u), NumericalError);
}

TEST_CASE("apply_symbol: collapse to multipliers and pointwise products") {
    const PeriodicGrid g(32);
    const Field u = random_field(g, 2);
    SymbolFn one{[](double, double) { return 1.0; }, "one", false};
    CHECK(max_diff(apply_symbol(g, one, u), u) < 1e-12);

    auto m = [](double xi) { return std::abs(xi) * std::tanh(0.3 * std::abs(xi)); };
    SymbolFn sx{[&](double, double xi) { return m(xi); }, "m", false};
    const Field a = apply_symbol(g, sx, u), b = apply_multiplier(g, m, u);
    CHECK(max_diff(a, b) <= 1e-12 * sup_norm(b));

    auto coef = [](double x) { return 2.0 + std::sin(x); };
    SymbolFn ax{[&](double x, double) { return coef(x); }, "a(x)", false};
    const Field p = apply_symbol(g, ax, u);
    for (int i = 0; i < g.n(); ++i) CHECK(p[i] == Approx(coef(g.x(i)) * u[i]).margin(1e-12));
}

TEST_CASE("derivative and dealias") {
    const PeriodicGrid g(32);
    const Field u = g.sample([](double x) { return std::sin(2 * x) + std::cos(5 * x); });
    const Field du = derivative(g, u);
    CHECK(max_diff(du, g.sample([](double x) { return 2 * std::cos(2 * x) - 5 * std::sin(5 * x); })) < 1e-12);
    const Field high = g.sample([](double x) { return std::cos(x) + std::cos(12 * x); });
    CHECK(max_diff(dealias(g, high), g.sample([](double x) { return std::cos(x); })) < 1e-13);
}

TEST_CASE("norms: Parseval, Sobolev weights, H_mu and H^1_sigma") {
    const PeriodicGrid g(64);
    const Field u = random_field(g, 3);
    CHECK(norm_sobolev(g, u, 0.0) == Approx(norm_l2(g, u)).epsilon(1e-12));
    CHECK(norm_sobolev(g, Field(64, 0.0), 1.0) == 0.0);
    const int k = 5;
    const Field ck = g.sample([k](double x) { return std::cos(k * x); });
    CHECK(norm_sobolev(g, ck, 1.0) / norm_sobolev(g, ck, 0.0) == Approx(std::sqrt(1.0 + k * k)).epsilon(1e-12));

    CHECK(norm_hdot_mu(g, Field(64, 2.0), 0.0, 1.0) == Approx(0.0).margin(1e-14));
    const Field c4 = g.sample([](double x) { return std::cos(4 * x); });
    CHECK(norm_hdot_mu(g, c4, 0.0, 1.0) / norm_l2(g, c4) == Approx(4.0 / std::sqrt(5.0)).epsilon(1e-12));
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : {0.0, 0.1, 1.0, 10.0}) {
        const double v = norm_hdot_mu(g, u, 0.5, mu);
        CHECK(v <= prev);
        prev = v;
    }

    const double bo = 7.0;
    CHECK(norm_h1_sigma(g, ck, bo) * norm_h1_sigma(g, ck, bo) ==
          Approx((1.0 + k * k / bo) * g.length() / 2.0).epsilon(1e-12));
    CHECK(norm_h1_sigma(g, u, std::numeric_limits<double>::infinity()) == Approx(norm_l2(g, u)).epsilon(1e-12));
    CHECK(norm_h1_sigma(g, Field(64, 0.0), bo) == 0.0);
    CHECK_THROWS_AS(norm_h1_sigma(g, u, 0.0), ConfigError);
}

TEST_CASE("transforms are deterministic") {
    const PeriodicGrid g(128);
    const Field u = random_field(g, 4);
    auto m = [](double xi) { return std::sqrt(1.0 + xi * xi); };
    CHECK(apply_multiplier(g, m, u) == apply_multiplier(g, m, u));
    CHECK(derivative(g, u) == derivative(g, u));
}
