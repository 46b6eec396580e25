// Acceptance driver: one PASS/FAIL line per criterion, preceded by its sub-checks.
// Usage: acceptance [--criterion N]; exit status is 0 only if every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kh/kh.hpp"

using namespace kh;

namespace {

struct Check {
    std::string name;
    bool pass;
    std::string detail;
};

using Checks = std::vector<Check>;

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Field smooth_random(const PeriodicGrid& g, std::mt19937& rng, int kmax = 5) {
    std::normal_distribution<double> nd;
    Field u(g.n(), 0.0);
    for (int k = 1; k <= kmax; ++k) {
        const double a = nd(rng) / k, b = nd(rng) / k;
        for (int i = 0; i < g.n(); ++i) u[i] += a * std::cos(k * g.x(i)) + b * std::sin(k * g.x(i));
    }
    return u;
}

double max_diff(const Field& a, const Field& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------------------

Checks criterion_1() {
    Checks out;
    for (const auto& [name, label] : case_names()) {
        const auto t0 = std::chrono::steady_clock::now();
        const CaseResult r = run_case(name);
        const double dt = seconds_since(t0);
        for (const auto& v : r.values)
            out.push_back({label + ": " + v.name, v.pass,
                           fmt("%.6g vs %.6g (%s %g)", v.value, v.expected, v.tolerance_kind.c_str(), v.tolerance)});
        out.push_back({label + ": runtime", dt < 1.0, fmt("%.3f s < 1 s", dt)});
    }
    return out;
}

Checks criterion_2() {
    Checks out;
    const double rp = 1025.0 / 1026.2, rm = 1.2 / 1026.2;
    for (auto [a, b] : {std::pair{rp, rm}, std::pair{0.7, 0.3}}) {
        const SupResult s = c_flat(a, b, 1e3, 1e3);
        out.push_back({fmt("c_flat(rho+ = %.4f, H+ = H- = 1e3)", a), std::abs(s.value - 1.0) <= 1e-3,
                       fmt("%.9f, |c - 1| <= 1e-3", s.value)});
    }
    return out;
}

Checks criterion_3() {
    Checks out;
    {
        const auto t0 = std::chrono::steady_clock::now();
        const DnVerifyReport rep = dn_verify(64, {0.01, 0.25, 1.0}, {128, 256, 512});
        const double dt = seconds_since(t0);
        for (const auto& r : rep.rows)
            if (r.nz == 512)
                out.push_back({fmt("flat DN vs multiplier, mu+ = %g, Nz = 512", r.mu), r.rel_l2 <= 1e-6,
                               fmt("rel L2 %.3e <= 1e-6", r.rel_l2)});
        for (const auto& [mu, s] : rep.z_order)
            out.push_back({fmt("z-refinement slope, mu+ = %g", mu), std::abs(s - 2.0) <= 0.3,
                           fmt("%.3f in 2 +- 0.3", s)});
        out.push_back({"flat DN runtime", dt < 10.0, fmt("%.2f s < 10 s", dt)});
    }
    {
        const PeriodicGrid g(32);
        const auto p = nondim_params(0.7, 1.5, 0.3, 0.5);
        std::mt19937 rng(3);
        double worst_sym = 0.0, worst_sign = 0.0, worst_cal = 0.0, worst_cal_sign = 0.0;
        for (int k = 0; k < 20; ++k) {
            const Field zeta = smooth_random(g, rng, 3);
            Field zs = zeta;
            const double zmax = sup_norm(zeta);
            for (double& v : zs) v *= 0.8 / zmax;  // keeps 1 - eps zeta well away from 0
            const Field a = smooth_random(g, rng), b = smooth_random(g, rng);
            for (Layer l : {Layer::Plus, Layer::Minus}) {
                const double el = l == Layer::Plus ? p.eps_plus : p.eps_minus;
                const double ml = l == Layer::Plus ? p.mu_plus : p.mu_minus;
                const auto d = build_trivial_diffeo(g, zs, el, ml, l);
                const Field ga = dn_apply(d, a, {32}), gb = dn_apply(d, b, {32});
                const double scale = norm_l2(g, a) * norm_l2(g, gb);
                worst_sym = std::max(worst_sym, std::abs(inner(g, a, gb) - inner(g, b, ga)) / scale);
                worst_sign = std::max(worst_sign, -layer_sign(l) * inner(g, a, ga) / (norm_l2(g, a) * norm_l2(g, ga)));
            }
            const TwoFluid tf(g, zs, p, {32});
            const Field ca = tf.apply_G(a), cb = tf.apply_G(b);
            worst_cal = std::max(worst_cal,
                                 std::abs(inner(g, a, cb) - inner(g, b, ca)) / (norm_l2(g, a) * norm_l2(g, cb)));
            worst_cal_sign = std::max(worst_cal_sign, -inner(g, a, ca) / (norm_l2(g, a) * norm_l2(g, ca)));
        }
        out.push_back({"G+/G- symmetry, 20 random inputs", worst_sym <= 1e-9, fmt("max rel asymmetry %.2e", worst_sym)});
        out.push_back({"G+/G- sign definiteness", worst_sign <= 1e-9, fmt("max rel wrong-sign part %.2e", worst_sign)});
        out.push_back({"cal G symmetry, 20 random inputs", worst_cal <= 1e-9, fmt("max rel asymmetry %.2e", worst_cal)});
        out.push_back({"cal G positivity", worst_cal_sign <= 1e-9, fmt("max rel negative part %.2e", worst_cal_sign)});
    }
    {
        const PeriodicGrid g(32);
        const Field zero(32, 0.0);
        const Field h = g.sample([](double x) { return std::cos(x); });
        const Field psi = g.sample([](double x) { return std::sin(2 * x); });
        const SolveOptions o{128};
        for (Layer l : {Layer::Plus, Layer::Minus}) {
            const Field g0 = dn_apply(build_trivial_diffeo(g, zero, 0.0, 1.0, l), psi, o);
            const Field dg = shape_derivative(g, zero, h, psi, 1.0, 1.0, l, o);
            std::vector<double> eps_list{0.04, 0.02, 0.01}, errs;
            for (double eps : eps_list) {
                const Field ge = dn_apply(build_trivial_diffeo(g, h, eps, 1.0, l), psi, o);
                Field r(32);
                for (int i = 0; i < 32; ++i) r[i] = (ge[i] - g0[i]) / eps - dg[i];
                errs.push_back(norm_l2(g, r));
            }
            const double s = loglog_slope(eps_list, errs).value_or(NAN);
            out.push_back({fmt("shape derivative eps-slope, layer %s", to_string(l)), std::abs(s - 1.0) <= 0.2,
                           fmt("%.3f in 1 +- 0.2", s)});
        }
    }
    return out;
}

Checks criterion_4() {
    Checks out;
    const auto t0 = std::chrono::steady_clock::now();
    {
        const PeriodicGrid g(128);
        const Field zeta = g.sample([](double x) { return std::cos(x); });
        const Field psi = g.sample([](double x) { return std::sin(x); });
        const auto rep =
            tail_error_report(g, zeta, psi, {{0.0, 0.5}, {0.025, 0.5}, {0.05, 0.5}, {0.1, 0.5}, {0.2, 0.5}});
        const double e = rep.eps_exponent.value_or(NAN);
        out.push_back({"tail eps-exponent over eps in {0.025 .. 0.2}", e >= 0.8 && e <= 1.2, fmt("%.3f in [0.8, 1.2]", e)});
        const double flat = rep.rows.at(0).err_hs_half;
        out.push_back({"eps = 0 row at the discretization floor", flat <= 1e-7, fmt("%.2e <= 1e-7", flat)});
    }
    {
        const PeriodicGrid g(32);
        const Field zeta = g.sample([](double x) { return std::cos(x); });
        const Field psi = g.sample([](double x) { return std::sin(x); });
        const auto rep = tail_error_report(g, zeta, psi, {{0.1, 0.5}, {0.1, 0.1}, {0.1, 0.02}}, {0.0, 64, 1e-12});
        bool ok = true;
        std::string d;
        for (const auto& r : rep.rows) {
            ok = ok && r.ratio_tailless > 0.3 && r.ratio < 0.1 * r.ratio_tailless;
            d += fmt("mu %g: %.3f vs %.2e; ", r.mu, r.ratio_tailless, r.ratio);
        }
        out.push_back({"tail-less relative error stays O(1) as mu -> 0", ok, d});
    }
    const double dt = seconds_since(t0);
    out.push_back({"runtime", dt < 60.0, fmt("%.1f s < 60 s", dt)});
    return out;
}

Checks criterion_5() {
    Checks out;
    const ShearConfig c{};
    const CriticalShear cs = critical_shear(c);
    const double s = c.rho_plus + c.rho_minus;
    const auto [hp, hm] = relative_depths(c);
    const double c0 = c_flat(c.rho_plus / s, c.rho_minus / s, hp, hm).value;
    const double kc = kelvin_criterion_threshold(c, c0);
    const double rel = std::abs(kc / cs.shear - 1.0);
    out.push_back({"deep air-water: dispersion vs criterion threshold", rel <= 0.02,
                   fmt("%.4f vs %.4f m/s, rel %.2e <= 0.02", cs.shear, kc, rel)});
    out.push_back({"deep air-water threshold near 6.7 m/s", std::abs(cs.shear / 6.7 - 1.0) <= 0.02,
                   fmt("%.4f m/s", cs.shear)});
    const auto arb = kelvin_arbitration(c, {0.5, 5.0, 50.0}, {0.5, 5.0, 50.0});
    std::string d = "selected '" + arb.selected + "';";
    for (const auto& cell : arb.cells)
        d += fmt(" (%g,%g): %+.3f/%+.3f", cell.depth_plus, cell.depth_minus, cell.rel_err_unsquared,
                 cell.rel_err_squared);
    out.push_back({"finite-depth 3x3 arbitration selects exactly one candidate",
                   arb.selected == "squared" || arb.selected == "unsquared", d});
    return out;
}

Checks criterion_6() {
    Checks out;
    {
        const auto p = nondim_params(0.7, 1.5, 0.1, 0.5, 200.0);
        EvolutionConfig c;
        c.n_points = 32;
        c.params = p;
        c.t_end = 10.0 * 2.0 * std::numbers::pi / linear_frequency(p, 1.0);
        c.cadence = 50;
        const PeriodicGrid g(32);
        const TimeSeries ts = run(c, g.sample([](double x) { return 0.2 + std::cos(x); }), Field(32, 0.0));
        double worst = 0.0;
        for (const auto& d : ts.diagnostics) worst = std::max(worst, std::abs(d.mass - ts.diagnostics[0].mass));
        out.push_back({"mass drift over 10 linear periods", !ts.breakdown_time && worst <= 1e-10,
                       fmt("%.2e <= 1e-10 (%d steps)", worst, ts.steps)});
    }
    {
        const auto p = nondim_params(0.7, 1.5, 1e-4, 0.5);
        const double w = linear_frequency(p, 2.0);
        EvolutionConfig c;
        c.n_points = 128;
        c.params = p;
        c.t_end = 0.3 * 2.0 * std::numbers::pi / w;
        c.cadence = 1;
        const PeriodicGrid g(128);
        const TimeSeries ts = run(c, g.sample([](double x) { return std::cos(2 * x); }), Field(128, 0.0));
        double prev = 0.0, tp = 0.0, tz = -1.0;
        for (const auto& snap : ts.snapshots) {
            const double a = std::real(fft(snap.zeta)[2]);
            if (snap.t > 0.0 && prev > 0.0 && a <= 0.0) {
                tz = tp + (snap.t - tp) * prev / (prev - a);
                break;
            }
            prev = a;
            tp = snap.t;
        }
        const double wm = std::numbers::pi / 2.0 / tz;
        out.push_back({"standing-wave frequency at Nx = 128", tz > 0.0 && std::abs(wm / w - 1.0) <= 0.01,
                       fmt("%.6f vs %.6f, rel %.2e", wm, w, std::abs(wm / w - 1.0))});
    }
    {
        const auto p = nondim_params(0.7, 1.5, 0.1, 0.5);
        const Field z0 = PeriodicGrid(32).sample([](double x) { return std::cos(x) + 0.3 * std::sin(2 * x); });
        auto final_zeta = [&](double dt) {
            EvolutionConfig c;
            c.n_points = 32;
            c.params = p;
            c.dt = dt;
            c.t_end = 0.4;
            c.cadence = 1000;
            c.dealias = false;
            c.solve = {32, 1e-14, 0};
            return run(c, z0, Field(32, 0.0)).final_state().zeta;
        };
        const double cap = cfl_cap(p, PeriodicGrid(32));
        const Field a = final_zeta(cap), b = final_zeta(cap / 2), ref = final_zeta(cap / 16);
        const double order = std::log2(max_diff(a, ref) / max_diff(b, ref));
        out.push_back({"RK4 self-convergence order", std::abs(order - 4.0) <= 0.5, fmt("%.3f in 4 +- 0.5", order)});
    }
    {
        // paired internal-wave experiment; a run that reaches t_end counts as breakdown at infinity
        auto breakdown = [](double bond) {
            EvolutionConfig c;
            c.n_points = 64;
            c.params = nondim_params(0.6, 1.0, 0.8, 0.1, bond);
            c.t_end = 3.0;
            c.cadence = 100;
            const PeriodicGrid g(64);
            const TimeSeries ts = run(c, g.sample([](double x) { return 0.5 * std::cos(x); }),
                                      g.sample([](double x) { return std::sin(x); }));
            return std::pair{ts.breakdown_time.value_or(INFINITY), upsilon_nondim(c.params)};
        };
        const auto [t_big, u_big] = breakdown(1e5);
        const auto [t_small, u_small] = breakdown(2.0);
        out.push_back({"sigma-regularization ordering", t_big < t_small,
                       fmt("t_breakdown(Upsilon = %.3g) = %.3f < t_breakdown(Upsilon = %.3g) = %.3f", u_big, t_big,
                           u_small, t_small)});
    }
    return out;
}

Checks criterion_7() {
    Checks out;
    const auto t0 = std::chrono::steady_clock::now();
    {
        double worst = 0.0;
        for (double rb : {0.55, 0.7, 0.999})
            for (double ratio : {0.3, 1.0, 4.0}) {
                const auto [l1, l2] = jacobian_eigs(nondim_params(rb, ratio, 0.5, 0.01), 0.0, 0.0);
                worst = std::max({worst, std::abs(l1 + 1.0), std::abs(l2 - 1.0)});
            }
        out.push_back({"rest-state eigenvalues +-1", worst <= 1e-12, fmt("max deviation %.2e <= 1e-12", worst)});
    }
    {
        std::mt19937 rng(5);
        std::uniform_real_distribution<double> urb(0.51, 0.99), urat(0.2, 5.0), ueps(0.05, 0.9), u01(-0.95, 0.95);
        int cells = 0, disagree = 0;
        for (int k = 0; k < 200; ++k) {
            const auto p = nondim_params(urb(rng), urat(rng), ueps(rng), 0.01);
            const double zlim = std::min(1.0 / p.eps_plus, 1.0 / p.eps_minus);
            SWState s{Field(16), Field(16)};
            for (int i = 0; i < 16; ++i) {
                s.zeta[i] = u01(rng) * zlim;
                s.v[i] = 2.0 * std::abs(u01(rng)) * indicator_boundary_v(p, s.zeta[i]);
            }
            const Field ind = hyperbolicity_indicator(p, s);
            for (int i = 0; i < 16; ++i) {
                if (std::abs(ind[i]) < 1e-9) continue;
                ++cells;
                disagree += (ind[i] > 0.0) != (sw_jacobian(p, s.zeta[i], s.v[i]).discriminant() > 0.0);
            }
        }
        out.push_back({"indicator/discriminant sign agreement", disagree == 0 && cells > 3000,
                       fmt("%d disagreements over %d cells", disagree, cells)});
    }
    {
        const std::vector<double> mus{0.04, 0.02, 0.01, 0.005};
        const CompareTable t = compare_with_full(
            0.6, 1.0, 0.5, [](double x) { return 0.5 * std::cos(x); }, [](double x) { return 0.3 * std::cos(x); },
            mus, 1.0);
        const double e = t.mu_exponent.value_or(NAN);
        std::string d = fmt("%.3f in [0.7, 1.3];", e);
        bool monotone = true;
        for (size_t i = 0; i < t.rows.size(); ++i) {
            d += fmt(" mu %g: %.3e", t.rows[i].mu, t.rows[i].discrepancy);
            if (i > 0) monotone = monotone && t.rows[i].discrepancy < t.rows[i - 1].discrepancy;
        }
        out.push_back({"mu-convergence exponent at eps = 0.5", e >= 0.7 && e <= 1.3, d});
        out.push_back({"discrepancy decreases with mu", monotone, ""});
    }
    const double dt = seconds_since(t0);
    out.push_back({"runtime", dt < 300.0, fmt("%.1f s < 300 s", dt)});
    return out;
}

StabilityInputs flat_inputs(const PeriodicGrid& g, const DimensionlessParams& p, double jump, double e) {
    StabilityInputs in{g, p, {}, {}, {}, {}};
    in.zeta = Field(g.n(), 0.0);
    in.jump_v = Field(g.n(), jump);
    in.djump_v_dt = Field(g.n(), 0.0);
    in.a = Field(g.n(), 1.0);
    in.e_coeff = e;
    return in;
}

Checks criterion_8() {
    Checks out;
    const PeriodicGrid g(16);
    {
        std::mt19937 rng(2024);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int agree = 0, stable = 0;
        for (int k = 0; k < 50; ++k) {
            PhysicalConfig c;
            c.rho_plus = 1000.0 + 100.0 * u(rng);
            c.rho_minus = c.rho_plus * (0.001 + 0.99 * u(rng));
            c.depth_plus = std::pow(10.0, -1.0 + 2.0 * u(rng));
            c.depth_minus = std::pow(10.0, -1.0 + 2.0 * u(rng));
            c.amplitude = 0.05 * std::min(c.depth_plus, c.depth_minus) * (0.1 + u(rng));
            c.wavelength = std::pow(10.0, 2.0 * u(rng));
            c.surface_tension = std::pow(10.0, -3.0 + 2.0 * u(rng));
            const auto p = derive_params(c);
            auto in = flat_inputs(g, p, 0.0, e_flat_discrete(g, p));
            in.jump_v = g.sample([&](double x) { return 4.0 * u(rng) * std::cos(x); });
            in.a = Field(16, 0.5 + u(rng));
            in.physical = c;
            const StabilityReport r = evaluate_criteria(in);
            agree += r.dim_verdict.has_value() && *r.dim_verdict == r.sc_alt;
            stable += r.sc_alt;
        }
        out.push_back({"dimensional and dimensionless verdicts, 50 random configurations", agree == 50,
                       fmt("%d/50 agree (%d stable)", agree, stable)});
    }
    {
        const auto p = nondim_params(1.0, 1.0, 0.3, 0.5);
        auto in = flat_inputs(g, p, 5.0, 1.0);
        const StabilityReport pos = evaluate_criteria(in);
        in.a = Field(16, -0.1);
        const StabilityReport neg = evaluate_criteria(in);
        const bool ok = pos.upsilon == 0.0 && pos.margin_d == pos.inf_a && pos.sc && !neg.sc;
        out.push_back({"rho- = 0 reduces to inf a > 0", ok,
                       fmt("Upsilon %g, d = inf a = %g stable; inf a = -0.1 unstable", pos.upsilon, pos.inf_a)});
    }
    {
        std::mt19937 rng(77);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int tested = 0;
        double worst = INFINITY;
        for (int k = 0; k < 200; ++k) {
            const auto p = nondim_params(0.5 + 0.5 * u(rng) + 1e-6, 0.2 + 3.0 * u(rng), 0.3 * u(rng) + 0.01,
                                         0.05 + u(rng), std::pow(10.0, 4.0 * u(rng)));
            const double e = e_flat_discrete(g, p);
            const double J = 3.0 * u(rng) * std::pow(1.0 / std::max(upsilon_nondim(p) * e * e, 1e-300), 0.25);
            const StabilityReport r = evaluate_criteria(flat_inputs(g, p, J, e));
            if (!r.sc) continue;
            ++tested;
            const ModewiseMargin m = modewise_margin(p, r.inf_a, r.jump_sup, e);
            worst = std::min(worst, m.minimum - (r.margin_d / 2.0 - 1e-8));
        }
        out.push_back({"flat mode-wise margin >= d/2 - 1e-8 under (SC)", tested > 20 && worst >= 0.0,
                       fmt("%d stable states, min slack %.3e", tested, worst)});
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-8)")->check(CLI::Range(1, 8));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Checks()>>> all{
        {"case-study reproduction", criterion_1},  {"deep-water limit of c", criterion_2},
        {"DN operator correctness", criterion_3},  {"tail scaling", criterion_4},
        {"Kelvin cross-validation", criterion_5},  {"evolution", criterion_6},
        {"SW/SW model", criterion_7},              {"criterion consistency", criterion_8}};

    bool all_pass = true;
    for (size_t k = 0; k < all.size(); ++k) {
        if (only != 0 && static_cast<int>(k) + 1 != only) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Checks checks;
        std::string error;
        try {
            checks = all[k].second();
        } catch (const std::exception& e) {
            error = e.what();
        }
        bool pass = error.empty();
        for (const auto& c : checks) {
            std::printf("    [%s] %s: %s\n", c.pass ? "pass" : "FAIL", c.name.c_str(), c.detail.c_str());
            pass = pass && c.pass;
        }
        if (!error.empty()) std::printf("    [FAIL] exception: %s\n", error.c_str());
        std::printf("criterion %zu (%s): %s  [%.1f s]\n", k + 1, all[k].first.c_str(), pass ? "PASS" : "FAIL",
                    seconds_since(t0));
        std::fflush(stdout);
        all_pass = all_pass && pass;
    }
    return all_pass ? 0 : 1;
}
