#pragma once

// Scenario files, case-study presets and report assembly for the CLI.
// Reports are nlohmann::ordered_json; fields appear in insertion order so that
// identical configurations serialize to identical bytes.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "kh/evolution.hpp"
#include "kh/kelvin.hpp"
#include "kh/stability.hpp"
#include "kh/strip.hpp"
#include "kh/swsw.hpp"
#include "kh/symbols.hpp"
#include "kh/units.hpp"

namespace kh {

inline constexpr const char* kToolVersion = "1.0.0";

enum class RunKind { Params, Criterion, Kelvin, DnVerify, TailVerify, Evolve, Swsw, Compare, Case };
enum class CaseName { AirWaterLong, AirWaterBreaking, KoopButler, Grue };

inline const std::vector<std::pair<RunKind, std::string>>& run_kind_names() {
    static const std::vector<std::pair<RunKind, std::string>> v{
        {RunKind::Params, "params"},     {RunKind::Criterion, "criterion"},    {RunKind::Kelvin, "kelvin"},
        {RunKind::DnVerify, "dn_verify"}, {RunKind::TailVerify, "tail_verify"}, {RunKind::Evolve, "evolve"},
        {RunKind::Swsw, "swsw"},         {RunKind::Compare, "compare"},        {RunKind::Case, "case"}};
    return v;
}

inline const std::vector<std::pair<CaseName, std::string>>& case_names() {
    static const std::vector<std::pair<CaseName, std::string>> v{{CaseName::AirWaterLong, "air_water_long"},
                                                                 {CaseName::AirWaterBreaking, "air_water_breaking"},
                                                                 {CaseName::KoopButler, "koop_butler"},
                                                                 {CaseName::Grue, "grue"}};
    return v;
}

template <class E>
std::string name_of(E e, const std::vector<std::pair<E, std::string>>& table) {
    for (const auto& [k, s] : table)
        if (k == e) return s;
    return "?";
}

inline std::string to_string(RunKind k) { return name_of(k, run_kind_names()); }
inline std::string to_string(CaseName c) { return name_of(c, case_names()); }

/// Semantic config error carrying the offending field path.
struct FieldError : ConfigError {
    std::string path;
    FieldError(const std::string& field, const std::string& what)
        : ConfigError("config field '" + field + "': " + what), path(field) {}
};

/// Syntax error with 1-based line and column.
struct ParseError : ConfigError {
    int line, column;
    ParseError(int l, int c, const std::string& what)
        : ConfigError("config parse error at line " + std::to_string(l) + ", column " + std::to_string(c) + ": " +
                      what),
          line(l),
          column(c) {}
};

struct Numerics {
    int n_points = 64;
    int n_z = 32;
    double dt = 0.0;  // 0 -> solver default
    double t_end = 1.0;
    double tolerance = 1e-11;
    int n_cells = 512;  // SW/SW finite-volume cells
    int cadence = 10;   // evolution steps between snapshots
};

/// Interface data as Fourier coefficients of modes 1, 2, ...: u = sum a_k cos kx + b_k sin kx.
struct InitialData {
    std::vector<double> zeta_cos{1.0}, zeta_sin, psi_cos, psi_sin;
};

struct CompareBlock {
    double rhobar_plus = 0.6;
    double depth_ratio = 1.0;
    double eps = 0.5;
    std::vector<double> mu_list{0.04, 0.02, 0.01, 0.005};
    int n_sw = 8192;
    std::optional<double> bond_times_mu;  // absent -> Bo = inf
};

struct SweepBlock {
    std::vector<double> eps_list{0.0, 0.025, 0.05, 0.1, 0.2};  // tail_verify
    std::vector<double> mu_list{0.01, 0.25, 1.0};             // dn_verify (mu+); tail_verify uses mu_list[0]
    std::vector<int> nz_list{128, 256, 512};                   // dn_verify
};

struct OutputSpec {
    std::string path;  // directory; empty -> report on stdout
    bool json = true;
    bool csv = false;
};

struct ScenarioConfig {
    RunKind run_kind = RunKind::Params;
    std::optional<CaseName> case_name;
    std::optional<PhysicalConfig> physical;
    Numerics numerics;
    InitialData initial;
    std::optional<double> shear;  // m s^-1, uniform velocity jump V+ - V-
    CompareBlock compare;
    SweepBlock sweep;
    OutputSpec output;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw FieldError(where.empty() ? "<root>" : where, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw FieldError(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

inline double get_number(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number()) throw FieldError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw FieldError(path, "must be finite");
    return v;
}

inline int get_int(const nlohmann::json& j, const std::string& path) {
    if (!j.is_number_integer()) throw FieldError(path, "expected an integer");
    return j.get<int>();
}

inline std::vector<double> get_numbers(const nlohmann::json& j, const std::string& path) {
    if (!j.is_array()) throw FieldError(path, "expected an array of numbers");
    std::vector<double> v;
    for (size_t i = 0; i < j.size(); ++i) v.push_back(get_number(j[i], path + "[" + std::to_string(i) + "]"));
    return v;
}

inline std::pair<int, int> line_column(const std::string& text, size_t byte) {
    int line = 1, col = 1;
    for (size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// physical fields a run kind cannot do without
inline std::vector<std::string> required_physical(RunKind k) {
    switch (k) {
        case RunKind::Params:
        case RunKind::Criterion:
        case RunKind::Evolve:
        case RunKind::Swsw:
            return {"rho_plus", "rho_minus", "depth_plus", "depth_minus", "amplitude", "wavelength", "surface_tension"};
        case RunKind::Kelvin: return {"rho_plus", "rho_minus", "depth_plus", "depth_minus", "surface_tension"};
        default: return {};
    }
}

}  // namespace detail

/// Parses and validates a scenario from JSON text; defaults fill absent blocks.
inline ScenarioConfig parse_config(const std::string& text) {
    using detail::get_int;
    using detail::get_number;
    using detail::get_numbers;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const auto [l, c] = detail::line_column(text, e.byte);
        throw ParseError(l, c, e.what());
    }
    detail::check_keys(j, "",
                       {"run_kind", "case_name", "physical", "numerics", "initial", "shear", "compare", "sweep",
                        "output"});
    ScenarioConfig c;
    if (!j.contains("run_kind")) throw FieldError("run_kind", "required");
    if (!j["run_kind"].is_string()) throw FieldError("run_kind", "expected a string");
    {
        const std::string s = j["run_kind"].get<std::string>();
        bool found = false;
        for (const auto& [k, n] : run_kind_names())
            if (n == s) {
                c.run_kind = k;
                found = true;
            }
        if (!found) throw FieldError("run_kind", "unknown value '" + s + "'");
    }
    if (j.contains("case_name")) {
        if (!j["case_name"].is_string()) throw FieldError("case_name", "expected a string");
        const std::string s = j["case_name"].get<std::string>();
        for (const auto& [k, n] : case_names())
            if (n == s) c.case_name = k;
        if (!c.case_name) throw FieldError("case_name", "unknown value '" + s + "'");
    }
    if (c.run_kind == RunKind::Case && !c.case_name) throw FieldError("case_name", "required for run_kind 'case'");

    const std::vector<std::string> required = detail::required_physical(c.run_kind);
    if (j.contains("physical")) {
        const auto& p = j["physical"];
        detail::check_keys(p, "physical",
                           {"rho_plus", "rho_minus", "depth_plus", "depth_minus", "amplitude", "wavelength",
                            "surface_tension", "gravity"});
        for (const auto& f : required)
            if (!p.contains(f))
                throw FieldError("physical." + f, "required for run_kind '" + to_string(c.run_kind) + "'");
        PhysicalConfig pc;
        pc.wavelength = 1.0;
        auto rd = [&](const char* key, double& dst) {
            if (p.contains(key)) dst = get_number(p[key], std::string("physical.") + key);
        };
        rd("rho_plus", pc.rho_plus);
        rd("rho_minus", pc.rho_minus);
        rd("depth_plus", pc.depth_plus);
        rd("depth_minus", pc.depth_minus);
        rd("amplitude", pc.amplitude);
        rd("wavelength", pc.wavelength);
        rd("surface_tension", pc.surface_tension);
        rd("gravity", pc.gravity);
        try {
            validate(pc);
        } catch (const ConfigError& e) {
            throw FieldError("physical", e.what());
        }
        c.physical = pc;
    } else if (!required.empty()) {
        throw FieldError("physical", "required for run_kind '" + to_string(c.run_kind) + "'");
    }

    if (j.contains("numerics")) {
        const auto& n = j["numerics"];
        detail::check_keys(n, "numerics", {"n_points", "n_z", "dt", "t_end", "tolerance", "n_cells", "cadence"});
        if (n.contains("n_points")) c.numerics.n_points = get_int(n["n_points"], "numerics.n_points");
        if (n.contains("n_z")) c.numerics.n_z = get_int(n["n_z"], "numerics.n_z");
        if (n.contains("dt")) c.numerics.dt = get_number(n["dt"], "numerics.dt");
        if (n.contains("t_end")) c.numerics.t_end = get_number(n["t_end"], "numerics.t_end");
        if (n.contains("tolerance")) c.numerics.tolerance = get_number(n["tolerance"], "numerics.tolerance");
        if (n.contains("n_cells")) c.numerics.n_cells = get_int(n["n_cells"], "numerics.n_cells");
        if (n.contains("cadence")) c.numerics.cadence = get_int(n["cadence"], "numerics.cadence");
    }
    const Numerics& nm = c.numerics;
    if (nm.n_points < 8 || nm.n_points % 2) throw FieldError("numerics.n_points", "must be even and >= 8");
    if (nm.n_z < 2) throw FieldError("numerics.n_z", "must be >= 2");
    if (nm.dt < 0.0) throw FieldError("numerics.dt", "must be >= 0");
    if (!(nm.t_end > 0.0)) throw FieldError("numerics.t_end", "must be > 0");
    if (!(nm.tolerance > 0.0 && nm.tolerance < 1.0)) throw FieldError("numerics.tolerance", "must lie in (0, 1)");
    if (nm.n_cells < 4) throw FieldError("numerics.n_cells", "must be >= 4");
    if (nm.cadence < 1) throw FieldError("numerics.cadence", "must be >= 1");

    if (j.contains("initial")) {
        const auto& in = j["initial"];
        detail::check_keys(in, "initial", {"zeta_cos", "zeta_sin", "psi_cos", "psi_sin"});
        c.initial = InitialData{{}, {}, {}, {}};
        if (in.contains("zeta_cos")) c.initial.zeta_cos = get_numbers(in["zeta_cos"], "initial.zeta_cos");
        if (in.contains("zeta_sin")) c.initial.zeta_sin = get_numbers(in["zeta_sin"], "initial.zeta_sin");
        if (in.contains("psi_cos")) c.initial.psi_cos = get_numbers(in["psi_cos"], "initial.psi_cos");
        if (in.contains("psi_sin")) c.initial.psi_sin = get_numbers(in["psi_sin"], "initial.psi_sin");
    }
    if (j.contains("shear")) c.shear = get_number(j["shear"], "shear");

    if (j.contains("compare")) {
        const auto& b = j["compare"];
        detail::check_keys(b, "compare", {"rhobar_plus", "depth_ratio", "eps", "mu_list", "n_sw", "bond_times_mu"});
        if (b.contains("rhobar_plus")) c.compare.rhobar_plus = get_number(b["rhobar_plus"], "compare.rhobar_plus");
        if (b.contains("depth_ratio")) c.compare.depth_ratio = get_number(b["depth_ratio"], "compare.depth_ratio");
        if (b.contains("eps")) c.compare.eps = get_number(b["eps"], "compare.eps");
        if (b.contains("mu_list")) c.compare.mu_list = get_numbers(b["mu_list"], "compare.mu_list");
        if (b.contains("n_sw")) c.compare.n_sw = get_int(b["n_sw"], "compare.n_sw");
        if (b.contains("bond_times_mu") && !b["bond_times_mu"].is_null())
            c.compare.bond_times_mu = get_number(b["bond_times_mu"], "compare.bond_times_mu");
        if (!(c.compare.rhobar_plus > 0.5 && c.compare.rhobar_plus <= 1.0))
            throw FieldError("compare.rhobar_plus", "must lie in (0.5, 1]");
        if (!(c.compare.depth_ratio > 0.0)) throw FieldError("compare.depth_ratio", "must be > 0");
        if (!(c.compare.eps >= 0.0)) throw FieldError("compare.eps", "must be >= 0");
        for (size_t i = 0; i < c.compare.mu_list.size(); ++i)
            if (!(c.compare.mu_list[i] > 0.0))
                throw FieldError("compare.mu_list[" + std::to_string(i) + "]", "must be > 0");
        if (c.compare.n_sw < 4) throw FieldError("compare.n_sw", "must be >= 4");
    }
    if (j.contains("sweep")) {
        const auto& b = j["sweep"];
        detail::check_keys(b, "sweep", {"eps_list", "mu_list", "nz_list"});
        if (b.contains("eps_list")) c.sweep.eps_list = get_numbers(b["eps_list"], "sweep.eps_list");
        if (b.contains("mu_list")) c.sweep.mu_list = get_numbers(b["mu_list"], "sweep.mu_list");
        if (b.contains("nz_list")) {
            if (!b["nz_list"].is_array()) throw FieldError("sweep.nz_list", "expected an array of integers");
            c.sweep.nz_list.clear();
            for (size_t i = 0; i < b["nz_list"].size(); ++i)
                c.sweep.nz_list.push_back(get_int(b["nz_list"][i], "sweep.nz_list[" + std::to_string(i) + "]"));
        }
        for (size_t i = 0; i < c.sweep.mu_list.size(); ++i)
            if (!(c.sweep.mu_list[i] > 0.0))
                throw FieldError("sweep.mu_list[" + std::to_string(i) + "]", "must be > 0");
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        detail::check_keys(o, "output", {"path", "formats"});
        if (o.contains("path")) {
            if (!o["path"].is_string()) throw FieldError("output.path", "expected a string");
            c.output.path = o["path"].get<std::string>();
        }
        if (o.contains("formats")) {
            if (!o["formats"].is_array()) throw FieldError("output.formats", "expected an array");
            c.output.json = c.output.csv = false;
            for (size_t i = 0; i < o["formats"].size(); ++i) {
                const auto& f = o["formats"][i];
                const std::string fp = "output.formats[" + std::to_string(i) + "]";
                if (!f.is_string()) throw FieldError(fp, "expected a string");
                if (f == "json")
                    c.output.json = true;
                else if (f == "csv")
                    c.output.csv = true;
                else
                    throw FieldError(fp, "unknown format '" + f.get<std::string>() + "'");
            }
        }
    }
    return c;
}

/// Reads and parses a scenario file; a missing file is a config error.
inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Normalized config with every default spelled out; parse_config(echo) reproduces it.
inline nlohmann::ordered_json config_echo(const ScenarioConfig& c) {
    nlohmann::ordered_json j;
    j["run_kind"] = to_string(c.run_kind);
    if (c.case_name) j["case_name"] = to_string(*c.case_name);
    if (c.physical) {
        const PhysicalConfig& p = *c.physical;
        j["physical"] = {{"rho_plus", p.rho_plus},       {"rho_minus", p.rho_minus},
                         {"depth_plus", p.depth_plus},   {"depth_minus", p.depth_minus},
                         {"amplitude", p.amplitude},     {"wavelength", p.wavelength},
                         {"surface_tension", p.surface_tension}, {"gravity", p.gravity}};
    }
    const Numerics& n = c.numerics;
    j["numerics"] = {{"n_points", n.n_points}, {"n_z", n.n_z},         {"dt", n.dt},          {"t_end", n.t_end},
                     {"tolerance", n.tolerance}, {"n_cells", n.n_cells}, {"cadence", n.cadence}};
    j["initial"] = {{"zeta_cos", c.initial.zeta_cos},
                    {"zeta_sin", c.initial.zeta_sin},
                    {"psi_cos", c.initial.psi_cos},
                    {"psi_sin", c.initial.psi_sin}};
    if (c.shear) j["shear"] = *c.shear;
    j["compare"] = {{"rhobar_plus", c.compare.rhobar_plus}, {"depth_ratio", c.compare.depth_ratio},
                    {"eps", c.compare.eps},                 {"mu_list", c.compare.mu_list},
                    {"n_sw", c.compare.n_sw}};
    j["compare"]["bond_times_mu"] =
        c.compare.bond_times_mu ? nlohmann::ordered_json(*c.compare.bond_times_mu) : nlohmann::ordered_json();
    j["sweep"] = {{"eps_list", c.sweep.eps_list}, {"mu_list", c.sweep.mu_list}, {"nz_list", c.sweep.nz_list}};
    nlohmann::ordered_json formats = nlohmann::ordered_json::array();
    if (c.output.json) formats.push_back("json");
    if (c.output.csv) formats.push_back("csv");
    j["output"] = {{"path", c.output.path}, {"formats", formats}};
    return j;
}

// ---------------------------------------------------------------------------
// case studies

struct GoldenValue {
    std::string name;
    double value = 0.0;
    double expected = 0.0;
    std::string tolerance_kind;  // "abs", "rel" or "factor"
    double tolerance = 0.0;
    std::string source;  // where the expected value comes from
    bool pass = false;

    double delta() const { return value - expected; }
    void judge() {
        if (tolerance_kind == "abs")
            pass = std::abs(value - expected) <= tolerance;
        else if (tolerance_kind == "rel")
            pass = std::abs(value / expected - 1.0) <= tolerance;
        else
            pass = value > 0.0 && std::max(value / expected, expected / value) <= tolerance;
    }
};

struct CaseResult {
    std::string name;
    std::string description;
    std::vector<GoldenValue> values;
    nlohmann::ordered_json details;
    bool pass() const {
        return std::all_of(values.begin(), values.end(), [](const GoldenValue& v) { return v.pass; });
    }
};

/// Air over sea water with equal layer depths, so H equals the water depth to 0.1%.
inline PhysicalConfig air_water(double depth, double amplitude, double wavelength) {
    PhysicalConfig c;
    c.rho_plus = 1025.0;
    c.rho_minus = 1.2;
    c.depth_plus = depth;
    c.depth_minus = depth;
    c.amplitude = amplitude;
    c.wavelength = wavelength;
    c.surface_tension = 0.073;
    return c;
}

/// Freon TF under deionized water, depths 1.366 cm and 6.948 cm; sigma is an estimate.
inline PhysicalConfig koop_butler(double amplitude) {
    PhysicalConfig c;
    c.rho_plus = 1563.0;
    c.rho_minus = 998.0;
    c.depth_plus = 0.01366;
    c.depth_minus = 0.06948;
    c.amplitude = amplitude;
    c.wavelength = 1.0;  // does not enter Upsilon or H
    c.surface_tension = 0.005;
    return c;
}

/// Brine under fresh water, depths 0.62 m and 0.15 m; sigma is the unknown of the case.
inline PhysicalConfig grue(double amplitude, double sigma) {
    PhysicalConfig c;
    c.rho_plus = 1022.0;
    c.rho_minus = 999.0;
    c.depth_plus = 0.62;
    c.depth_minus = 0.15;
    c.amplitude = amplitude;
    c.wavelength = 1.0;  // does not enter Upsilon or H
    c.surface_tension = sigma;
    return c;
}

inline GoldenValue golden(std::string name, double value, double expected, std::string kind, double tol,
                          std::string source) {
    GoldenValue g{std::move(name), value, expected, std::move(kind), tol, std::move(source), false};
    g.judge();
    return g;
}

inline CaseResult run_case(CaseName name) {
    CaseResult r;
    r.name = to_string(name);
    switch (name) {
        case CaseName::AirWaterLong: {
            const PhysicalConfig c = air_water(5.0, 0.1, 35.0);
            const DimensionlessParams p = derive_params(c);
            r.description = "long surface wave: depth 5 m, wavelength 35 m, amplitude 0.1 m";
            const double u = *p.upsilon / (p.eps * p.eps);
            r.values.push_back(golden("eps^-2 Upsilon", u, 4e-4, "factor", 1.5,
                                      "published order of magnitude 4e-4 (one significant digit)"));
            r.values.push_back(golden("Bo", p.bond, 1.7e8, "rel", 0.10, "published value 1.7e8"));
            r.details = {{"eps", p.eps},
                         {"mu", p.mu},
                         {"upsilon", *p.upsilon},
                         {"practical_strong_verdict", to_string(practical_verdict(u))}};
            break;
        }
        case CaseName::AirWaterBreaking: {
            const PhysicalConfig c = air_water(15.0, 6.0, 100.0);
            const DimensionlessParams p = derive_params(c);
            r.description = "wave near breaking: depth 15 m, amplitude 6 m";
            r.values.push_back(golden("Upsilon", *p.upsilon, 0.27, "rel", 0.05, "published value 0.27"));
            r.details = {{"eps_plus", p.eps_plus},
                         {"practical_verdict", to_string(practical_verdict(*p.upsilon))}};
            break;
        }
        case CaseName::KoopButler: {
            const PhysicalConfig lo = koop_butler(0.034e-2), hi = koop_butler(0.68e-2);
            r.description = "Freon/water tank, amplitudes 0.034 cm to 0.68 cm, sigma = 0.005 N/m";
            r.values.push_back(
                golden("H_cm", effective_depth(lo) * 100.0, 1.989, "abs", 0.001, "published value 1.989 cm"));
            r.values.push_back(golden("Upsilon_min", upsilon(lo), 5.39e-7, "rel", 0.05, "published value 5.39e-7"));
            r.values.push_back(golden("Upsilon_max", upsilon(hi), 0.086, "rel", 0.05, "published value 0.086"));
            r.details = {{"rhobar_plus", lo.rho_plus / (lo.rho_plus + lo.rho_minus)},
                         {"practical_verdict_min", to_string(practical_verdict(upsilon(lo)))},
                         {"practical_verdict_max", to_string(practical_verdict(upsilon(hi)))}};
            break;
        }
        case CaseName::Grue: {
            const double a_crit = 0.2;
            const double sigma = sigma_for_upsilon(grue(a_crit, 1.0), 1.0);
            const PhysicalConfig c = grue(a_crit, sigma);
            r.description = "brine/water tank, critical amplitude 0.2 m mapped to Upsilon = 1";
            r.values.push_back(golden("H_m", effective_depth(c), 0.243, "abs", 0.001, "published value 0.243 m"));
            r.values.push_back(golden("sigma_N_per_m", sigma, 0.095, "abs", 0.001, "published value 0.095 N/m"));
            r.details = {{"critical_amplitude_m", a_crit}, {"upsilon_at_critical", upsilon(c)}};
            break;
        }
    }
    return r;
}

inline nlohmann::ordered_json to_json(const CaseResult& r) {
    nlohmann::ordered_json j;
    j["case"] = r.name;
    j["description"] = r.description;
    j["pass"] = r.pass();
    nlohmann::ordered_json vals = nlohmann::ordered_json::array();
    for (const auto& v : r.values)
        vals.push_back({{"name", v.name},
                        {"value", v.value},
                        {"expected", v.expected},
                        {"delta", v.delta()},
                        {"tolerance_kind", v.tolerance_kind},
                        {"tolerance", v.tolerance},
                        {"pass", v.pass},
                        {"source", v.source}});
    j["values"] = vals;
    j["details"] = r.details;
    return j;
}

// ---------------------------------------------------------------------------
// verification sweeps

struct DnVerifyRow {
    double mu = 0.0;
    int nz = 0;
    double rel_l2 = 0.0;
};

struct DnVerifyReport {
    std::vector<DnVerifyRow> rows;
    std::map<double, double> z_order;  // per mu, slope of log error against log dz

    void write_csv(std::ostream& os) const {
        os << "mu,nz,rel_l2\n";
        os.precision(12);
        for (const auto& r : rows) os << r.mu << ',' << r.nz << ',' << r.rel_l2 << '\n';
    }
};

/// Flat "+" layer: elliptic DN map of psi = cos x against the multiplier, for each mu+ and n_z.
inline DnVerifyReport dn_verify(int n_points, const std::vector<double>& mu_list, const std::vector<int>& nz_list,
                                double tol = 1e-13) {
    DnVerifyReport rep;
    const PeriodicGrid g(n_points);
    const Field psi = g.sample([](double x) { return std::cos(x); });
    for (double mu : mu_list) {
        const DiffeoData d = build_trivial_diffeo(g, Field(n_points, 0.0), 0.0, mu, Layer::Plus);
        const Field ref = dn_flat(g, mu, Layer::Plus, psi);
        std::vector<double> dz, err;
        for (int nz : nz_list) {
            const Field gd = dn_apply(d, psi, {nz, tol, 0});
            Field diff(n_points);
            for (int i = 0; i < n_points; ++i) diff[i] = gd[i] - ref[i];
            const double e = norm_l2(g, diff) / norm_l2(g, ref);
            rep.rows.push_back({mu, nz, e});
            dz.push_back(1.0 / nz);
            err.push_back(e);
        }
        if (auto s = loglog_slope(dz, err)) rep.z_order[mu] = *s;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// scenario execution

struct CsvTable {
    std::string name;  // file stem
    std::string content;
};

struct RunResult {
    nlohmann::ordered_json results;
    std::vector<CsvTable> tables;
    bool assertion_failed = false;  // maps to exit code 3
    std::string assertion_message;
};

struct RunOptions {
    bool assert_stable = false;
    unsigned seed = 7;
    int threads = 1;
};

namespace detail {

inline Field synthesize(const PeriodicGrid& g, const std::vector<double>& cs, const std::vector<double>& sn) {
    return g.sample([&](double x) {
        double v = 0.0;
        for (size_t k = 0; k < cs.size(); ++k) v += cs[k] * std::cos((k + 1) * x);
        for (size_t k = 0; k < sn.size(); ++k) v += sn[k] * std::sin((k + 1) * x);
        return v;
    });
}

inline std::function<double(double)> series_fn(const std::vector<double>& cs, const std::vector<double>& sn) {
    return [cs, sn](double x) {
        double v = 0.0;
        for (size_t k = 0; k < cs.size(); ++k) v += cs[k] * std::cos((k + 1) * x);
        for (size_t k = 0; k < sn.size(); ++k) v += sn[k] * std::sin((k + 1) * x);
        return v;
    };
}

// derivative of the series above
inline std::function<double(double)> series_dx(const std::vector<double>& cs, const std::vector<double>& sn) {
    return [cs, sn](double x) {
        double v = 0.0;
        for (size_t k = 0; k < cs.size(); ++k) v -= (k + 1) * cs[k] * std::sin((k + 1) * x);
        for (size_t k = 0; k < sn.size(); ++k) v += (k + 1) * sn[k] * std::cos((k + 1) * x);
        return v;
    };
}

inline nlohmann::ordered_json num_or_null(double v) {
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json();
}

inline nlohmann::ordered_json params_json(const DimensionlessParams& p) {
    nlohmann::ordered_json j;
    j["rhobar_plus"] = p.rhobar_plus;
    j["rhobar_minus"] = p.rhobar_minus;
    j["eps"] = p.eps;
    j["mu"] = p.mu;
    j["eps_plus"] = p.eps_plus;
    j["eps_minus"] = p.eps_minus;
    j["mu_plus"] = p.mu_plus;
    j["mu_minus"] = p.mu_minus;
    j["hbar_plus"] = p.hbar_plus;
    j["hbar_minus"] = p.hbar_minus;
    j["bond"] = num_or_null(p.bond);
    j["g_reduced"] = num_or_null(p.g_reduced);
    j["h_eff"] = num_or_null(p.h_eff);
    j["wave_speed"] = num_or_null(p.wave_speed);
    j["upsilon"] = p.upsilon ? nlohmann::ordered_json(*p.upsilon) : nlohmann::ordered_json();
    return j;
}

template <class T>
std::string csv_of(const T& obj) {
    std::ostringstream os;
    obj.write_csv(os);
    return os.str();
}

inline RunResult run_params(const ScenarioConfig& c) {
    RunResult r;
    const DimensionlessParams p = derive_params(*c.physical);
    r.results["params"] = params_json(p);
    if (p.upsilon) {
        r.results["practical_verdict"] = to_string(practical_verdict(*p.upsilon));
        r.results["eps_minus2_upsilon"] = *p.upsilon / (p.eps * p.eps);
    }
    return r;
}

inline RunResult run_criterion(const ScenarioConfig& c, const RunOptions& ro) {
    RunResult r;
    const PhysicalConfig& pc = *c.physical;
    const DimensionlessParams p = derive_params(pc);
    const PeriodicGrid g(c.numerics.n_points);
    const int n = g.n();
    // flat interface, uniform layers: [V] constant, a = 1
    const double jump = c.shear ? *c.shear / shear_scale(pc) : 1.0;
    StabilityInputs in;
    in.grid = g;
    in.params = p;
    in.zeta = Field(n, 0.0);
    in.jump_v = Field(n, jump);
    in.djump_v_dt = Field(n, 0.0);
    in.a = Field(n, 1.0);
    in.physical = pc;
    const TwoFluid ops(g, in.zeta, p, {c.numerics.n_z, c.numerics.tolerance, 0});
    const ECoeffResult e = e_coeff(ops, 1e-8, 500, ro.seed);
    in.e_coeff = e.value;
    const StabilityReport rep = evaluate_criteria(in);
    r.results["params"] = params_json(p);
    r.results["jump_nondim"] = jump;
    r.results["jump_m_per_s"] = jump * shear_scale(pc);
    r.results["e_coeff_iterations"] = e.iterations;
    r.results["e_coeff_converged"] = e.converged;
    r.results["e_flat_modewise"] = c_flat(p).value;
    r.results["criteria"] = rep.to_json();
    r.results["dimensional"] = {{"lhs", num_or_null(*rep.dim_lhs)},
                                {"rhs", num_or_null(*rep.dim_rhs)},
                                {"stable", *rep.dim_verdict}};
    const ModewiseMargin mm = modewise_margin(p, rep.inf_a, rep.jump_sup, rep.e_coeff);
    r.results["modewise_margin"] = {{"minimum", num_or_null(mm.minimum)},
                                    {"argmin", num_or_null(mm.argmin)},
                                    {"unbounded_below", mm.unbounded_below}};
    if (ro.assert_stable && rep.verdict != Verdict::Stable) {
        r.assertion_failed = true;
        r.assertion_message = "criterion violated: margin d = " + std::to_string(rep.margin_d);
    }
    return r;
}

inline RunResult run_kelvin(const ScenarioConfig& c) {
    RunResult r;
    ShearConfig sc = shear_config(*c.physical);
    const CriticalShear cs = critical_shear(sc);
    const auto [hp, hm] = relative_depths(sc);
    const double s = sc.rho_plus + sc.rho_minus;
    const double e0 = c_flat(sc.rho_plus / s, sc.rho_minus / s, hp, hm).value;
    r.results["critical_shear_m_per_s"] = cs.shear;
    r.results["critical_k_per_m"] = cs.k;
    r.results["c0"] = e0;
    r.results["criterion_threshold_unsquared"] = num_or_null(kelvin_criterion_threshold(sc, e0));
    r.results["criterion_threshold_squared"] = num_or_null(kelvin_criterion_threshold(sc, e0 * e0));
    const double shear = c.shear.value_or(cs.shear);
    sc.c_plus = shear;
    r.results["shear_m_per_s"] = shear;
    std::vector<double> ks;
    const KRange kr;
    double gmax = 0.0;
    for (int i = 0; i < kr.n_scan; ++i) {
        ks.push_back(kr.k_min * std::pow(kr.k_max / kr.k_min, double(i) / (kr.n_scan - 1)));
        gmax = std::max(gmax, mode_growth(ks.back(), sc));
    }
    r.results["max_growth_rate_per_s"] = gmax;
    std::ostringstream os;
    write_dispersion_csv(os, sc, ks);
    r.tables.push_back({"dispersion", os.str()});
    return r;
}

inline RunResult run_dn_verify(const ScenarioConfig& c) {
    RunResult r;
    const DnVerifyReport rep = dn_verify(c.numerics.n_points, c.sweep.mu_list, c.sweep.nz_list);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : rep.rows) rows.push_back({{"mu", row.mu}, {"nz", row.nz}, {"rel_l2", row.rel_l2}});
    r.results["rows"] = rows;
    nlohmann::ordered_json orders = nlohmann::ordered_json::array();
    for (const auto& [mu, s] : rep.z_order) orders.push_back({{"mu", mu}, {"z_order", s}});
    r.results["z_order"] = orders;
    r.tables.push_back({"dn_verify", csv_of(rep)});
    return r;
}

inline RunResult run_tail_verify(const ScenarioConfig& c) {
    RunResult r;
    const PeriodicGrid g(c.numerics.n_points);
    const Field zeta = g.sample([](double x) { return std::cos(x); });
    const Field psi = g.sample([](double x) { return std::sin(x); });
    std::vector<std::pair<double, double>> sweep;
    const double mu = c.sweep.mu_list.empty() ? 0.5 : c.sweep.mu_list.front();
    for (double e : c.sweep.eps_list) sweep.push_back({e, mu});
    const TailReport rep = tail_error_report(g, zeta, psi, sweep, {0.0, std::max(c.numerics.n_z, 64), 1e-12});
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& t : rep.rows)
        rows.push_back({{"eps", t.eps},
                        {"mu", t.mu},
                        {"err_hs", t.err_hs},
                        {"err_hs_half", t.err_hs_half},
                        {"ratio", t.ratio},
                        {"ratio_tailless", t.ratio_tailless},
                        {"fitted", t.fitted},
                        {"error", t.error}});
    r.results["rows"] = rows;
    r.results["eps_exponent"] = rep.eps_exponent ? nlohmann::ordered_json(*rep.eps_exponent) : nlohmann::ordered_json();
    r.tables.push_back({"tail", csv_of(rep)});
    return r;
}

inline RunResult run_evolve(const ScenarioConfig& c) {
    RunResult r;
    const DimensionlessParams p = derive_params(*c.physical);
    EvolutionConfig ec;
    ec.n_points = c.numerics.n_points;
    ec.dt = c.numerics.dt;
    ec.t_end = c.numerics.t_end;
    ec.params = p;
    ec.cadence = c.numerics.cadence;
    ec.solve = {c.numerics.n_z, c.numerics.tolerance, 0};
    const PeriodicGrid g(ec.n_points);
    const TimeSeries ts = run(ec, synthesize(g, c.initial.zeta_cos, c.initial.zeta_sin),
                              synthesize(g, c.initial.psi_cos, c.initial.psi_sin));
    r.results["params"] = params_json(p);
    r.results["dt"] = ts.dt;
    r.results["steps"] = ts.steps;
    r.results["snapshots"] = ts.snapshots.size();
    r.results["t_final"] = ts.final_state().t;
    r.results["breakdown_time"] = ts.breakdown_time ? nlohmann::ordered_json(*ts.breakdown_time) : nlohmann::ordered_json();
    r.results["breakdown_reason"] = ts.breakdown_reason;
    double drift = 0.0;
    for (const auto& d : ts.diagnostics) drift = std::max(drift, std::abs(d.mass - ts.diagnostics.front().mass));
    r.results["mass_drift"] = drift;
    if (ts.snapshots.size() >= 3) {
        double worst = std::numeric_limits<double>::infinity();
        MonitorOptions mo;
        mo.exact_e = false;
        for (const auto& rep : monitor_criterion(ts, ec.solve, mo)) worst = std::min(worst, rep.margin_d);
        r.results["min_margin_d"] = num_or_null(worst);
    }
    r.tables.push_back({"evolution", csv_of(ts)});
    return r;
}

inline RunResult run_swsw(const ScenarioConfig& c) {
    RunResult r;
    const DimensionlessParams p = derive_params(*c.physical);
    SWConfig sc;
    sc.n_cells = c.numerics.n_cells;
    sc.t_end = c.numerics.t_end;
    sc.params = p;
    for (int k = 1; k < 10; ++k) sc.output_times.push_back(sc.t_end * k / 10.0);
    const auto z = series_fn(c.initial.zeta_cos, c.initial.zeta_sin);
    const auto v = series_dx(c.initial.psi_cos, c.initial.psi_sin);
    const double dx = sc.length / sc.n_cells;
    SWState init{Field(sc.n_cells), Field(sc.n_cells)};
    for (int i = 0; i < sc.n_cells; ++i) {
        init.zeta[i] = z((i + 0.5) * dx);
        init.v[i] = v((i + 0.5) * dx);
    }
    const SWSeries ts = run(sc, init);
    r.results["params"] = params_json(p);
    r.results["steps"] = ts.steps;
    r.results["t_final"] = ts.times.back();
    r.results["indicator_min"] = ts.indicator_min;
    r.results["dry_state"] = ts.dry_state;
    if (ts.loss)
        r.results["hyperbolicity_loss"] = {{"time", ts.loss->time},
                                           {"cell", ts.loss->cell},
                                           {"indicator", ts.loss->indicator_value}};
    else
        r.results["hyperbolicity_loss"] = nullptr;
    r.tables.push_back({"swsw", csv_of(ts)});
    return r;
}

inline RunResult run_compare(const ScenarioConfig& c, const RunOptions& ro) {
    RunResult r;
    CompareOptions o;
    o.n_full = c.numerics.n_points;
    o.n_sw = c.compare.n_sw;
    o.solve = {c.numerics.n_z, c.numerics.tolerance, 0};
    if (c.compare.bond_times_mu) o.bond_times_mu = *c.compare.bond_times_mu;
    const auto z0 = series_fn(c.initial.zeta_cos, c.initial.zeta_sin);
    const auto p0 = series_fn(c.initial.psi_cos, c.initial.psi_sin);
    const auto& mus = c.compare.mu_list;
    // one table per mu, merged in input order
    std::vector<CompareTable> parts(mus.size());
    auto work = [&](size_t i) {
        parts[i] = compare_with_full(c.compare.rhobar_plus, c.compare.depth_ratio, c.compare.eps, z0, p0, {mus[i]},
                                     c.numerics.t_end, o);
    };
    const size_t nt = std::max<size_t>(1, std::min<size_t>(ro.threads > 0 ? ro.threads : 1, mus.size()));
    if (nt == 1) {
        for (size_t i = 0; i < mus.size(); ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        for (size_t t = 0; t < nt; ++t)
            pool.emplace_back([&, t] {
                for (size_t i = t; i < mus.size(); i += nt) work(i);
            });
        for (auto& th : pool) th.join();
    }
    CompareTable tab;
    std::vector<double> x, y;
    for (const auto& part : parts)
        for (const auto& row : part.rows) {
            tab.rows.push_back(row);
            if (row.fitted && row.discrepancy > 0.0) {
                x.push_back(row.mu);
                y.push_back(row.discrepancy);
            }
        }
    tab.mu_exponent = loglog_slope(x, y);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : tab.rows)
        rows.push_back({{"mu", row.mu},
                        {"discrepancy", row.discrepancy},
                        {"zeta_part", row.zeta_part},
                        {"v_part", row.v_part},
                        {"fitted", row.fitted},
                        {"error", row.error}});
    r.results["rows"] = rows;
    r.results["mu_exponent"] = tab.mu_exponent ? nlohmann::ordered_json(*tab.mu_exponent) : nlohmann::ordered_json();
    r.tables.push_back({"compare", csv_of(tab)});
    return r;
}

}  // namespace detail

/// Executes a validated scenario. Library errors propagate to the caller.
inline RunResult run_scenario(const ScenarioConfig& c, const RunOptions& ro = {}) {
    switch (c.run_kind) {
        case RunKind::Params: return detail::run_params(c);
        case RunKind::Criterion: return detail::run_criterion(c, ro);
        case RunKind::Kelvin: return detail::run_kelvin(c);
        case RunKind::DnVerify: return detail::run_dn_verify(c);
        case RunKind::TailVerify: return detail::run_tail_verify(c);
        case RunKind::Evolve: return detail::run_evolve(c);
        case RunKind::Swsw: return detail::run_swsw(c);
        case RunKind::Compare: return detail::run_compare(c, ro);
        case RunKind::Case: {
            RunResult r;
            const CaseResult cr = run_case(*c.case_name);
            r.results = to_json(cr);
            if (!cr.pass()) {
                r.assertion_failed = true;
                std::ostringstream os;
                os << "case " << cr.name << " outside tolerance:";
                for (const auto& v : cr.values)
                    if (!v.pass) os << ' ' << v.name << " delta " << v.delta();
                r.assertion_message = os.str();
            }
            return r;
        }
    }
    throw ConfigError("unhandled run kind");
}

/// Report envelope; the timestamp is the only field that differs between identical runs.
inline nlohmann::ordered_json make_report(const ScenarioConfig& c, const RunResult& r, const RunOptions& ro,
                                          const std::string& timestamp) {
    nlohmann::ordered_json j;
    j["tool"] = "kh_cli";
    j["version"] = kToolVersion;
    j["generated_at"] = timestamp;
    j["config"] = config_echo(c);
    j["seed"] = ro.seed;
    j["status"] = r.assertion_failed ? "fail" : "pass";
    if (r.assertion_failed) j["failure"] = r.assertion_message;
    j["results"] = r.results;
    return j;
}

}  // namespace kh
