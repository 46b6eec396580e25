#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kh/scenarios.hpp"

using namespace kh;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("kh_scenarios_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

// exit status of the CLI, or -1 when KH_CLI is not set
int cli(const std::string& args) {
    const char* exe = std::getenv("KH_CLI");
    if (!exe) return -1;
    const int rc = std::system((std::string(exe) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string without_timestamp(const std::string& report) {
    std::istringstream in(report);
    std::string line, out;
    while (std::getline(in, line))
        if (line.find("\"generated_at\"") == std::string::npos) out += line + "\n";
    return out;
}

}  // namespace

TEST_CASE("load_config: preset file, defaults, unknown keys, missing fields, syntax errors") {
    const ScenarioConfig c = load_config(std::string(KH_SOURCE_DIR) + "/configs/case_grue.json");
    CHECK(c.run_kind == RunKind::Case);
    REQUIRE(c.case_name.has_value());
    CHECK(*c.case_name == CaseName::Grue);
    CHECK(c.numerics.n_points == 64);
    CHECK(c.output.json);
    CHECK_FALSE(c.output.csv);

    try {
        parse_config(R"({"run_kind": "params", "physical": {"rho_plus": 1000, "viscosity": 1e-3}})");
        FAIL("unknown key accepted");
    } catch (const FieldError& e) {
        CHECK(e.path == "physical.viscosity");
    }
    try {
        parse_config(R"({"run_kind": "criterion", "physical": {"rho_plus": 1000, "rho_minus": 1, "depth_plus": 1,
                         "depth_minus": 1, "amplitude": 0.1, "wavelength": 1}})");
        FAIL("missing sigma accepted");
    } catch (const FieldError& e) {
        CHECK(e.path == "physical.surface_tension");
    }
    CHECK_THROWS_AS(parse_config(R"({"run_kind": "case"})"), FieldError);
    CHECK_THROWS_AS(parse_config(R"({"run_kind": "swim"})"), FieldError);
    CHECK_THROWS_AS(parse_config(R"({"run_kind": "params", "numerics": {"n_points": 7}})"), FieldError);
    try {
        parse_config("{\n  \"run_kind\": \"params\",\n  \"numerics\": {\"n_points\": }\n}");
        FAIL("syntax error accepted");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
        CHECK(e.column > 1);
    }
    CHECK_THROWS_AS(load_config("/nonexistent/kh.json"), ConfigError);
}

TEST_CASE("config echo round-trips through the loader") {
    for (const char* f : {"criterion_air_water.json", "compare_mu.json", "evolve_internal.json", "case_grue.json"}) {
        const ScenarioConfig c = load_config(std::string(KH_SOURCE_DIR) + "/configs/" + f);
        const auto echo = config_echo(c);
        CHECK(config_echo(parse_config(echo.dump())).dump() == echo.dump());
    }
}

TEST_CASE("case presets reproduce their golden values and carry sources") {
    for (const auto& [name, label] : case_names()) {
        const CaseResult r = run_case(name);
        CHECK(r.name == label);
        CHECK(r.pass());
        for (const auto& v : r.values) {
            CHECK_FALSE(v.source.empty());
            INFO(label << " " << v.name << " = " << v.value);
            CHECK(v.pass);
        }
    }
    const CaseResult kb = run_case(CaseName::KoopButler);
    CHECK(kb.values[0].value == Approx(1.989).margin(1e-3));
    const CaseResult g = run_case(CaseName::Grue);
    CHECK(upsilon(grue(0.2, g.values[1].value)) == Approx(1.0).epsilon(1e-12));
    const auto j = to_json(kb);
    CHECK(j["values"][0].contains("source"));
    CHECK(j["values"][0].contains("delta"));
}

TEST_CASE("golden judge: abs, rel and factor tolerances") {
    CHECK(golden("a", 1.0005, 1.0, "abs", 1e-3, "s").pass);
    CHECK_FALSE(golden("a", 1.002, 1.0, "abs", 1e-3, "s").pass);
    CHECK(golden("r", 1.04, 1.0, "rel", 0.05, "s").pass);
    CHECK_FALSE(golden("r", 0.94, 1.0, "rel", 0.05, "s").pass);
    CHECK(golden("f", 5.9e-4, 4e-4, "factor", 1.5, "s").pass);
    CHECK_FALSE(golden("f", 2.5e-4, 4e-4, "factor", 1.5, "s").pass);
}

TEST_CASE("reports: deterministic, empty sweeps give header-only CSV") {
    ScenarioConfig c = parse_config(R"({"run_kind": "kelvin", "physical": {"rho_plus": 1025, "rho_minus": 1.2,
        "depth_plus": 5, "depth_minus": 100, "surface_tension": 0.073}, "shear": 8.0})");
    const RunOptions ro;
    const auto a = make_report(c, run_scenario(c, ro), ro, "t").dump();
    const auto b = make_report(c, run_scenario(c, ro), ro, "t").dump();
    CHECK(a == b);
    const RunResult k = run_scenario(c, ro);
    REQUIRE(k.tables.size() == 1);
    CHECK(k.tables[0].content.rfind("k,re_omega1,re_omega2,im_omega_max\n", 0) == 0);

    ScenarioConfig e = parse_config(R"({"run_kind": "compare", "compare": {"mu_list": []}})");
    const RunResult r = run_scenario(e, ro);
    REQUIRE(r.tables.size() == 1);
    CHECK(r.tables[0].content == "mu,discrepancy,zeta_part,v_part,fitted\n");
    CHECK(r.results["mu_exponent"].is_null());
}

TEST_CASE("compare sweep: thread count does not change the numbers") {
    ScenarioConfig c = parse_config(R"({"run_kind": "compare", "numerics": {"n_points": 16, "t_end": 0.1},
        "initial": {"zeta_cos": [0.3]}, "compare": {"mu_list": [0.04, 0.02, 0.01], "n_sw": 256}})");
    RunOptions one, three;
    three.threads = 3;
    CHECK(run_scenario(c, one).results.dump() == run_scenario(c, three).results.dump());
}

TEST_CASE("criterion: assert-stable flags unstable configurations") {
    ScenarioConfig c = load_config(std::string(KH_SOURCE_DIR) + "/configs/criterion_air_water.json");
    c.numerics.n_points = 16;
    RunOptions ro;
    ro.assert_stable = true;
    const RunResult ok = run_scenario(c, ro);
    CHECK_FALSE(ok.assertion_failed);
    CHECK(ok.results["criteria"]["verdict"] == "stable");
    CHECK(ok.results["dimensional"]["stable"] == true);
    c.shear = 50.0;
    const RunResult bad = run_scenario(c, ro);
    CHECK(bad.assertion_failed);
    CHECK(bad.results["criteria"]["verdict"] == "unstable");
}

TEST_CASE("dn_verify: flat elliptic DN map against the multiplier") {
    const DnVerifyReport rep = dn_verify(32, {0.25}, {32, 64, 128});
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows.back().rel_l2 < rep.rows.front().rel_l2);
    CHECK(rep.z_order.at(0.25) == Approx(2.0).margin(0.3));
}

TEST_CASE("CLI: exit codes and byte-identical reports") {
    if (!std::getenv("KH_CLI")) {
        WARN("KH_CLI not set; CLI checks skipped");
        return;
    }
    const std::string src = KH_SOURCE_DIR;
    // same output path, so the config echo is identical too
    const fs::path d1 = scratch("a");
    CHECK(cli("--case koop_butler --out " + d1.string()) == 0);
    const std::string r1 = slurp(d1 / "report.json");
    CHECK(cli("--case koop_butler --out " + d1.string()) == 0);
    const std::string r2 = slurp(d1 / "report.json");
    CHECK_FALSE(r1.empty());
    CHECK(without_timestamp(r1) == without_timestamp(r2));
    const auto j = nlohmann::json::parse(r1);
    CHECK(j["status"] == "pass");
    CHECK(j["config"]["case_name"] == "koop_butler");

    const fs::path bad = scratch("bad") / "bad.json";
    std::ofstream(bad) << R"({"run_kind": "params", "viscosity": 1})";
    CHECK(cli("--config " + bad.string()) == 1);
    std::ofstream(bad) << "{\"run_kind\": ";
    CHECK(cli("--config " + bad.string()) == 1);
    CHECK(cli("") == 1);
    CHECK(cli("--case grue --out /proc/kh_unwritable") == 2);

    const fs::path d3 = scratch("k");
    CHECK(cli("--config " + src + "/configs/kelvin_air_water.json --out " + d3.string() + " --format json,csv") == 0);
    CHECK(fs::exists(d3 / "dispersion.csv"));
    CHECK(fs::exists(d3 / "report.json"));

    const fs::path unstable = scratch("u") / "u.json";
    std::ofstream(unstable) << R"({"run_kind": "criterion", "physical": {"rho_plus": 1025, "rho_minus": 1.2,
        "depth_plus": 15, "depth_minus": 1000, "amplitude": 6, "wavelength": 100, "surface_tension": 0.073},
        "numerics": {"n_points": 16}, "shear": 50.0})";
    CHECK(cli("--config " + unstable.string() + " --assert-stable") == 3);
    CHECK(cli("--config " + unstable.string()) == 0);
}
