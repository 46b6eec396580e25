// kh_cli: batch front end for scenario files and case-study presets.
// Exit codes: 0 success, 1 config error, 2 I/O or numerical failure, 3 assertion or tolerance failure.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "kh/scenarios.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kInfra = 2, kAssert = 3 };

std::string utc_timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// false when the file cannot be written
bool write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out.flush());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-fluid interfacial stability toolkit"};
    std::string config_path, case_name, out_dir, formats;
    bool assert_stable = false;
    std::uint64_t seed = 7;
    int threads = 1;
    auto* cfg_opt = app.add_option("--config", config_path, "scenario JSON file")->check(CLI::ExistingFile);
    auto* case_opt = app.add_option("--case", case_name, "case preset")
                         ->check(CLI::IsMember({"air_water_long", "air_water_breaking", "koop_butler", "grue"}));
    cfg_opt->excludes(case_opt);
    app.add_option("--out", out_dir, "output directory (overrides output.path)");
    app.add_option("--format", formats, "comma-separated subset of json,csv");
    app.add_flag("--assert-stable", assert_stable, "exit 3 when a criterion run finds an unstable configuration");
    app.add_option("--seed", seed, "seed for randomized start vectors");
    app.add_option("--threads", threads, "threads for parameter sweeps")->check(CLI::PositiveNumber);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }
    if (config_path.empty() && case_name.empty()) {
        std::cerr << "error: one of --config or --case is required\n";
        return kConfig;
    }

    kh::ScenarioConfig cfg;
    try {
        if (!config_path.empty())
            cfg = kh::load_config(config_path);
        else
            cfg = kh::parse_config(R"({"run_kind": "case", "case_name": ")" + case_name + "\"}");
        if (!out_dir.empty()) cfg.output.path = out_dir;
        if (!formats.empty()) {
            cfg.output.json = cfg.output.csv = false;
            std::stringstream ss(formats);
            std::string f;
            while (std::getline(ss, f, ',')) {
                if (f == "json")
                    cfg.output.json = true;
                else if (f == "csv")
                    cfg.output.csv = true;
                else
                    throw kh::ConfigError("--format: unknown format '" + f + "'");
            }
        }
    } catch (const kh::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }

    const kh::RunOptions ro{assert_stable, static_cast<unsigned>(seed), threads};
    kh::RunResult res;
    try {
        res = kh::run_scenario(cfg, ro);
    } catch (const kh::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInfra;
    }

    const std::string report = kh::make_report(cfg, res, ro, utc_timestamp()).dump(2) + "\n";
    if (cfg.output.path.empty()) {
        if (cfg.output.json) std::cout << report;
    } else {
        const std::filesystem::path dir(cfg.output.path);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) {
            std::cerr << "error: cannot create output directory '" << dir.string() << "': " << ec.message() << '\n';
            return kInfra;
        }
        if (cfg.output.json && !write_file(dir / "report.json", report)) {
            std::cerr << "error: cannot write " << (dir / "report.json").string() << '\n';
            return kInfra;
        }
        if (cfg.output.csv)
            for (const auto& t : res.tables)
                if (!write_file(dir / (t.name + ".csv"), t.content)) {
                    std::cerr << "error: cannot write " << (dir / (t.name + ".csv")).string() << '\n';
                    return kInfra;
                }
    }
    if (res.assertion_failed) {
        std::cerr << "assertion failed: " << res.assertion_message << '\n';
        return kAssert;
    }
    return kOk;
}
