// oslab: configuration-driven runner for cocycle spectrum, domination and
// perturbation experiments.
//
//   oslab run <config> [--out <path>] [--seed <u64>] [--quiet]
//   oslab plot <report> --series <name> [--step <id>] [--out <path>]
//
// Exit codes: 0 success, 2 configuration or usage error, 3 capacity error,
// 4 numeric failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "oslab/config.hpp"
#include "oslab/runner.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_capacity = 3;
constexpr int exit_numeric = 4;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw oslab::ConfigError("", 0, "cannot read '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw oslab::ConfigError("", 0, "cannot write '" + out_path + "'");
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lyapunov spectra, domination certificates and entropy-drop perturbations of linear cocycles"};
    app.require_subcommand(1);
    app.set_version_flag("--version", oslab::tool_version);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run the pipeline of a configuration file and write a JSON report");
    run->add_option("config", config_path, "Configuration file (JSON, comments allowed)")->required();
    run->add_option("--out", out_path, "Report path (default: stdout)");
    run->add_option("--seed", seed, "Override the configuration seed");
    run->add_flag("--quiet", quiet, "Do not print the summary line on stderr");

    std::string report_path, series, step_id, plot_out;
    auto* plot = app.add_subcommand("plot", "Extract a tab-separated data table from a report");
    plot->add_option("report", report_path, "Report file written by 'run'")->required();
    plot->add_option("--series", series, "exponent_convergence | a_n_over_n | entropy_before_after")->required();
    plot->add_option("--step", step_id, "Step id to read (default: first matching step)");
    plot->add_option("--out", plot_out, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*run) {
            const auto cfg = oslab::parse_config(slurp(config_path), seed);
            const auto report = oslab::run_experiment(cfg);
            emit(report.dump(2) + "\n", out_path);
            if (!quiet)
                std::cerr << "oslab: " << cfg.steps.size() << " step(s), config hash "
                          << report.at("config_hash").get<std::string>() << "\n";
        } else {
            const auto report = oslab::ordered_json::parse(slurp(report_path));
            emit(oslab::plot_table(report, series, step_id), plot_out);
        }
    } catch (const oslab::ConfigError& e) {
        std::cerr << "oslab: " << e.what() << "\n";
        return exit_config;
    } catch (const oslab::SeriesMissing& e) {
        std::cerr << "oslab: " << e.what() << "\n";
        return exit_config;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "oslab: malformed report: " << e.what() << "\n";
        return exit_config;
    } catch (const oslab::CapacityError& e) {
        std::cerr << "oslab: " << e.what() << "\n";
        return exit_capacity;
    } catch (const std::exception& e) {
        std::cerr << "oslab: numeric failure: " << e.what() << "\n";
        return exit_numeric;
    }
    return 0;
}
