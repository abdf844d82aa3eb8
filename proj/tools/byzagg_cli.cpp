// Thin CLI over the C API; links only against the shared library surface.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "byzagg.h"

namespace {

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t consumed = 0;
        const double value = std::stod(item, &consumed);
        if (consumed != item.size()) {
            throw std::invalid_argument("bad numeric value in --values: " + item);
        }
        out.push_back(value);
    }
    if (out.empty()) throw std::invalid_argument("--values parsed to an empty list");
    return out;
}

int report(int code) {
    if (code != BYZAGG_OK) {
        const char* message = byzagg_last_error();
        if (message != nullptr && message[0] != '\0') {
            std::cerr << "error: " << message << "\n";
        }
    }
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Byzantine-robust federated learning simulator"};
    app.require_subcommand(0, 1);
    app.set_version_flag("--version", std::string(byzagg_version()));

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "Run one experiment config");
    run->add_option("--config", config_path, "Path to INI config")->required();
    run->add_option("--out", out_dir, "Output directory (default: $BYZAGG_OUT or ./out)");
    run->add_option("--seed", seed, "Override the config seed")
        ->each([&](const std::string&) { seed_set = true; });

    std::string axis;
    std::string values_csv;
    std::size_t sweep_seeds = 1;
    std::size_t jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "Sweep one config axis over values x seeds");
    sweep->add_option("--config", config_path, "Path to INI config")->required();
    sweep->add_option("--out", out_dir, "Output directory (default: $BYZAGG_OUT or ./out)");
    sweep->add_option("--axis", axis, "Config axis: d, epsilon, m, n, sigma")->required();
    sweep->add_option("--values", values_csv, "Comma-separated axis values")->required();
    sweep->add_option("--seeds", sweep_seeds, "Seeds per value (default 1)");
    sweep->add_option("--jobs", jobs, "Parallel workers (default 1)");

    std::string suites_csv;
    auto* accept = app.add_subcommand("accept", "Run acceptance criteria");
    accept->add_option("--suite", suites_csv,
                       "Comma-separated criterion ids, e.g. A1,A4 (default: all)");

    bool print_defaults = false;
    app.add_flag("--print-defaults", print_defaults, "Print a default config and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : BYZAGG_ERR_CONFIG;
    }

    try {
        if (print_defaults) {
            std::cout << byzagg_default_config();
            return 0;
        }

        const char* out_arg = out_dir.empty() ? nullptr : out_dir.c_str();
        if (run->parsed()) {
            return report(byzagg_run(config_path.c_str(), out_arg, seed_set ? 1 : 0, seed));
        }
        if (sweep->parsed()) {
            const std::vector<double> values = parse_values(values_csv);
            return report(byzagg_sweep(config_path.c_str(), out_arg, axis.c_str(),
                                       values.data(), values.size(), sweep_seeds, jobs));
        }
        if (accept->parsed()) {
            std::vector<std::string> ids;
            std::stringstream ss(suites_csv);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (!item.empty()) ids.push_back(item);
            }
            std::vector<const char*> ptrs;
            for (const std::string& id : ids) ptrs.push_back(id.c_str());
            return report(byzagg_accept(ptrs.empty() ? nullptr : ptrs.data(), ptrs.size()));
        }
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return BYZAGG_ERR_CONFIG;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return BYZAGG_ERR_RUNTIME;
    }

    std::cout << app.help();
    return 0;
}
