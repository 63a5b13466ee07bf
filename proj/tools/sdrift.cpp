#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sdrift/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Simulation and rate experiments for Brownian motion with singular drift"};
    std::string config;
    sdrift::Overrides overrides;
    app.add_option("config", config, "experiment config (INI)")->required();
    app.add_option("--seed", overrides.seed, "override [sim] seed");
    app.add_option("--workers", overrides.workers, "override [run] workers");
    app.add_option("--out", overrides.out, "override [run] output");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : sdrift::kExitConfig;
    }
    return sdrift::run(config, overrides, std::cout, std::cerr);
}
