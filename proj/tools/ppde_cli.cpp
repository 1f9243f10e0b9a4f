#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "ppde/cli_runner.hpp"

namespace {

int run(const std::string& name, const std::string& config_path,
        const std::vector<std::string>& overrides, bool quiet) {
    nlohmann::json config;
    try {
        std::ifstream is(config_path);
        if (!is) {
            std::cerr << "error: cannot open config file '" << config_path << "'\n";
            return 2;
        }
        config = nlohmann::json::parse(is);
        for (const auto& o : overrides) ppde::cli::apply_override(config, o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    const ppde::cli::RunResult res = ppde::cli::run_subcommand(name, config);
    if (res.exit_code != 0) {
        std::cerr << "error: " << res.error << "\n";
        return res.exit_code;
    }
    if (!quiet) std::cout << res.output.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo toolkit for semilinear path-dependent PDEs in mild form"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool quiet = false;

    const std::vector<std::string> names{"simulate",  "solve",        "fk",        "control",
                                         "viscosity", "check-derivs", "validate-f"};
    std::string chosen;
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("-c,--config", config_path, "JSON config file")->required();
        sub->add_option("--set", overrides,
                        "override a config entry, e.g. --set run.seed=7")
            ->take_all();
        sub->add_flag("-q,--quiet", quiet, "suppress the JSON result on stdout");
        sub->callback([&chosen, name]() { chosen = name; });
    }

    CLI11_PARSE(app, argc, argv);
    return run(chosen, config_path, overrides, quiet);
}
