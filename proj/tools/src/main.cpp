// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"
#include "run_config.hpp"

#include "rtad/error.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace rtad::app;

    CLI::App app{"Relational-temporal anomaly detection for multivariate service metrics"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    bool quiet = false;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"synth", "Generate a synthetic dataset with planted faults"},
        {"train", "Train a detector and write a checkpoint"},
        {"detect", "Score a test series with a checkpoint"},
        {"localize", "Rank culprit metrics for anomaly segments"},
        {"sweep-beta", "Train and evaluate across pseudo-label thresholds"},
    };
    for (const auto& [name, help] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("-s,--set", overrides, "Override one setting (key=value)");
        sub->add_flag("-q,--quiet", quiet, "Suppress per-epoch progress");
    }
    app.footer("Outputs go to a timestamped directory under $RTAD_OUTPUT_ROOT (default ./runs).\n"
               "Exit codes: 0 ok, 2 config error, 3 data error, 4 checkpoint error.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    RunConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg.load_file(config_path);
        }
        for (const auto& o : overrides) {
            cfg.apply_override(o);
        }
    } catch (const rtad::ConfigError& e) {
        std::cerr << "rtad " << name << ": " << e.what() << "\n";
        return kExitConfig;
    }

    CommandContext ctx;
    ctx.output_root = output_root_from_env();
    ctx.out = &std::cout;
    ctx.log = quiet ? nullptr : &std::cerr;
    return run_command(name, cfg, ctx, std::cerr);
}
