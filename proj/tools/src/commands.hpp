// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "run_config.hpp"

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace rtad::app {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitConfig = 2,
    kExitData = 3,
    kExitCheckpoint = 4,
};

struct CommandContext {
    std::filesystem::path output_root = "runs";
    std::ostream* out = nullptr;  // summaries; null silences them
    std::ostream* log = nullptr;  // per-epoch progress
};

/// Output root from RTAD_OUTPUT_ROOT, else ./runs.
std::filesystem::path output_root_from_env();

/// <root>/<command>-YYYYmmdd-HHMMSS, with a numeric suffix if that exists.
std::filesystem::path make_run_dir(const std::filesystem::path& root, const std::string& command);

/// Each command creates a run directory and returns its path.
std::filesystem::path cmd_synth(const RunConfig& cfg, const CommandContext& ctx);
std::filesystem::path cmd_train(const RunConfig& cfg, const CommandContext& ctx);
std::filesystem::path cmd_detect(const RunConfig& cfg, const CommandContext& ctx);
std::filesystem::path cmd_localize(const RunConfig& cfg, const CommandContext& ctx);
std::filesystem::path cmd_sweep_beta(const RunConfig& cfg, const CommandContext& ctx);

ExitCode exit_code_for(const std::exception& e);

/// Dispatches by name ("synth", "train", "detect", "localize", "sweep-beta"),
/// reports failures on `err` and maps them to exit codes.
int run_command(const std::string& name, const RunConfig& cfg, const CommandContext& ctx,
                std::ostream& err);

} // namespace rtad::app
