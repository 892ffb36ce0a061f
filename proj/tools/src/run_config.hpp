// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/pipeline.hpp"
#include "rtad/synth.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rtad::app {

/// Every setting of the command-line tool. Files are flat `key = value` lines;
/// `#` starts a comment. Unknown keys are rejected.
struct RunConfig {
    TrainConfig train;

    // data
    std::string data_format = "csv";
    std::filesystem::path train_data;
    std::filesystem::path train_labels;
    std::filesystem::path test_data;
    std::filesystem::path test_labels;
    std::filesystem::path test_interpretation;
    std::filesystem::path checkpoint;

    // synth
    std::size_t synth_metrics = 8;
    std::size_t synth_length = 20000;
    std::uint64_t synth_seed = 7;
    double synth_noise_std = 0.05;
    FaultPlan synth_faults;
    double synth_train_fraction = 0.5;

    // detect / localize
    double threshold = 0.5;  // used when no ground truth is available
    std::string localize_method = "correlation_change";
    std::size_t localize_k = 3;
    std::string localize_segments = "truth";  // or "predicted"

    std::vector<double> sweep_betas{0.6, 0.7, 0.8, 0.9, 1.0};

    /// Throws ConfigError naming the key.
    void set(const std::string& key, const std::string& value);
    void load_file(const std::filesystem::path& path);
    /// Applies "key=value".
    void apply_override(const std::string& assignment);
    void validate() const;

    /// Effective configuration in the file format, keys sorted.
    std::string to_text() const;

    static std::vector<std::string> keys();
};

} // namespace rtad::app
