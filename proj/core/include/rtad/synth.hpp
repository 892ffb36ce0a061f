// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rtad {

struct BasePattern {
    double period = 100.0;
    double amplitude = 1.0;
    double offset = 0.0;
    double phase = 0.0;
};

/// Metric `target` follows `source`: target[t] = gain * source[t - lag] + noise.
struct Coupling {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t lag = 0;
    double gain = 1.0;
};

enum class FaultKind { spike, correlation_break };

const char* to_string(FaultKind kind);

struct Fault {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    FaultKind kind = FaultKind::spike;
    std::vector<std::size_t> targets;
};

struct SynthConfig {
    std::size_t metrics = 8;
    std::size_t length = 20000;
    std::uint64_t seed = 7;
    std::vector<BasePattern> base;  // one per metric
    std::vector<Coupling> coupling;
    double noise_std = 0.05;
    std::vector<Fault> faults;

    void validate() const;
};

/// How `plan_faults` lays out anomaly segments.
struct FaultPlan {
    double anomaly_ratio = 0.05;
    std::size_t min_length = 20;
    std::size_t max_length = 30;
    double spike_share = 0.5;
    std::size_t min_gap = 100;
    std::size_t lead_in = 200;  // no faults before this index
};

/// Random sine patterns for every metric; metric 0 drives all the others, each
/// with its own lag and gain.
SynthConfig default_synth_config(std::size_t metrics, std::size_t length, std::uint64_t seed);

/// Disjoint fault segments covering about `anomaly_ratio` of the series.
/// Correlation breaks only target coupled metrics.
std::vector<Fault> plan_faults(const SynthConfig& cfg, const FaultPlan& plan);

/// Deterministic for a fixed seed. Labels are 1 inside fault segments and the
/// culprits are the fault targets.
MetricMatrix generate_synthetic(const SynthConfig& cfg);

} // namespace rtad
