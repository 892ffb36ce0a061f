// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/model.hpp"
#include "rtad/pipeline.hpp"
#include "rtad/synth.hpp"

namespace rtad::testing {

/// Small enough for finite differences and sub-second training.
inline ModelConfig tiny_model(std::size_t metrics = 3, std::size_t window = 8) {
    ModelConfig c;
    c.metrics = metrics;
    c.window = window;
    c.attention_hidden = 4;
    c.gcn_features = 4;
    c.gcn_layers = 2;
    c.pool_ratio = 0.7;
    c.gru_hidden = 3;
    c.conv_channels = 3;
    c.conv_kernel = 2;
    c.conv_dilations = {1, 2};
    c.embedding = 5;
    c.latent = 3;
    c.vae_hidden = 4;
    return c;
}

/// A short labelled synthetic series, already scaled to [0, 1].
inline MetricMatrix small_series(std::size_t metrics, std::size_t length, std::uint64_t seed) {
    SynthConfig cfg = default_synth_config(metrics, length, seed);
    FaultPlan plan;
    plan.lead_in = 50;
    plan.min_gap = 40;
    plan.min_length = 5;
    plan.max_length = 10;
    cfg.faults = plan_faults(cfg, plan);
    return minmax_normalize(generate_synthetic(cfg)).first;
}

/// Fault-free synthetic series scaled to [0, 1].
inline MetricMatrix clean_series(std::size_t metrics, std::size_t length, std::uint64_t seed) {
    return minmax_normalize(generate_synthetic(default_synth_config(metrics, length, seed))).first;
}

inline TrainConfig tiny_train(std::size_t metrics, std::size_t epochs = 2) {
    TrainConfig c;
    c.model = tiny_model(metrics, 8);
    c.pu.epochs = epochs;
    c.pu.batch_size = 32;
    c.pu.seed = 3;
    c.train_stride = 1;
    return c;
}

} // namespace rtad::testing
