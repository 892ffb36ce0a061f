// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/ingest.hpp"
#include "rtad/lcvae.hpp"
#include "rtad/model.hpp"
#include "rtad/optim.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rtad {

struct PuConfig {
    double beta = 0.9;
    double labeled_fraction = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    /// Skip pseudo-labelling: every unlabeled window keeps y = 0 in phase 3.
    bool disable_pseudo_labels = false;

    void validate() const;
};

struct LabeledSplit {
    WindowBatch labeled;    // labels forced to 0
    WindowBatch unlabeled;  // ground-truth labels kept for reporting only
};

/// Draws round(fraction * candidates) labeled negatives (at least one) from the
/// windows with y = 0; everything else forms the unlabeled pool.
LabeledSplit split_labeled(const WindowBatch& train, double fraction, std::uint64_t seed);

/// 1 where score > beta.
std::vector<int> pseudo_label(std::span<const double> scores, double beta);

/// Scores the pool with `model` and thresholds at beta.
std::vector<int> pseudo_label(const RTModel& model, const ScoreNormalizer& normalizer,
                              const WindowBatch& unlabeled, double beta);

struct EpochLog {
    int phase = 0;  // 1 or 3
    std::size_t epoch = 0;
    double loss = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Runs `epochs` passes of minibatch Adam over `data` (labels taken from the batch).
std::vector<double> train_epochs(RTModel& model, Adam& optimizer, const WindowBatch& data,
                                 std::size_t epochs, std::size_t batch_size, std::mt19937_64& rng,
                                 int phase = 0, const EpochCallback& on_epoch = {});

struct TrainingReport {
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::size_t labeled = 0;
    std::size_t unlabeled = 0;
    std::size_t pseudo_positive = 0;
    std::size_t unlabeled_true_positive = 0;  // pool windows with ground-truth y = 1
    std::vector<double> phase1_losses;
    std::vector<double> phase3_losses;

    double pseudo_positive_rate() const {
        return unlabeled == 0 ? 0.0 : static_cast<double>(pseudo_positive) / unlabeled;
    }
};

/// State after phase 1, reusable across several beta values.
struct PhaseOne {
    RTModel model;
    LabeledSplit split;
    ScoreNormalizer normalizer;            // fitted on the labeled negatives
    std::vector<double> unlabeled_scores;  // normalised scores of the pool
    std::vector<double> losses;
};

struct PuResult {
    RTModel model;
    ScoreNormalizer normalizer;  // refitted on every training window after phase 3
    TrainingReport report;
};

PhaseOne pu_phase_one(const WindowBatch& train, const ModelConfig& model_cfg, const PuConfig& cfg,
                      const EpochCallback& on_epoch = {});

/// Pseudo-labels the pool at cfg.beta and continues training on the union.
PuResult pu_phase_three(const PhaseOne& phase_one, const WindowBatch& train, const PuConfig& cfg,
                        const EpochCallback& on_epoch = {});

PuResult pu_fit(const WindowBatch& train, const ModelConfig& model_cfg, const PuConfig& cfg,
                const EpochCallback& on_epoch = {});

/// Normalised scores of every window under `normalizer`.
std::vector<double> normalized_scores(const RTModel& model, const ScoreNormalizer& normalizer,
                                      const WindowBatch& batch);

} // namespace rtad
