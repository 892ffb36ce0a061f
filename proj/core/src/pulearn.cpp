// SPDX-License-Identifier: Apache-2.0
#include "rtad/pulearn.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rtad {
namespace {

// Independent streams per purpose so phase 1 is identical whatever happens later.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag)};
    return std::mt19937_64(seq);
}

constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kSplitTag = 2;
constexpr std::uint64_t kPhaseOneTag = 3;
constexpr std::uint64_t kPhaseThreeTag = 4;

WindowBatch merge(const WindowBatch& a, const WindowBatch& b, const WindowBatch& parent,
                  const std::vector<int>& b_labels) {
    // windows of a and b are subsets of parent; rebuild in parent order
    std::vector<std::size_t> pos;
    std::vector<int> y;
    std::size_t i = 0;
    std::size_t j = 0;
    const auto& ea = a.end_index();
    const auto& eb = b.end_index();
    const auto& ep = parent.end_index();
    std::size_t k = 0;
    while (i < ea.size() || j < eb.size()) {
        const bool take_a = j >= eb.size() || (i < ea.size() && ea[i] < eb[j]);
        const std::size_t end = take_a ? ea[i] : eb[j];
        while (ep[k] != end) {
            ++k;
        }
        pos.push_back(k);
        y.push_back(take_a ? a.y()[i++] : b_labels[j++]);
    }
    return parent.subset(pos).with_labels(std::move(y));
}

} // namespace

void PuConfig::validate() const {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw ConfigError("beta must lie in (0, 1]");
    }
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
        throw ConfigError("labeled_fraction must lie in (0, 1]");
    }
    if (epochs == 0 || batch_size == 0) {
        throw ConfigError("epochs and batch_size must be positive");
    }
    if (!(lr > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
}

LabeledSplit split_labeled(const WindowBatch& train, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ValidationError("labeled fraction must lie in (0, 1]");
    }
    std::vector<std::size_t> candidates;
    for (std::size_t s = 0; s < train.size(); ++s) {
        if (train.y()[s] == 0) {
            candidates.push_back(s);
        }
    }
    if (candidates.empty()) {
        throw ValidationError("no normal windows to draw labeled negatives from");
    }
    auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(candidates.size())));
    count = std::clamp<std::size_t>(count, 1, candidates.size());

    std::mt19937_64 rng = stream(seed, kSplitTag);
    std::shuffle(candidates.begin(), candidates.end(), rng);
    std::vector<std::size_t> labeled(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(labeled.begin(), labeled.end());

    std::vector<std::size_t> unlabeled;
    std::size_t li = 0;
    for (std::size_t s = 0; s < train.size(); ++s) {
        if (li < labeled.size() && labeled[li] == s) {
            ++li;
        } else {
            unlabeled.push_back(s);
        }
    }
    LabeledSplit out;
    out.labeled = train.subset(labeled).with_labels(std::vector<int>(labeled.size(), 0));
    out.unlabeled = train.subset(unlabeled);
    return out;
}

std::vector<int> pseudo_label(std::span<const double> scores, double beta) {
    std::vector<int> out(scores.size());
    std::transform(scores.begin(), scores.end(), out.begin(),
                   [beta](double s) { return s > beta ? 1 : 0; });
    return out;
}

std::vector<double> normalized_scores(const RTModel& model, const ScoreNormalizer& normalizer,
                                      const WindowBatch& batch) {
    if (!normalizer.fitted()) {
        throw StateError("score normalizer has not been fitted");
    }
    std::vector<double> raw = batch.empty() ? std::vector<double>{} : model.raw_scores(batch);
    for (double& r : raw) {
        r = normalizer.apply(r);
    }
    return raw;
}

std::vector<int> pseudo_label(const RTModel& model, const ScoreNormalizer& normalizer,
                              const WindowBatch& unlabeled, double beta) {
    std::vector<double> s = normalized_scores(model, normalizer, unlabeled);
    return pseudo_label(s, beta);
}

std::vector<double> train_epochs(RTModel& model, Adam& optimizer, const WindowBatch& data,
                                 std::size_t epochs, std::size_t batch_size, std::mt19937_64& rng,
                                 int phase, const EpochCallback& on_epoch) {
    std::vector<double> losses;
    if (data.empty()) {
        return losses;
    }
    std::vector<std::size_t> order(data.size());
    std::vector<Mat> windows;
    std::vector<int> y;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t s = 0; s < order.size(); s += batch_size) {
            const std::size_t end = std::min(order.size(), s + batch_size);
            windows.clear();
            y.clear();
            for (std::size_t i = s; i < end; ++i) {
                windows.push_back(data.window(order[i]));
                y.push_back(data.y()[order[i]]);
            }
            optimizer.zero_grad();
            BatchLoss loss = model.train_step(windows, y, rng);
            optimizer.step();
            total += loss.objective * static_cast<double>(end - s);
        }
        losses.push_back(total / static_cast<double>(order.size()));
        if (on_epoch) {
            on_epoch({phase, epoch, losses.back()});
        }
    }
    return losses;
}

PhaseOne pu_phase_one(const WindowBatch& train, const ModelConfig& model_cfg, const PuConfig& cfg,
                      const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.empty()) {
        throw ValidationError("no training windows");
    }
    PhaseOne out;
    out.split = split_labeled(train, cfg.labeled_fraction, cfg.seed);
    std::mt19937_64 init = stream(cfg.seed, kInitTag);
    out.model = RTModel(model_cfg, init());
    Adam opt(out.model.parameters(), {cfg.lr});
    std::mt19937_64 rng = stream(cfg.seed, kPhaseOneTag);
    out.losses = train_epochs(out.model, opt, out.split.labeled, cfg.epochs, cfg.batch_size, rng, 1,
                              on_epoch);
    out.normalizer = ScoreNormalizer::fit(out.model.raw_scores(out.split.labeled));
    out.unlabeled_scores = normalized_scores(out.model, out.normalizer, out.split.unlabeled);
    return out;
}

PuResult pu_phase_three(const PhaseOne& phase_one, const WindowBatch& train, const PuConfig& cfg,
                        const EpochCallback& on_epoch) {
    cfg.validate();
    PuResult out;
    out.model = phase_one.model;
    const LabeledSplit& split = phase_one.split;
    std::vector<int> pseudo = cfg.disable_pseudo_labels
                                  ? std::vector<int>(split.unlabeled.size(), 0)
                                  : pseudo_label(phase_one.unlabeled_scores, cfg.beta);

    TrainingReport& r = out.report;
    r.beta = cfg.beta;
    r.seed = cfg.seed;
    r.labeled = split.labeled.size();
    r.unlabeled = split.unlabeled.size();
    r.pseudo_positive = static_cast<std::size_t>(std::count(pseudo.begin(), pseudo.end(), 1));
    r.unlabeled_true_positive =
        static_cast<std::size_t>(std::count(split.unlabeled.y().begin(), split.unlabeled.y().end(), 1));
    r.phase1_losses = phase_one.losses;

    WindowBatch all = merge(split.labeled, split.unlabeled, train, pseudo);
    Adam opt(out.model.parameters(), {cfg.lr});
    std::mt19937_64 rng = stream(cfg.seed, kPhaseThreeTag);
    r.phase3_losses = train_epochs(out.model, opt, all, cfg.epochs, cfg.batch_size, rng, 3, on_epoch);
    out.normalizer = ScoreNormalizer::fit(out.model.raw_scores(train));
    return out;
}

PuResult pu_fit(const WindowBatch& train, const ModelConfig& model_cfg, const PuConfig& cfg,
                const EpochCallback& on_epoch) {
    PhaseOne one = pu_phase_one(train, model_cfg, cfg, on_epoch);
    return pu_phase_three(one, train, cfg, on_epoch);
}

} // namespace rtad
