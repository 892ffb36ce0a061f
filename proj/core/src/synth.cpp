// SPDX-License-Identifier: Apache-2.0
#include "rtad/synth.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

namespace rtad {
namespace {

// Kahn ordering; throws on cycles.
std::vector<std::size_t> topological_order(std::size_t metrics,
                                           const std::vector<Coupling>& coupling) {
    std::vector<std::size_t> indegree(metrics, 0);
    std::vector<std::vector<std::size_t>> children(metrics);
    for (const auto& c : coupling) {
        children[c.source].push_back(c.target);
        ++indegree[c.target];
    }
    std::vector<std::size_t> order;
    std::vector<std::size_t> ready;
    for (std::size_t j = 0; j < metrics; ++j) {
        if (indegree[j] == 0) {
            ready.push_back(j);
        }
    }
    while (!ready.empty()) {
        std::size_t j = ready.front();
        ready.erase(ready.begin());
        order.push_back(j);
        for (std::size_t c : children[j]) {
            if (--indegree[c] == 0) {
                ready.push_back(c);
            }
        }
    }
    if (order.size() != metrics) {
        throw ValidationError("coupling graph contains a cycle");
    }
    return order;
}

} // namespace

const char* to_string(FaultKind kind) {
    return kind == FaultKind::spike ? "spike" : "correlation_break";
}

void SynthConfig::validate() const {
    if (metrics == 0 || length == 0) {
        throw ValidationError("synthetic dataset needs at least one metric and one timestamp");
    }
    if (base.size() != metrics) {
        throw ValidationError("need one base pattern per metric");
    }
    for (const auto& b : base) {
        if (!(b.period > 0.0)) {
            throw ValidationError("base pattern period must be positive");
        }
    }
    if (noise_std < 0.0) {
        throw ValidationError("noise_std must be non-negative");
    }
    std::vector<int> incoming(metrics, 0);
    for (const auto& c : coupling) {
        if (c.source >= metrics || c.target >= metrics) {
            throw ValidationError("coupling refers to a metric out of range");
        }
        if (c.source == c.target) {
            throw ValidationError("coupling graph contains a cycle");
        }
        if (++incoming[c.target] > 1) {
            throw ValidationError("metric " + std::to_string(c.target) +
                                  " follows more than one source");
        }
    }
    topological_order(metrics, coupling);

    std::vector<Fault> sorted = faults;
    std::sort(sorted.begin(), sorted.end(),
              [](const Fault& a, const Fault& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& f = sorted[i];
        if (f.start > f.end || f.end >= length) {
            throw ValidationError("fault segment outside [0, N)");
        }
        if (f.targets.empty()) {
            throw ValidationError("fault without target metrics");
        }
        for (std::size_t t : f.targets) {
            if (t >= metrics) {
                throw ValidationError("fault target out of range");
            }
        }
        if (i > 0 && sorted[i - 1].end >= f.start) {
            throw ValidationError("fault segments overlap");
        }
    }
}

SynthConfig default_synth_config(std::size_t metrics, std::size_t length, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.metrics = metrics;
    cfg.length = length;
    cfg.seed = seed;
    std::mt19937_64 rng(seed ^ 0x5eedba5eULL);
    std::uniform_real_distribution<double> period(20.0, 80.0);
    std::uniform_real_distribution<double> amplitude(0.5, 2.0);
    std::uniform_real_distribution<double> offset(0.0, 3.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> gain(0.6, 1.4);
    std::uniform_int_distribution<std::size_t> lag(1, 5);
    for (std::size_t j = 0; j < metrics; ++j) {
        cfg.base.push_back({period(rng), amplitude(rng), offset(rng), phase(rng)});
    }
    // metric 0 is a shared driver (e.g. request load) that every other metric follows
    for (std::size_t j = 1; j < metrics; ++j) {
        cfg.coupling.push_back({0, j, lag(rng), gain(rng)});
    }
    return cfg;
}

std::vector<Fault> plan_faults(const SynthConfig& cfg, const FaultPlan& plan) {
    if (plan.min_length == 0 || plan.max_length < plan.min_length) {
        throw ValidationError("invalid fault length range");
    }
    if (plan.anomaly_ratio <= 0.0) {
        return {};
    }
    std::mt19937_64 rng(cfg.seed ^ 0xfa017ULL);
    std::uniform_int_distribution<std::size_t> len(plan.min_length, plan.max_length);
    const auto budget = static_cast<std::size_t>(std::llround(plan.anomaly_ratio * cfg.length));

    std::vector<std::size_t> lengths;
    std::size_t total = 0;
    while (total < budget) {
        std::size_t l = std::min(len(rng), budget - total);
        if (l < plan.min_length && !lengths.empty()) {
            lengths.back() += l;
        } else {
            lengths.push_back(l);
        }
        total += l;
    }
    const std::size_t k = lengths.size();
    const std::size_t reserved = plan.lead_in + total + k * plan.min_gap;
    if (reserved > cfg.length) {
        throw ValidationError("fault plan does not fit in the series");
    }
    const std::size_t free = cfg.length - reserved;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> weights(k + 1);
    for (auto& w : weights) {
        w = unit(rng) + 1e-9;
    }
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);

    std::vector<std::size_t> coupled;
    for (const auto& c : cfg.coupling) {
        coupled.push_back(c.target);
    }
    std::sort(coupled.begin(), coupled.end());

    const auto spikes = static_cast<std::size_t>(std::llround(plan.spike_share * k));
    std::vector<FaultKind> kinds(k, FaultKind::correlation_break);
    std::fill(kinds.begin(), kinds.begin() + static_cast<std::ptrdiff_t>(spikes), FaultKind::spike);
    std::shuffle(kinds.begin(), kinds.end(), rng);

    std::uniform_int_distribution<std::size_t> any_metric(0, cfg.metrics - 1);
    std::vector<Fault> faults;
    std::size_t cursor = plan.lead_in;
    for (std::size_t i = 0; i < k; ++i) {
        cursor += static_cast<std::size_t>(std::floor(free * weights[i] / wsum));
        cursor += plan.min_gap;
        Fault f;
        f.start = cursor;
        f.end = cursor + lengths[i] - 1;
        f.kind = kinds[i];
        if (f.kind == FaultKind::correlation_break && coupled.empty()) {
            f.kind = FaultKind::spike;
        }
        if (f.kind == FaultKind::spike) {
            f.targets = {any_metric(rng)};
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, coupled.size() - 1);
            f.targets = {coupled[pick(rng)]};
        }
        faults.push_back(std::move(f));
        cursor += lengths[i];
    }
    return faults;
}

MetricMatrix generate_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t M = cfg.metrics;
    const std::size_t N = cfg.length;
    std::size_t burn = 1;
    for (const auto& c : cfg.coupling) {
        burn += c.lag;
    }
    const std::size_t T = N + burn;

    std::vector<const Coupling*> parent(M, nullptr);
    for (const auto& c : cfg.coupling) {
        parent[c.target] = &c;
    }

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::MatrixXd full(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(M));
    for (std::size_t j : topological_order(M, cfg.coupling)) {
        const auto jj = static_cast<Eigen::Index>(j);
        for (std::size_t t = 0; t < T; ++t) {
            const auto tt = static_cast<Eigen::Index>(t);
            double v = 0.0;
            if (const Coupling* c = parent[j]) {
                std::size_t src = t >= c->lag ? t - c->lag : 0;
                v = c->gain * full(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(c->source));
            } else {
                const auto& b = cfg.base[j];
                double x = static_cast<double>(t) - static_cast<double>(burn);
                v = b.offset + b.amplitude * std::sin(2.0 * std::numbers::pi * x / b.period + b.phase);
            }
            full(tt, jj) = v + cfg.noise_std * noise(rng);
        }
    }

    MetricMatrix m;
    m.values = full.bottomRows(static_cast<Eigen::Index>(N));
    for (std::size_t j = 0; j < M; ++j) {
        m.metric_names.push_back("metric_" + std::to_string(j));
    }
    m.labels.assign(N, 0);

    std::vector<double> mean(M), sd(M);
    for (std::size_t j = 0; j < M; ++j) {
        auto col = m.values.col(static_cast<Eigen::Index>(j));
        mean[j] = col.mean();
        sd[j] = std::sqrt((col.array() - mean[j]).square().mean());
    }

    std::vector<Fault> faults = cfg.faults;
    std::sort(faults.begin(), faults.end(),
              [](const Fault& a, const Fault& b) { return a.start < b.start; });
    for (const auto& f : faults) {
        for (std::size_t t = f.start; t <= f.end; ++t) {
            m.labels[t] = 1;
        }
        for (std::size_t j : f.targets) {
            const auto jj = static_cast<Eigen::Index>(j);
            if (f.kind == FaultKind::spike) {
                const double shift = std::max(5.0 * cfg.noise_std, 1.5 * sd[j]);
                for (std::size_t t = f.start; t <= f.end; ++t) {
                    m.values(static_cast<Eigen::Index>(t), jj) += shift;
                }
            } else {
                // fast independent oscillation over the metric's usual range
                std::uniform_real_distribution<double> period(5.0, 10.0);
                std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
                const double p = period(rng);
                const double ph = phase(rng);
                for (std::size_t t = f.start; t <= f.end; ++t) {
                    const double x = static_cast<double>(t - f.start);
                    m.values(static_cast<Eigen::Index>(t), jj) =
                        mean[j] + std::sqrt(2.0) * sd[j] * std::sin(2.0 * std::numbers::pi * x / p + ph) +
                        cfg.noise_std * noise(rng);
                }
            }
        }
        CulpritSegment seg;
        seg.start = f.start;
        seg.end = f.end;
        seg.metrics = f.targets;
        std::sort(seg.metrics.begin(), seg.metrics.end());
        m.culprits.push_back(std::move(seg));
    }
    m.validate();
    return m;
}

} // namespace rtad
