// SPDX-License-Identifier: Apache-2.0
#include "rtad/model.hpp"

#include "rtad/error.hpp"

#include <algorithm>

namespace rtad {

RelGraphConfig ModelConfig::relgraph() const {
    RelGraphConfig c;
    c.metrics = metrics;
    c.window = window;
    c.attention_hidden = attention_hidden;
    c.features = gcn_features;
    c.layers = gcn_layers;
    c.pool_ratio = pool_ratio;
    c.threshold = adjacency_threshold;
    c.leaky_slope = leaky_slope;
    c.attention_init = attention_init;
    c.attention_init_gain = attention_init_gain;
    c.straight_through = straight_through;
    return c;
}

TemporalConfig ModelConfig::temporal() const {
    TemporalConfig c;
    c.metrics = metrics;
    c.gru_hidden = gru_hidden;
    c.conv_channels = conv_channels;
    c.conv_kernel = conv_kernel;
    c.dilations = conv_dilations;
    return c;
}

LcvaeConfig ModelConfig::lcvae() const {
    LcvaeConfig c;
    c.embedding = embedding;
    c.latent = latent;
    c.hidden = vae_hidden;
    c.lambda = lambda;
    c.anomalous_clip = anomalous_clip;
    return c;
}

void ModelConfig::validate() const {
    if (embedding == 0) {
        throw ConfigError("embedding width must be positive");
    }
    relgraph().validate();
    temporal().validate();
    lcvae().validate();
}

RTModel::RTModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    rel_ = RelationalEncoder(cfg_.relgraph(), rng);
    temporal_ = TemporalEncoder(cfg_.temporal(), rng);
    fusion_ = FusionLayer(rel_.config().output_width(), temporal_.config().output_width(),
                          cfg_.embedding, rng);
    lcvae_ = Lcvae(cfg_.lcvae(), rng);
}

namespace {

void check_windows(const std::vector<Mat>& windows, const ModelConfig& cfg) {
    if (windows.empty()) {
        throw ValidationError("empty window batch");
    }
    for (const Mat& w : windows) {
        if (static_cast<std::size_t>(w.rows()) != cfg.metrics ||
            static_cast<std::size_t>(w.cols()) != cfg.window) {
            throw ValidationError("window shape does not match the model");
        }
    }
}

} // namespace

Mat RTModel::embed(const std::vector<Mat>& windows, Mode mode) const {
    check_windows(windows, cfg_);
    const auto batch = windows.size();
    Mat rel(static_cast<Eigen::Index>(rel_.config().output_width()),
            static_cast<Eigen::Index>(batch));
    for (std::size_t b = 0; b < batch; ++b) {
        rel.col(static_cast<Eigen::Index>(b)) = rel_.forward(windows[b]);
    }
    Mat tmp = temporal_.forward(stack_time_major(windows), batch, mode);
    return fusion_.forward(rel, tmp);
}

BatchLoss RTModel::objective(const std::vector<Mat>& windows, std::span<const int> y,
                             const std::vector<Mat>& eps, Mode mode, bool accumulate) {
    TemporalEncoder::Cache unused;
    return run_objective(windows, y, eps, mode, accumulate, unused);
}

BatchLoss RTModel::run_objective(const std::vector<Mat>& windows, std::span<const int> y,
                                 const std::vector<Mat>& eps, Mode mode, bool accumulate,
                                 TemporalEncoder::Cache& tcache) {
    check_windows(windows, cfg_);
    const auto batch = windows.size();
    std::vector<RelationalEncoder::Cache> rel_cache(batch);
    Mat rel(static_cast<Eigen::Index>(rel_.config().output_width()),
            static_cast<Eigen::Index>(batch));
    for (std::size_t b = 0; b < batch; ++b) {
        rel.col(static_cast<Eigen::Index>(b)) = rel_.forward(windows[b], &rel_cache[b]);
    }
    Mat tmp = temporal_.forward(stack_time_major(windows), batch, mode, &tcache);
    Mat e = fusion_.forward(rel, tmp);

    Lcvae::Cache vcache;
    BatchLoss loss = lcvae_.loss(e, y, eps, &vcache);
    if (accumulate) {
        Mat d_e = lcvae_.backward(vcache);
        auto [d_rel, d_tmp] = fusion_.backward(rel, tmp, d_e);
        temporal_.backward(tcache, d_tmp, mode);
        for (std::size_t b = 0; b < batch; ++b) {
            rel_.backward(rel_cache[b], d_rel.col(static_cast<Eigen::Index>(b)));
        }
    }
    return loss;
}

BatchLoss RTModel::train_step(const std::vector<Mat>& windows, std::span<const int> y,
                              std::mt19937_64& rng) {
    std::vector<Mat> eps{standard_normal(static_cast<Eigen::Index>(cfg_.latent),
                                         static_cast<Eigen::Index>(windows.size()), rng)};
    TemporalEncoder::Cache stats;
    BatchLoss loss = run_objective(windows, y, eps, Mode::train, true, stats);
    temporal_.update_running_stats(stats);
    return loss;
}

std::vector<double> RTModel::raw_scores(const WindowBatch& batch, std::size_t chunk) const {
    if (batch.window_length() != cfg_.window || batch.metrics() != cfg_.metrics) {
        throw ValidationError("window batch does not match the model");
    }
    chunk = std::max<std::size_t>(chunk, 1);
    std::vector<double> out;
    out.reserve(batch.size());
    std::vector<Mat> windows;
    for (std::size_t s = 0; s < batch.size(); s += chunk) {
        const std::size_t end = std::min(batch.size(), s + chunk);
        windows.clear();
        for (std::size_t i = s; i < end; ++i) {
            windows.push_back(batch.window(i));
        }
        Vec r = lcvae_.reconstruction_error(embed(windows, Mode::eval));
        out.insert(out.end(), r.data(), r.data() + r.size());
    }
    return out;
}

ParamRefs RTModel::parameters() {
    ParamRefs out;
    rel_.collect(out);
    temporal_.collect(out);
    fusion_.collect(out);
    lcvae_.collect(out);
    return out;
}

ParamRefs RTModel::buffers() {
    ParamRefs out;
    temporal_.collect_buffers(out);
    return out;
}

void RTModel::zero_grad() {
    for (Param* p : parameters()) {
        p->zero_grad();
    }
}

Mat standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dist(rng);
    }
    return m;
}

} // namespace rtad
