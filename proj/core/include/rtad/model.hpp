// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/ingest.hpp"
#include "rtad/lcvae.hpp"
#include "rtad/param.hpp"
#include "rtad/relgraph.hpp"
#include "rtad/temporal.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rtad {

/// Architecture hyperparameters of the full detector.
struct ModelConfig {
    std::size_t metrics = 8;
    std::size_t window = 10;
    std::size_t attention_hidden = 256;
    std::size_t gcn_features = 64;
    std::size_t gcn_layers = 2;
    double pool_ratio = 0.5;
    double adjacency_threshold = 0.0;  // <= 0 selects 1/M
    double leaky_slope = 0.2;
    AttentionInit attention_init = AttentionInit::similarity;
    double attention_init_gain = 5.0;
    bool straight_through = false;  // pass gradients through the adjacency threshold
    std::size_t gru_hidden = 128;
    std::size_t conv_channels = 128;
    std::size_t conv_kernel = 3;
    std::vector<std::size_t> conv_dilations{1, 2, 4};
    std::size_t embedding = 128;
    std::size_t latent = 10;
    std::size_t vae_hidden = 64;
    double lambda = 0.5;
    double anomalous_clip = 5.0;

    RelGraphConfig relgraph() const;
    TemporalConfig temporal() const;
    LcvaeConfig lcvae() const;
    void validate() const;
};

/// Relational encoder, temporal encoder, fusion layer and LC-VAE.
class RTModel {
public:
    RTModel() = default;
    RTModel(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }

    /// Fused embeddings (E x B) of metric-major windows.
    Mat embed(const std::vector<Mat>& windows, Mode mode = Mode::eval) const;

    /// One forward/backward pass of the training objective. Gradients are
    /// accumulated into the parameters (call zero_grad first) and batch-norm
    /// running statistics are updated. `rng` supplies the reparameterisation noise.
    BatchLoss train_step(const std::vector<Mat>& windows, std::span<const int> y,
                         std::mt19937_64& rng);

    /// Training objective with fixed noise, optionally accumulating gradients.
    /// Batch norm runs in `mode`; running statistics are left untouched.
    BatchLoss objective(const std::vector<Mat>& windows, std::span<const int> y,
                        const std::vector<Mat>& eps, Mode mode, bool accumulate);

    /// Raw normal-conditioned reconstruction errors of every window in `batch`.
    std::vector<double> raw_scores(const WindowBatch& batch, std::size_t chunk = 256) const;

    /// Continuous attention matrix of one window.
    Mat attention(const Mat& window) const { return rel_.attention(window); }

    RelationalEncoder& relational() { return rel_; }
    const RelationalEncoder& relational() const { return rel_; }
    TemporalEncoder& temporal() { return temporal_; }
    const TemporalEncoder& temporal() const { return temporal_; }
    FusionLayer& fusion() { return fusion_; }
    Lcvae& lcvae() { return lcvae_; }
    const Lcvae& lcvae() const { return lcvae_; }

    /// Learnable arrays in a fixed order.
    ParamRefs parameters();
    /// Non-learnable state (batch-norm running statistics).
    ParamRefs buffers();
    void zero_grad();

private:
    BatchLoss run_objective(const std::vector<Mat>& windows, std::span<const int> y,
                            const std::vector<Mat>& eps, Mode mode, bool accumulate,
                            TemporalEncoder::Cache& tcache);

    ModelConfig cfg_;
    RelationalEncoder rel_;
    TemporalEncoder temporal_;
    FusionLayer fusion_;
    Lcvae lcvae_;
};

/// Standard-normal matrix from `rng`.
Mat standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

} // namespace rtad
