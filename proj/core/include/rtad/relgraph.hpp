// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/param.hpp"

#include <cstddef>
#include <random>
#include <string_view>
#include <vector>

namespace rtad {

/// Pairwise attention weights: `w_pair` is 2W x d (first W rows act on the
/// source metric, the last W on the neighbour) and `p` has length d.
struct AttentionParams {
    Mat w_pair;
    Vec p;
};

struct AttentionMatrix {
    Mat a;       // row-stochastic
    Mat binary;  // 1 where a >= threshold_t
    double threshold_t = 0.0;
};

/// a_ij = softmax_j( p . LeakyReLU(w_pair^T (x_i (+) x_j)) ) for a metric-major
/// window (M x W). Throws ValidationError for non-finite input.
Mat attention_scores(const Mat& window, const AttentionParams& params, double slope = 0.2);

/// 1 where a_ij >= t. Self-loops are not added here.
Mat binarize_adjacency(const Mat& a, double t);

AttentionMatrix attention_matrix(const Mat& window, const AttentionParams& params, double t,
                                 double slope = 0.2);

/// D^-1/2 (A + I) D^-1/2 with D the row-degree matrix of A + I.
Mat normalized_adjacency(const Mat& a_bin);

/// ReLU(D^-1/2 (A + I) D^-1/2 h theta).
Mat gcn_layer(const Mat& h, const Mat& a_bin, const Mat& theta);

/// Indices of the `k` largest scores, ties to the lower index, returned in
/// ascending index order.
std::vector<std::size_t> top_k_indices(const Vec& scores, std::size_t k);

/// Number of nodes kept by a pooling step: floor(k * n).
std::size_t pooled_size(std::size_t nodes, double ratio);

struct PoolScorer {
    Mat theta;  // F x 1
    double bias = 0.0;
};

struct PoolResult {
    Mat h;                          // kept rows scaled by tanh(z)
    Mat a;                          // induced binary subgraph
    std::vector<std::size_t> kept;  // ascending
    Vec z;                          // scores of all input nodes
};

/// Self-attention graph pooling: one graph convolution scores every node,
/// the top floor(kM) are kept.
PoolResult sag_pool(const Mat& h, const Mat& a_bin, double ratio, const PoolScorer& scorer);

/// Per-feature mean over nodes followed by per-feature max (length 2F).
Vec readout(const Mat& h);

/// Starting point of the pairwise attention parameters. `similarity` ties the
/// two halves of w_pair as (W, -W) and makes p non-positive, so untrained
/// attention scores fall with the distance between two metric windows.
enum class AttentionInit { glorot, similarity };

const char* to_string(AttentionInit init);
AttentionInit parse_attention_init(std::string_view name);

struct RelGraphConfig {
    std::size_t metrics = 8;
    std::size_t window = 10;
    std::size_t attention_hidden = 256;
    std::size_t features = 64;
    std::size_t layers = 2;
    double pool_ratio = 0.5;
    double threshold = 0.0;  // <= 0 selects 1/M
    double leaky_slope = 0.2;
    /// Route gradients through the binarised adjacency onto the attention
    /// entries it kept. Off gives the exact (zero) gradient.
    bool straight_through = false;
    AttentionInit attention_init = AttentionInit::similarity;
    /// Multiplier on the Glorot bounds of w_pair and p.
    double attention_init_gain = 5.0;

    double effective_threshold() const;
    std::size_t output_width() const { return 2 * features; }
    void validate() const;
};

/// Graph attention -> binary adjacency -> [graph conv, readout, pool] per layer.
/// Pooling sits between convolution layers, so L layers pool L-1 times; the
/// per-layer readouts are summed.
class RelationalEncoder {
public:
    struct LayerCache {
        std::vector<std::size_t> nodes;  // indices into the original metrics
        Mat a_bin;
        Mat a_hat;
        Mat h_in;
        Mat pre;
        Mat h_out;
        // pooling after this layer (absent on the last layer)
        Vec z;
        std::vector<std::size_t> kept;  // local positions
        Vec tanh_z;
    };
    struct Cache {
        Mat x;
        Mat attention;
        Mat binary;
        std::vector<LayerCache> layers;
    };

    RelationalEncoder() = default;
    RelationalEncoder(const RelGraphConfig& cfg, std::mt19937_64& rng);

    const RelGraphConfig& config() const { return cfg_; }

    Vec forward(const Mat& window, Cache* cache = nullptr) const;
    /// Accumulates parameter gradients for d(loss)/d(output) = `d_out`.
    void backward(const Cache& cache, const Vec& d_out);

    AttentionParams attention_params() const;
    Mat attention(const Mat& window) const;

    void collect(ParamRefs& out);

private:
    RelGraphConfig cfg_;
    Param w_pair_;
    Param p_;
    std::vector<Param> theta_;
    std::vector<Param> score_theta_;
    std::vector<Param> score_bias_;
};

} // namespace rtad
