// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/linear.hpp"
#include "rtad/param.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace rtad {

enum class Mode { train, eval };

// Batched sequences use a time-major column layout: a sequence batch of B
// windows with W steps is a (channels x W*B) matrix whose column t*B + b holds
// window b at step t.

/// Gated recurrent unit (reset/update/candidate), zero initial state.
class Gru {
public:
    struct Cache {
        Mat x;
        std::vector<Mat> h_prev, r, z, n, gh_n;
    };

    Gru() = default;
    Gru(std::size_t input, std::size_t hidden, std::mt19937_64& rng);

    std::size_t input_size() const { return static_cast<std::size_t>(w_ih_.value.cols()); }
    std::size_t hidden_size() const { return static_cast<std::size_t>(w_hh_.value.cols()); }

    /// All hidden states, hidden x W*B.
    Mat forward(const Mat& x, std::size_t batch, Cache* cache = nullptr) const;
    /// Backpropagation through time given d(loss)/d(h_t) for every step.
    void backward(const Cache& cache, const Mat& d_h, std::size_t batch);

    void collect(ParamRefs& out);

    // gate blocks are stacked [reset; update; candidate]
    Param& w_ih() { return w_ih_; }
    Param& w_hh() { return w_hh_; }
    Param& b_ih() { return b_ih_; }
    Param& b_hh() { return b_hh_; }

private:
    Param w_ih_, w_hh_, b_ih_, b_hh_;
};

/// Hidden states of one metric-major window (M x W) -> hidden x W.
Mat gru_forward(const Mat& window, const Gru& gru);

struct DcConvConfig {
    std::size_t in_channels = 1;
    std::size_t channels = 128;
    std::size_t kernel = 3;
    std::size_t dilation = 1;
    bool batch_norm = true;
};

/// Dilated causal convolution -> batch normalisation -> ReLU. Output step t
/// reads input steps t - (kernel-1-k)*dilation for taps k, zero-padded on the
/// left of each window.
class DcConvBlock {
public:
    static constexpr double kMomentum = 0.1;
    static constexpr double kEps = 1e-5;

    struct Cache {
        Mat x;
        Mat col;
        Mat y;      // convolution output
        Mat x_hat;  // normalised
        Mat out;    // after ReLU
        Vec mean;
        Vec var;
        Vec inv_std;
    };

    DcConvBlock() = default;
    DcConvBlock(const DcConvConfig& cfg, std::size_t index, std::mt19937_64& rng);

    const DcConvConfig& config() const { return cfg_; }

    Mat forward(const Mat& x, std::size_t batch, Mode mode, Cache* cache = nullptr) const;
    /// Returns d(loss)/d(input) when `input_grad` is set, else an empty matrix.
    Mat backward(const Cache& cache, const Mat& d_out, std::size_t batch, Mode mode,
                 bool input_grad);
    /// Folds the batch statistics of a training-mode pass into the running ones.
    void update_running_stats(const Cache& cache);

    void collect(ParamRefs& out);
    void collect_buffers(ParamRefs& out);

    Param& weight() { return weight_; }
    Param& gamma() { return gamma_; }
    Param& beta() { return beta_; }
    Param& running_mean() { return running_mean_; }
    Param& running_var() { return running_var_; }

private:
    Mat im2col(const Mat& x, std::size_t batch) const;

    DcConvConfig cfg_;
    Param weight_;  // channels x (kernel * in_channels), tap-major columns
    Param gamma_, beta_;
    Param running_mean_, running_var_;
};

/// Receptive field of a stack: 1 + (kernel-1) * sum(dilations).
std::size_t receptive_field(std::size_t kernel, const std::vector<std::size_t>& dilations);

/// Applies the blocks in sequence to one window (M x W) -> channels x W.
Mat dc_conv_stack(const Mat& window, const std::vector<DcConvBlock>& blocks,
                  Mode mode = Mode::eval);

struct TemporalConfig {
    std::size_t metrics = 8;
    std::size_t gru_hidden = 128;
    std::size_t conv_channels = 128;
    std::size_t conv_kernel = 3;
    std::vector<std::size_t> dilations{1, 2, 4};

    std::size_t output_width() const { return gru_hidden + conv_channels; }
    void validate() const;
};

/// GRU and dilated-causal-conv features, each averaged over time and
/// concatenated.
class TemporalEncoder {
public:
    struct Cache {
        std::size_t batch = 0;
        std::size_t steps = 0;
        Gru::Cache gru;
        std::vector<DcConvBlock::Cache> blocks;
    };

    TemporalEncoder() = default;
    TemporalEncoder(const TemporalConfig& cfg, std::mt19937_64& rng);

    const TemporalConfig& config() const { return cfg_; }

    /// x is metrics x W*B (time-major); returns output_width x B.
    Mat forward(const Mat& x, std::size_t batch, Mode mode, Cache* cache = nullptr) const;
    void backward(const Cache& cache, const Mat& d_out, Mode mode);
    void update_running_stats(const Cache& cache);

    Gru& gru() { return gru_; }
    const Gru& gru() const { return gru_; }
    std::vector<DcConvBlock>& blocks() { return blocks_; }
    const std::vector<DcConvBlock>& blocks() const { return blocks_; }

    void collect(ParamRefs& out);
    void collect_buffers(ParamRefs& out);

private:
    TemporalConfig cfg_;
    Gru gru_;
    std::vector<DcConvBlock> blocks_;
};

/// Stacks metric-major windows (each M x W) into the time-major batch layout.
Mat stack_time_major(const std::vector<Mat>& windows);

/// Mean over the W steps of a (C x W*B) time-major matrix -> C x B.
Mat time_average(const Mat& x, std::size_t batch);

/// Relational-temporal embedding e = W (r (+) t) + b, no activation.
class FusionLayer {
public:
    FusionLayer() = default;
    FusionLayer(std::size_t relational_width, std::size_t temporal_width, std::size_t embedding,
                std::mt19937_64& rng);

    std::size_t relational_width() const { return relational_width_; }
    std::size_t temporal_width() const { return temporal_width_; }
    std::size_t embedding_width() const { return static_cast<std::size_t>(linear_.out_features()); }

    /// Columns are windows. Throws ConfigError on width mismatch.
    Mat forward(const Mat& relational, const Mat& temporal) const;
    /// Returns {d relational, d temporal}.
    std::pair<Mat, Mat> backward(const Mat& relational, const Mat& temporal, const Mat& d_e);

    Linear& linear() { return linear_; }
    void collect(ParamRefs& out) { linear_.collect(out); }

private:
    std::size_t relational_width_ = 0;
    std::size_t temporal_width_ = 0;
    Linear linear_;
};

Vec fuse(const Vec& relational, const Vec& temporal, const FusionLayer& fusion);

} // namespace rtad
