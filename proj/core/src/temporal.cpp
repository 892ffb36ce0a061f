// SPDX-License-Identifier: Apache-2.0
#include "rtad/temporal.hpp"

#include "rtad/error.hpp"

#include <cmath>
#include <numeric>

namespace rtad {
namespace {

Mat sigmoid_of(const Mat& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

std::size_t steps_of(const Mat& x, std::size_t batch) {
    if (batch == 0 || static_cast<std::size_t>(x.cols()) % batch != 0) {
        throw ValidationError("sequence batch width is not a multiple of the batch size");
    }
    return static_cast<std::size_t>(x.cols()) / batch;
}

// Spreads d(mean over time) evenly across the W steps.
Mat time_average_backward(const Mat& d_mean, std::size_t steps) {
    const Eigen::Index b = d_mean.cols();
    Mat out(d_mean.rows(), b * static_cast<Eigen::Index>(steps));
    const Mat scaled = d_mean / static_cast<double>(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        out.middleCols(static_cast<Eigen::Index>(t) * b, b) = scaled;
    }
    return out;
}

} // namespace

Gru::Gru(std::size_t input, std::size_t hidden, std::mt19937_64& rng) {
    const auto in = static_cast<Eigen::Index>(input);
    const auto h = static_cast<Eigen::Index>(hidden);
    w_ih_ = Param("temporal.gru.w_ih", 3 * h, in);
    w_hh_ = Param("temporal.gru.w_hh", 3 * h, h);
    b_ih_ = Param("temporal.gru.b_ih", 3 * h, 1);
    b_hh_ = Param("temporal.gru.b_hh", 3 * h, 1);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    fill_uniform(w_ih_.value, bound, rng);
    fill_uniform(w_hh_.value, bound, rng);
    fill_uniform(b_ih_.value, bound, rng);
    fill_uniform(b_hh_.value, bound, rng);
}

Mat Gru::forward(const Mat& x, std::size_t batch, Cache* cache) const {
    if (x.rows() != w_ih_.value.cols()) {
        throw ValidationError("GRU input width does not match");
    }
    const std::size_t steps = steps_of(x, batch);
    const Eigen::Index h = w_hh_.value.cols();
    const auto b = static_cast<Eigen::Index>(batch);

    Mat gi = w_ih_.value * x;
    gi.colwise() += b_ih_.value.col(0);
    Mat state = Mat::Zero(h, b);
    Mat out(h, x.cols());
    if (cache) {
        cache->x = x;
        cache->h_prev.resize(steps);
        cache->r.resize(steps);
        cache->z.resize(steps);
        cache->n.resize(steps);
        cache->gh_n.resize(steps);
    }
    for (std::size_t t = 0; t < steps; ++t) {
        const auto col = static_cast<Eigen::Index>(t) * b;
        Mat gh = w_hh_.value * state;
        gh.colwise() += b_hh_.value.col(0);
        auto gi_t = gi.middleCols(col, b);
        Mat r = sigmoid_of(gi_t.topRows(h) + gh.topRows(h));
        Mat z = sigmoid_of(gi_t.middleRows(h, h) + gh.middleRows(h, h));
        Mat gh_n = gh.bottomRows(h);
        Mat n = (gi_t.bottomRows(h).array() + r.array() * gh_n.array()).tanh().matrix();
        Mat next = ((1.0 - z.array()) * n.array() + z.array() * state.array()).matrix();
        if (cache) {
            cache->h_prev[t] = std::move(state);
            cache->r[t] = std::move(r);
            cache->z[t] = std::move(z);
            cache->n[t] = std::move(n);
            cache->gh_n[t] = std::move(gh_n);
        }
        out.middleCols(col, b) = next;
        state = std::move(next);
    }
    return out;
}

void Gru::backward(const Cache& cache, const Mat& d_h, std::size_t batch) {
    const std::size_t steps = cache.r.size();
    const Eigen::Index h = w_hh_.value.cols();
    const auto b = static_cast<Eigen::Index>(batch);
    Mat d_gi(3 * h, d_h.cols());
    Mat carry = Mat::Zero(h, b);
    Mat d_gh(3 * h, b);
    for (std::size_t t = steps; t-- > 0;) {
        const auto col = static_cast<Eigen::Index>(t) * b;
        const auto r = cache.r[t].array();
        const auto z = cache.z[t].array();
        const auto n = cache.n[t].array();
        Eigen::ArrayXXd dh = d_h.middleCols(col, b).array() + carry.array();
        Eigen::ArrayXXd dn_pre = dh * (1.0 - z) * (1.0 - n * n);
        Eigen::ArrayXXd dz_pre = dh * (cache.h_prev[t].array() - n) * z * (1.0 - z);
        Eigen::ArrayXXd dr_pre = dn_pre * cache.gh_n[t].array() * r * (1.0 - r);

        d_gi.middleCols(col, b).topRows(h) = dr_pre.matrix();
        d_gi.middleCols(col, b).middleRows(h, h) = dz_pre.matrix();
        d_gi.middleCols(col, b).bottomRows(h) = dn_pre.matrix();
        d_gh.topRows(h) = dr_pre.matrix();
        d_gh.middleRows(h, h) = dz_pre.matrix();
        d_gh.bottomRows(h) = (dn_pre * r).matrix();

        w_hh_.grad.noalias() += d_gh * cache.h_prev[t].transpose();
        b_hh_.grad.col(0) += d_gh.rowwise().sum();
        carry = (dh * z).matrix();
        carry.noalias() += w_hh_.value.transpose() * d_gh;
    }
    w_ih_.grad.noalias() += d_gi * cache.x.transpose();
    b_ih_.grad.col(0) += d_gi.rowwise().sum();
}

void Gru::collect(ParamRefs& out) {
    out.push_back(&w_ih_);
    out.push_back(&w_hh_);
    out.push_back(&b_ih_);
    out.push_back(&b_hh_);
}

Mat gru_forward(const Mat& window, const Gru& gru) {
    if (!window.allFinite()) {
        throw ValidationError("GRU input contains non-finite values");
    }
    return gru.forward(window, 1);
}

DcConvBlock::DcConvBlock(const DcConvConfig& cfg, std::size_t index, std::mt19937_64& rng)
    : cfg_(cfg) {
    if (cfg.in_channels == 0 || cfg.channels == 0 || cfg.kernel == 0 || cfg.dilation == 0) {
        throw ConfigError("convolution sizes must be positive");
    }
    const std::string prefix = "temporal.conv" + std::to_string(index);
    const auto c = static_cast<Eigen::Index>(cfg.channels);
    const auto fan_in = static_cast<Eigen::Index>(cfg.kernel * cfg.in_channels);
    weight_ = Param(prefix + ".weight", c, fan_in);
    fill_uniform(weight_.value, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    gamma_ = Param(prefix + ".bn.gamma", c, 1);
    gamma_.value.setOnes();
    beta_ = Param(prefix + ".bn.beta", c, 1);
    running_mean_ = Param(prefix + ".bn.running_mean", c, 1);
    running_var_ = Param(prefix + ".bn.running_var", c, 1);
    running_var_.value.setOnes();
}

Mat DcConvBlock::im2col(const Mat& x, std::size_t batch) const {
    const std::size_t steps = steps_of(x, batch);
    const auto cin = static_cast<Eigen::Index>(cfg_.in_channels);
    const auto b = static_cast<Eigen::Index>(batch);
    Mat col = Mat::Zero(static_cast<Eigen::Index>(cfg_.kernel) * cin, x.cols());
    for (std::size_t k = 0; k < cfg_.kernel; ++k) {
        const std::size_t shift = (cfg_.kernel - 1 - k) * cfg_.dilation;
        if (shift >= steps) {
            continue;
        }
        const auto s = static_cast<Eigen::Index>(shift) * b;
        col.block(static_cast<Eigen::Index>(k) * cin, s, cin, x.cols() - s) =
            x.leftCols(x.cols() - s);
    }
    return col;
}

Mat DcConvBlock::forward(const Mat& x, std::size_t batch, Mode mode, Cache* cache) const {
    if (static_cast<std::size_t>(x.rows()) != cfg_.in_channels) {
        throw ValidationError("convolution input channels do not match");
    }
    Mat col = im2col(x, batch);
    Mat y = weight_.value * col;
    Mat out;
    Mat x_hat;
    Vec mean, var, inv_std;
    if (cfg_.batch_norm) {
        if (mode == Mode::train) {
            mean = y.rowwise().mean();
            var = (y.colwise() - mean).array().square().rowwise().mean();
        } else {
            mean = running_mean_.value.col(0);
            var = running_var_.value.col(0);
        }
        inv_std = (var.array() + kEps).rsqrt();
        x_hat = ((y.colwise() - mean).array().colwise() * inv_std.array()).matrix();
        out = ((x_hat.array().colwise() * gamma_.value.col(0).array()).colwise() +
               beta_.value.col(0).array())
                  .matrix();
        out = out.cwiseMax(0.0);
    } else {
        out = y.cwiseMax(0.0);
    }
    if (cache) {
        cache->x = x;
        cache->col = std::move(col);
        cache->y = std::move(y);
        cache->x_hat = std::move(x_hat);
        cache->out = out;
        cache->mean = std::move(mean);
        cache->var = std::move(var);
        cache->inv_std = std::move(inv_std);
    }
    return out;
}

Mat DcConvBlock::backward(const Cache& cache, const Mat& d_out, std::size_t batch, Mode mode,
                          bool input_grad) {
    Mat d_act = (cache.out.array() > 0.0).select(d_out, 0.0);
    Mat d_y;
    if (cfg_.batch_norm) {
        gamma_.grad.col(0) += (d_act.array() * cache.x_hat.array()).rowwise().sum().matrix();
        beta_.grad.col(0) += d_act.rowwise().sum();
        Eigen::ArrayXXd d_xhat = d_act.array().colwise() * gamma_.value.col(0).array();
        if (mode == Mode::train) {
            const double n = static_cast<double>(d_act.cols());
            Eigen::ArrayXd sum_d = d_xhat.rowwise().sum();
            Eigen::ArrayXd sum_dx = (d_xhat * cache.x_hat.array()).rowwise().sum();
            Eigen::ArrayXXd centred = (n * d_xhat).colwise() - sum_d;
            centred -= cache.x_hat.array().colwise() * sum_dx;
            d_y = (centred.colwise() * (cache.inv_std.array() / n)).matrix();
        } else {
            d_y = (d_xhat.colwise() * cache.inv_std.array()).matrix();
        }
    } else {
        d_y = std::move(d_act);
    }
    weight_.grad.noalias() += d_y * cache.col.transpose();
    if (!input_grad) {
        return {};
    }
    Mat d_col = weight_.value.transpose() * d_y;
    const std::size_t steps = steps_of(cache.x, batch);
    const auto cin = static_cast<Eigen::Index>(cfg_.in_channels);
    const auto b = static_cast<Eigen::Index>(batch);
    Mat d_x = Mat::Zero(cin, cache.x.cols());
    for (std::size_t k = 0; k < cfg_.kernel; ++k) {
        const std::size_t shift = (cfg_.kernel - 1 - k) * cfg_.dilation;
        if (shift >= steps) {
            continue;
        }
        const auto s = static_cast<Eigen::Index>(shift) * b;
        d_x.leftCols(d_x.cols() - s) +=
            d_col.block(static_cast<Eigen::Index>(k) * cin, s, cin, d_x.cols() - s);
    }
    return d_x;
}

void DcConvBlock::update_running_stats(const Cache& cache) {
    if (!cfg_.batch_norm || cache.mean.size() == 0) {
        return;
    }
    const double n = static_cast<double>(cache.y.cols());
    const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
    running_mean_.value.col(0) = (1.0 - kMomentum) * running_mean_.value.col(0) + kMomentum * cache.mean;
    running_var_.value.col(0) =
        (1.0 - kMomentum) * running_var_.value.col(0) + kMomentum * unbias * cache.var;
}

void DcConvBlock::collect(ParamRefs& out) {
    out.push_back(&weight_);
    if (cfg_.batch_norm) {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }
}

void DcConvBlock::collect_buffers(ParamRefs& out) {
    if (cfg_.batch_norm) {
        out.push_back(&running_mean_);
        out.push_back(&running_var_);
    }
}

std::size_t receptive_field(std::size_t kernel, const std::vector<std::size_t>& dilations) {
    return 1 + (kernel - 1) * std::accumulate(dilations.begin(), dilations.end(), std::size_t{0});
}

Mat dc_conv_stack(const Mat& window, const std::vector<DcConvBlock>& blocks, Mode mode) {
    Mat a = window;
    for (const auto& block : blocks) {
        a = block.forward(a, 1, mode);
    }
    return a;
}

void TemporalConfig::validate() const {
    if (metrics == 0 || gru_hidden == 0 || conv_channels == 0 || conv_kernel == 0 ||
        dilations.empty()) {
        throw ConfigError("temporal encoder sizes must be positive");
    }
    for (std::size_t d : dilations) {
        if (d == 0) {
            throw ConfigError("dilations must be positive");
        }
    }
}

TemporalEncoder::TemporalEncoder(const TemporalConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    gru_ = Gru(cfg_.metrics, cfg_.gru_hidden, rng);
    std::size_t in = cfg_.metrics;
    for (std::size_t i = 0; i < cfg_.dilations.size(); ++i) {
        DcConvConfig bc;
        bc.in_channels = in;
        bc.channels = cfg_.conv_channels;
        bc.kernel = cfg_.conv_kernel;
        bc.dilation = cfg_.dilations[i];
        blocks_.emplace_back(bc, i, rng);
        in = cfg_.conv_channels;
    }
}

Mat TemporalEncoder::forward(const Mat& x, std::size_t batch, Mode mode, Cache* cache) const {
    const std::size_t steps = steps_of(x, batch);
    const auto h = static_cast<Eigen::Index>(cfg_.gru_hidden);
    Mat out(static_cast<Eigen::Index>(cfg_.output_width()), static_cast<Eigen::Index>(batch));
    Mat states = gru_.forward(x, batch, cache ? &cache->gru : nullptr);
    out.topRows(h) = time_average(states, batch);
    if (cache) {
        cache->batch = batch;
        cache->steps = steps;
        cache->blocks.resize(blocks_.size());
    }
    Mat a = x;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        a = blocks_[i].forward(a, batch, mode, cache ? &cache->blocks[i] : nullptr);
    }
    out.bottomRows(out.rows() - h) = time_average(a, batch);
    return out;
}

void TemporalEncoder::backward(const Cache& cache, const Mat& d_out, Mode mode) {
    const auto h = static_cast<Eigen::Index>(cfg_.gru_hidden);
    gru_.backward(cache.gru, time_average_backward(d_out.topRows(h), cache.steps), cache.batch);
    Mat d_a = time_average_backward(d_out.bottomRows(d_out.rows() - h), cache.steps);
    for (std::size_t i = blocks_.size(); i-- > 0;) {
        d_a = blocks_[i].backward(cache.blocks[i], d_a, cache.batch, mode, i > 0);
    }
}

void TemporalEncoder::update_running_stats(const Cache& cache) {
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        blocks_[i].update_running_stats(cache.blocks[i]);
    }
}

void TemporalEncoder::collect(ParamRefs& out) {
    gru_.collect(out);
    for (auto& b : blocks_) {
        b.collect(out);
    }
}

void TemporalEncoder::collect_buffers(ParamRefs& out) {
    for (auto& b : blocks_) {
        b.collect_buffers(out);
    }
}

Mat stack_time_major(const std::vector<Mat>& windows) {
    if (windows.empty()) {
        throw ValidationError("no windows to stack");
    }
    const Eigen::Index m = windows.front().rows();
    const Eigen::Index w = windows.front().cols();
    const auto b = static_cast<Eigen::Index>(windows.size());
    Mat out(m, w * b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const Mat& win = windows[static_cast<std::size_t>(i)];
        if (win.rows() != m || win.cols() != w) {
            throw ValidationError("windows differ in shape");
        }
        for (Eigen::Index t = 0; t < w; ++t) {
            out.col(t * b + i) = win.col(t);
        }
    }
    return out;
}

Mat time_average(const Mat& x, std::size_t batch) {
    const std::size_t steps = steps_of(x, batch);
    const auto b = static_cast<Eigen::Index>(batch);
    Mat out = Mat::Zero(x.rows(), b);
    for (std::size_t t = 0; t < steps; ++t) {
        out += x.middleCols(static_cast<Eigen::Index>(t) * b, b);
    }
    return out / static_cast<double>(steps);
}

FusionLayer::FusionLayer(std::size_t relational_width, std::size_t temporal_width,
                         std::size_t embedding, std::mt19937_64& rng)
    : relational_width_(relational_width), temporal_width_(temporal_width),
      linear_("fusion", static_cast<Eigen::Index>(relational_width + temporal_width),
              static_cast<Eigen::Index>(embedding), rng) {
    if (embedding == 0) {
        throw ConfigError("embedding width must be positive");
    }
}

Mat FusionLayer::forward(const Mat& relational, const Mat& temporal) const {
    if (static_cast<std::size_t>(relational.rows()) != relational_width_ ||
        static_cast<std::size_t>(temporal.rows()) != temporal_width_ ||
        relational.cols() != temporal.cols()) {
        throw ConfigError("fusion input widths " + std::to_string(relational.rows()) + "+" +
                          std::to_string(temporal.rows()) + " do not match layer " +
                          std::to_string(relational_width_) + "+" +
                          std::to_string(temporal_width_));
    }
    Mat joint(relational.rows() + temporal.rows(), relational.cols());
    joint << relational, temporal;
    return linear_.forward(joint);
}

std::pair<Mat, Mat> FusionLayer::backward(const Mat& relational, const Mat& temporal,
                                          const Mat& d_e) {
    Mat joint(relational.rows() + temporal.rows(), relational.cols());
    joint << relational, temporal;
    Mat d_joint = linear_.backward(joint, d_e);
    return {d_joint.topRows(relational.rows()), d_joint.bottomRows(temporal.rows())};
}

Vec fuse(const Vec& relational, const Vec& temporal, const FusionLayer& fusion) {
    return fusion.forward(relational, temporal).col(0);
}

} // namespace rtad
