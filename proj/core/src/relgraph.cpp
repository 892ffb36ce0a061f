// SPDX-License-Identifier: Apache-2.0
#include "rtad/relgraph.hpp"

#include "rtad/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rtad {
namespace {

Mat softmax_rows(const Mat& s) {
    Mat a(s.rows(), s.cols());
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        const double mx = s.row(i).maxCoeff();
        a.row(i) = (s.row(i).array() - mx).exp().matrix();
        a.row(i) /= a.row(i).sum();
    }
    return a;
}

// Raw (pre-softmax) attention logits; U and V are the two halves of the
// pairwise projection.
Mat attention_logits(const Mat& u, const Mat& v, const Vec& p, double slope) {
    const Eigen::Index m = u.rows();
    Mat s(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::ArrayXd pre = (u.row(i) + v.row(j)).transpose().array();
            s(i, j) = (pre.max(slope * pre) * p.array()).sum();
        }
    }
    return s;
}

// d(loss)/d(A_tilde) given d(loss)/d(A_hat) for A_hat = D^-1/2 (A + I) D^-1/2.
Mat normalized_adjacency_backward(const Mat& a_bin, const Mat& d_hat) {
    const Eigen::Index n = a_bin.rows();
    Mat a_tilde = a_bin + Mat::Identity(n, n);
    Vec deg = a_tilde.rowwise().sum();
    Vec s = deg.array().rsqrt();
    Mat grad = d_hat.array() * (s * s.transpose()).array();
    Vec ds = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double g = d_hat(i, j) * a_tilde(i, j);
            ds(i) += g * s(j);
            ds(j) += g * s(i);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dd = -0.5 * ds(i) * std::pow(deg(i), -1.5);
        grad.row(i).array() += dd;
    }
    return grad;
}

Mat readout_backward(const Mat& h, const Vec& d_out) {
    const Eigen::Index n = h.rows();
    const Eigen::Index f = h.cols();
    Mat dh = Mat::Zero(n, f);
    for (Eigen::Index c = 0; c < f; ++c) {
        dh.col(c).array() += d_out(c) / static_cast<double>(n);
        Eigen::Index arg = 0;
        h.col(c).maxCoeff(&arg);
        dh(arg, c) += d_out(f + c);
    }
    return dh;
}

Mat take_rows(const Mat& m, const std::vector<std::size_t>& idx) {
    Mat out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t q = 0; q < idx.size(); ++q) {
        out.row(static_cast<Eigen::Index>(q)) = m.row(static_cast<Eigen::Index>(idx[q]));
    }
    return out;
}

Mat induced_subgraph(const Mat& a, const std::vector<std::size_t>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Mat out(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
        for (Eigen::Index c = 0; c < k; ++c) {
            out(r, c) = a(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]),
                          static_cast<Eigen::Index>(idx[static_cast<std::size_t>(c)]));
        }
    }
    return out;
}

} // namespace

Mat attention_scores(const Mat& window, const AttentionParams& params, double slope) {
    if (!window.allFinite()) {
        throw ValidationError("attention input contains non-finite values");
    }
    const Eigen::Index w = window.cols();
    if (params.w_pair.rows() != 2 * w || params.w_pair.cols() != params.p.size()) {
        throw ValidationError("attention parameters do not match the window length");
    }
    Mat u = window * params.w_pair.topRows(w);
    Mat v = window * params.w_pair.bottomRows(w);
    return softmax_rows(attention_logits(u, v, params.p, slope));
}

Mat binarize_adjacency(const Mat& a, double t) {
    return (a.array() >= t).cast<double>().matrix();
}

AttentionMatrix attention_matrix(const Mat& window, const AttentionParams& params, double t,
                                 double slope) {
    AttentionMatrix out;
    out.a = attention_scores(window, params, slope);
    out.binary = binarize_adjacency(out.a, t);
    out.threshold_t = t;
    return out;
}

Mat normalized_adjacency(const Mat& a_bin) {
    const Eigen::Index n = a_bin.rows();
    Mat a_tilde = a_bin + Mat::Identity(n, n);
    Vec s = a_tilde.rowwise().sum().array().rsqrt();
    return s.asDiagonal() * a_tilde * s.asDiagonal();
}

Mat gcn_layer(const Mat& h, const Mat& a_bin, const Mat& theta) {
    return (normalized_adjacency(a_bin) * h * theta).cwiseMax(0.0);
}

std::vector<std::size_t> top_k_indices(const Vec& scores, std::size_t k) {
    std::vector<std::size_t> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
    });
    order.resize(std::min(k, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

std::size_t pooled_size(std::size_t nodes, double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(nodes) + 1e-12));
}

PoolResult sag_pool(const Mat& h, const Mat& a_bin, double ratio, const PoolScorer& scorer) {
    if (!(ratio > 0.0 && ratio <= 1.0)) {
        throw ValidationError("pooling ratio must lie in (0, 1]");
    }
    const std::size_t keep = pooled_size(static_cast<std::size_t>(h.rows()), ratio);
    if (keep == 0) {
        throw ValidationError("pooling ratio keeps no nodes");
    }
    PoolResult out;
    out.z = (normalized_adjacency(a_bin) * h * scorer.theta).col(0).array() + scorer.bias;
    out.kept = top_k_indices(out.z, keep);
    out.h = take_rows(h, out.kept);
    for (std::size_t q = 0; q < out.kept.size(); ++q) {
        out.h.row(static_cast<Eigen::Index>(q)) *=
            std::tanh(out.z(static_cast<Eigen::Index>(out.kept[q])));
    }
    out.a = induced_subgraph(a_bin, out.kept);
    return out;
}

Vec readout(const Mat& h) {
    if (h.rows() == 0) {
        throw ValidationError("readout over zero nodes");
    }
    Vec out(2 * h.cols());
    out.head(h.cols()) = h.colwise().mean().transpose();
    out.tail(h.cols()) = h.colwise().maxCoeff().transpose();
    return out;
}

double RelGraphConfig::effective_threshold() const {
    return threshold > 0.0 ? threshold : 1.0 / static_cast<double>(metrics);
}

void RelGraphConfig::validate() const {
    if (metrics == 0 || window == 0 || attention_hidden == 0 || features == 0 || layers == 0) {
        throw ConfigError("relational encoder sizes must be positive");
    }
    if (!(pool_ratio > 0.0 && pool_ratio <= 1.0)) {
        throw ConfigError("pool_ratio must lie in (0, 1]");
    }
    if (!(attention_init_gain > 0.0)) {
        throw ConfigError("attention_init_gain must be positive");
    }
    std::size_t nodes = metrics;
    for (std::size_t l = 0; l + 1 < layers; ++l) {
        nodes = pooled_size(nodes, pool_ratio);
        if (nodes == 0) {
            throw ConfigError("pool_ratio " + std::to_string(pool_ratio) + " leaves no nodes at layer " +
                              std::to_string(l + 2) + " for " + std::to_string(metrics) + " metrics");
        }
    }
}

const char* to_string(AttentionInit init) {
    return init == AttentionInit::glorot ? "glorot" : "similarity";
}

AttentionInit parse_attention_init(std::string_view name) {
    if (name == "glorot") {
        return AttentionInit::glorot;
    }
    if (name == "similarity") {
        return AttentionInit::similarity;
    }
    throw ConfigError("unknown attention init '" + std::string(name) + "' (expected glorot or similarity)");
}

RelationalEncoder::RelationalEncoder(const RelGraphConfig& cfg, std::mt19937_64& rng) : cfg_(cfg) {
    cfg_.validate();
    const auto w = static_cast<Eigen::Index>(cfg_.window);
    const auto d = static_cast<Eigen::Index>(cfg_.attention_hidden);
    const auto f = static_cast<Eigen::Index>(cfg_.features);
    const double gain = cfg_.attention_init_gain;
    w_pair_ = Param("rel.attention.w_pair", 2 * w, d);
    fill_uniform(w_pair_.value, gain * std::sqrt(6.0 / static_cast<double>(2 * w + d)), rng);
    p_ = Param("rel.attention.p", d, 1);
    fill_uniform(p_.value, gain * std::sqrt(6.0 / static_cast<double>(d + 1)), rng);
    if (cfg_.attention_init == AttentionInit::similarity) {
        w_pair_.value.bottomRows(w) = -w_pair_.value.topRows(w);
        p_.value = -p_.value.cwiseAbs();
    }
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const Eigen::Index in = l == 0 ? w : f;
        Param theta("rel.gcn" + std::to_string(l) + ".theta", in, f);
        fill_uniform(theta.value, std::sqrt(6.0 / static_cast<double>(in + f)), rng);
        theta_.push_back(std::move(theta));
        if (l + 1 < cfg_.layers) {
            Param st("rel.pool" + std::to_string(l) + ".theta", f, 1);
            fill_uniform(st.value, std::sqrt(6.0 / static_cast<double>(f + 1)), rng);
            score_theta_.push_back(std::move(st));
            score_bias_.emplace_back("rel.pool" + std::to_string(l) + ".bias", 1, 1);
        }
    }
}

AttentionParams RelationalEncoder::attention_params() const {
    return {w_pair_.value, p_.value.col(0)};
}

Mat RelationalEncoder::attention(const Mat& window) const {
    return attention_scores(window, attention_params(), cfg_.leaky_slope);
}

Vec RelationalEncoder::forward(const Mat& window, Cache* cache) const {
    if (static_cast<std::size_t>(window.rows()) != cfg_.metrics ||
        static_cast<std::size_t>(window.cols()) != cfg_.window) {
        throw ValidationError("window shape does not match the relational encoder");
    }
    Mat a = attention(window);
    Mat bin = binarize_adjacency(a, cfg_.effective_threshold());

    std::vector<std::size_t> nodes(cfg_.metrics);
    std::iota(nodes.begin(), nodes.end(), 0);
    Mat a_bin = bin;
    Mat h_in = window;
    Vec out = Vec::Zero(static_cast<Eigen::Index>(cfg_.output_width()));
    if (cache) {
        cache->layers.clear();
    }
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        Mat a_hat = normalized_adjacency(a_bin);
        Mat pre = a_hat * h_in * theta_[l].value;
        Mat h_out = pre.cwiseMax(0.0);
        out += readout(h_out);

        LayerCache lc;
        if (l + 1 < cfg_.layers) {
            Vec z = (a_hat * h_out * score_theta_[l].value).col(0).array() +
                    score_bias_[l].value(0, 0);
            std::vector<std::size_t> kept =
                top_k_indices(z, pooled_size(nodes.size(), cfg_.pool_ratio));
            Vec tz(static_cast<Eigen::Index>(kept.size()));
            Mat h_next = take_rows(h_out, kept);
            std::vector<std::size_t> next_nodes;
            for (std::size_t q = 0; q < kept.size(); ++q) {
                const auto qq = static_cast<Eigen::Index>(q);
                tz(qq) = std::tanh(z(static_cast<Eigen::Index>(kept[q])));
                h_next.row(qq) *= tz(qq);
                next_nodes.push_back(nodes[kept[q]]);
            }
            Mat a_next = induced_subgraph(a_bin, kept);
            if (cache) {
                lc.z = std::move(z);
                lc.kept = kept;
                lc.tanh_z = tz;
            }
            if (cache) {
                lc.nodes = nodes;
                lc.a_bin = a_bin;
                lc.a_hat = std::move(a_hat);
                lc.h_in = std::move(h_in);
                lc.pre = std::move(pre);
                lc.h_out = std::move(h_out);
                cache->layers.push_back(std::move(lc));
            }
            nodes = std::move(next_nodes);
            a_bin = std::move(a_next);
            h_in = std::move(h_next);
        } else if (cache) {
            lc.nodes = nodes;
            lc.a_bin = a_bin;
            lc.a_hat = std::move(a_hat);
            lc.h_in = std::move(h_in);
            lc.pre = std::move(pre);
            lc.h_out = std::move(h_out);
            cache->layers.push_back(std::move(lc));
        }
    }
    if (cache) {
        cache->x = window;
        cache->attention = std::move(a);
        cache->binary = std::move(bin);
    }
    return out;
}

void RelationalEncoder::backward(const Cache& cache, const Vec& d_out) {
    const auto m = static_cast<Eigen::Index>(cfg_.metrics);
    Mat d_bin_full = Mat::Zero(m, m);
    Mat d_next;  // gradient w.r.t. the input of layer l+1
    for (std::size_t li = cfg_.layers; li-- > 0;) {
        const LayerCache& lc = cache.layers[li];
        Mat d_h_out = readout_backward(lc.h_out, d_out);
        Mat d_hat = Mat::Zero(lc.a_hat.rows(), lc.a_hat.cols());
        if (li + 1 < cfg_.layers) {
            const Mat& st = score_theta_[li].value;
            Vec dz = Vec::Zero(lc.h_out.rows());
            for (std::size_t q = 0; q < lc.kept.size(); ++q) {
                const auto qq = static_cast<Eigen::Index>(q);
                const auto c = static_cast<Eigen::Index>(lc.kept[q]);
                d_h_out.row(c) += d_next.row(qq) * lc.tanh_z(qq);
                dz(c) = d_next.row(qq).dot(lc.h_out.row(c)) * (1.0 - lc.tanh_z(qq) * lc.tanh_z(qq));
            }
            score_theta_[li].grad += (lc.a_hat * lc.h_out).transpose() * dz;
            score_bias_[li].grad(0, 0) += dz.sum();
            d_h_out += lc.a_hat.transpose() * dz * st.transpose();
            d_hat += dz * (lc.h_out * st).transpose();
        }
        Mat d_pre = (lc.pre.array() > 0.0).select(d_h_out, 0.0);
        const Mat& theta = theta_[li].value;
        theta_[li].grad += (lc.a_hat * lc.h_in).transpose() * d_pre;
        d_hat += d_pre * (lc.h_in * theta).transpose();
        if (li > 0) {
            d_next = lc.a_hat.transpose() * d_pre * theta.transpose();
        }
        if (cfg_.straight_through) {
            Mat d_tilde = normalized_adjacency_backward(lc.a_bin, d_hat);
            for (std::size_t r = 0; r < lc.nodes.size(); ++r) {
                for (std::size_t c = 0; c < lc.nodes.size(); ++c) {
                    d_bin_full(static_cast<Eigen::Index>(lc.nodes[r]),
                               static_cast<Eigen::Index>(lc.nodes[c])) +=
                        d_tilde(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                }
            }
        }
    }
    if (!cfg_.straight_through) {
        return;
    }

    // binarisation is a pass-through on the entries it kept
    Mat d_a = d_bin_full.cwiseProduct(cache.binary);
    const Mat& a = cache.attention;
    Vec row_dot = (d_a.cwiseProduct(a)).rowwise().sum();
    Mat ds = a.array() * (d_a.colwise() - row_dot).array();

    const auto w = static_cast<Eigen::Index>(cfg_.window);
    const double slope = cfg_.leaky_slope;
    Mat u = cache.x * w_pair_.value.topRows(w);
    Mat v = cache.x * w_pair_.value.bottomRows(w);
    const Eigen::ArrayXd p = p_.value.col(0).array();
    Mat du = Mat::Zero(u.rows(), u.cols());
    Mat dv = Mat::Zero(v.rows(), v.cols());
    Eigen::ArrayXd dp = Eigen::ArrayXd::Zero(p.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double g = ds(i, j);
            if (g == 0.0) {
                continue;
            }
            Eigen::ArrayXd pre = (u.row(i) + v.row(j)).transpose().array();
            dp += g * pre.max(slope * pre);
            Eigen::ArrayXd dpre = g * p * (pre > 0.0).select(Eigen::ArrayXd::Ones(pre.size()),
                                                             slope);
            du.row(i) += dpre.matrix().transpose();
            dv.row(j) += dpre.matrix().transpose();
        }
    }
    p_.grad.col(0) += dp.matrix();
    w_pair_.grad.topRows(w) += cache.x.transpose() * du;
    w_pair_.grad.bottomRows(w) += cache.x.transpose() * dv;
}

void RelationalEncoder::collect(ParamRefs& out) {
    out.push_back(&w_pair_);
    out.push_back(&p_);
    for (std::size_t l = 0; l < theta_.size(); ++l) {
        out.push_back(&theta_[l]);
        if (l < score_theta_.size()) {
            out.push_back(&score_theta_[l]);
            out.push_back(&score_bias_[l]);
        }
    }
}

} // namespace rtad
