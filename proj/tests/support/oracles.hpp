// SPDX-License-Identifier: Apache-2.0
// Element-by-element reference implementations. They deliberately avoid Eigen
// expressions so that they share no code path with the library.
#pragma once

#include "rtad/param.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace rtad::oracle {

/// a_ij = exp(s_ij) / sum_k exp(s_ik), s_ij = sum_q p_q LeakyReLU(sum_t x_it W1_tq + x_jt W2_tq).
inline Mat attention(const Mat& x, const Mat& w_pair, const Vec& p, double slope) {
    const int m = static_cast<int>(x.rows());
    const int w = static_cast<int>(x.cols());
    const int d = static_cast<int>(p.size());
    std::vector<std::vector<double>> s(m, std::vector<double>(m, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int q = 0; q < d; ++q) {
                double pre = 0.0;
                for (int t = 0; t < w; ++t) {
                    pre += x(i, t) * w_pair(t, q);
                    pre += x(j, t) * w_pair(w + t, q);
                }
                acc += p(q) * (pre > 0.0 ? pre : slope * pre);
            }
            s[i][j] = acc;
        }
    }
    Mat a(m, m);
    for (int i = 0; i < m; ++i) {
        double mx = s[i][0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, s[i][j]);
        double z = 0.0;
        for (int j = 0; j < m; ++j) z += std::exp(s[i][j] - mx);
        for (int j = 0; j < m; ++j) a(i, j) = std::exp(s[i][j] - mx) / z;
    }
    return a;
}

/// ReLU(D^-1/2 (A + I) D^-1/2 h theta) with D_ii = sum_j (A + I)_ij.
inline Mat gcn(const Mat& h, const Mat& a_bin, const Mat& theta) {
    const int n = static_cast<int>(h.rows());
    const int fin = static_cast<int>(h.cols());
    const int fout = static_cast<int>(theta.cols());
    std::vector<double> deg(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) deg[i] += a_bin(i, j) + (i == j ? 1.0 : 0.0);
    }
    Mat out(n, fout);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < fout; ++c) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                const double at = a_bin(i, j) + (i == j ? 1.0 : 0.0);
                if (at == 0.0) continue;
                const double norm = at / std::sqrt(deg[i] * deg[j]);
                for (int k = 0; k < fin; ++k) acc += norm * h(j, k) * theta(k, c);
            }
            out(i, c) = acc > 0.0 ? acc : 0.0;
        }
    }
    return out;
}

/// delta_i = sum_{j != i} |a_ij - n_ij|.
inline Vec correlation_change(const Mat& a_normal, const Mat& a_anomalous) {
    const int m = static_cast<int>(a_normal.rows());
    Vec out(m);
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            if (j != i) acc += std::fabs(a_anomalous(i, j) - a_normal(i, j));
        }
        out(i) = acc;
    }
    return out;
}

/// Standard GRU, gate rows stacked [reset; update; candidate]:
///   r = sig(W_ir x + b_ir + W_hr h + b_hr)
///   z = sig(W_iz x + b_iz + W_hz h + b_hz)
///   n = tanh(W_in x + b_in + r * (W_hn h + b_hn))
///   h' = (1 - z) * n + z * h
inline Mat gru(const Mat& x, const Mat& w_ih, const Mat& w_hh, const Vec& b_ih, const Vec& b_hh) {
    const int in = static_cast<int>(x.rows());
    const int steps = static_cast<int>(x.cols());
    const int hs = static_cast<int>(w_hh.cols());
    std::vector<double> h(hs, 0.0);
    Mat out(hs, steps);
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int t = 0; t < steps; ++t) {
        std::vector<double> next(hs);
        for (int u = 0; u < hs; ++u) {
            double gi[3];
            double gh[3];
            for (int g = 0; g < 3; ++g) {
                const int row = g * hs + u;
                gi[g] = b_ih(row);
                gh[g] = b_hh(row);
                for (int k = 0; k < in; ++k) gi[g] += w_ih(row, k) * x(k, t);
                for (int k = 0; k < hs; ++k) gh[g] += w_hh(row, k) * h[k];
            }
            const double r = sig(gi[0] + gh[0]);
            const double z = sig(gi[1] + gh[1]);
            const double n = std::tanh(gi[2] + r * gh[2]);
            next[u] = (1.0 - z) * n + z * h[u];
        }
        h = next;
        for (int u = 0; u < hs; ++u) out(u, t) = h[u];
    }
    return out;
}

/// Every ground-truth segment containing a predicted point becomes fully predicted.
inline std::vector<int> point_adjust(const std::vector<int>& pred, const std::vector<int>& truth) {
    std::vector<int> out = pred;
    const std::size_t n = truth.size();
    std::size_t t = 0;
    while (t < n) {
        if (truth[t] != 1) {
            ++t;
            continue;
        }
        std::size_t e = t;
        while (e + 1 < n && truth[e + 1] == 1) ++e;
        bool hit = false;
        for (std::size_t k = t; k <= e; ++k) hit = hit || pred[k] == 1;
        if (hit) {
            for (std::size_t k = t; k <= e; ++k) out[k] = 1;
        }
        t = e + 1;
    }
    return out;
}

struct Counts {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline Counts prf1(const std::vector<int>& pred, const std::vector<int>& truth) {
    double tp = 0;
    double fp = 0;
    double fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] == 1 && truth[i] == 1) tp += 1;
        if (pred[i] == 1 && truth[i] == 0) fp += 1;
        if (pred[i] == 0 && truth[i] == 1) fn += 1;
    }
    Counts c;
    c.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    c.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    return c;
}

} // namespace rtad::oracle
