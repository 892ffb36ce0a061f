// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rtad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// A named learnable array and its accumulated gradient. Vectors are stored as
/// single-column matrices so every parameter has the same shape type.
struct Param {
    std::string name;
    Mat value;
    Mat grad;

    Param() = default;
    Param(std::string n, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

    void zero_grad() { grad.setZero(); }
};

using ParamRefs = std::vector<Param*>;

/// Uniform(-bound, bound) fill from a caller-owned engine.
inline void fill_uniform(Mat& m, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = dist(rng);
    }
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace rtad
