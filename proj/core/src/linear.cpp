// SPDX-License-Identifier: Apache-2.0
#include "rtad/linear.hpp"

#include <cmath>

namespace rtad {

Linear::Linear(std::string name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng)
    : weight_(name + ".weight", out, in), bias_(name + ".bias", out, 1) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    fill_uniform(weight_.value, bound, rng);
    fill_uniform(bias_.value, bound, rng);
}

Mat Linear::forward(const Mat& x) const {
    Mat y = weight_.value * x;
    y.colwise() += bias_.value.col(0);
    return y;
}

Mat Linear::backward(const Mat& x, const Mat& d_out) {
    weight_.grad.noalias() += d_out * x.transpose();
    bias_.grad.col(0) += d_out.rowwise().sum();
    return weight_.value.transpose() * d_out;
}

void Linear::collect(ParamRefs& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

} // namespace rtad
