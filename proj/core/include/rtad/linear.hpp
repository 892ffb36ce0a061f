// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/param.hpp"

#include <string>

namespace rtad {

/// y = W x + b over column-batched inputs (in x B -> out x B).
class Linear {
public:
    Linear() = default;
    Linear(std::string name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);

    Eigen::Index in_features() const { return weight_.value.cols(); }
    Eigen::Index out_features() const { return weight_.value.rows(); }

    Mat forward(const Mat& x) const;
    /// Accumulates dW, db and returns d(loss)/dx.
    Mat backward(const Mat& x, const Mat& d_out);

    Param& weight() { return weight_; }
    Param& bias() { return bias_; }
    const Param& weight() const { return weight_; }
    const Param& bias() const { return bias_; }

    void collect(ParamRefs& out);

private:
    Param weight_;
    Param bias_;
};

} // namespace rtad
