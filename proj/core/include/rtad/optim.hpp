// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rtad/param.hpp"

#include <cstddef>
#include <vector>

namespace rtad {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction. Moment buffers are bound to the parameter list
/// given at construction.
class Adam {
public:
    Adam() = default;
    Adam(ParamRefs params, const AdamConfig& cfg);

    void step();
    void zero_grad();
    std::size_t steps() const { return t_; }

private:
    ParamRefs params_;
    AdamConfig cfg_;
    std::vector<Mat> m_;
    std::vector<Mat> v_;
    std::size_t t_ = 0;
};

} // namespace rtad
