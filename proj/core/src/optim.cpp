// SPDX-License-Identifier: Apache-2.0
#include "rtad/optim.hpp"

#include "rtad/error.hpp"

#include <cmath>

namespace rtad {

Adam::Adam(ParamRefs params, const AdamConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
    if (!(cfg_.lr > 0.0)) {
        throw ConfigError("learning rate must be positive");
    }
    for (const Param* p : params_) {
        m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
}

void Adam::step() {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Param& p = *params_[i];
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p.grad;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * p.grad.cwiseAbs2();
        p.value.array() -=
            cfg_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
    }
}

void Adam::zero_grad() {
    for (Param* p : params_) {
        p->zero_grad();
    }
}

} // namespace rtad
