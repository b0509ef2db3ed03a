#pragma once

#include <cstdint>
#include <vector>

#include "flowdetect/tensor.hpp"

namespace flowdetect {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam optimizer state over an ordered list of parameter tensors. The
/// first/second moment tensors mirror the parameter shapes; `step` counts
/// completed updates and increments by exactly one per adam_step.
class AdamState {
public:
    AdamState(const std::vector<Tensor*>& params, AdamConfig config);

    std::uint64_t step() const { return step_; }
    const AdamConfig& config() const { return config_; }
    const std::vector<Tensor>& first_moment() const { return m_; }
    const std::vector<Tensor>& second_moment() const { return v_; }

    friend void adam_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
                          AdamState& state);

private:
    AdamConfig config_;
    std::uint64_t step_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

/// One Adam update with bias correction:
/// m_hat = m/(1-b1^t), v_hat = v/(1-b2^t), theta -= lr * m_hat/(sqrt(v_hat)+eps).
void adam_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

/// Global L2-norm gradient clipping: when the joint norm exceeds `max_norm`
/// every gradient is scaled by max_norm/norm, otherwise nothing changes
/// (bitwise identity).
void clip_global_norm(std::vector<Tensor*>& grads, double max_norm);

}  // namespace flowdetect
