#include "flowdetect/optim.hpp"

#include <cmath>

namespace flowdetect {

AdamState::AdamState(const std::vector<Tensor*>& params, AdamConfig config) : config_(config) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const Tensor* p : params) {
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
    }
}

void adam_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.m_.size()) {
        throw ContractError("adam_step: parameter, gradient and state counts differ");
    }
    state.step_ += 1;
    const auto& cfg = state.config_;
    const double t = static_cast<double>(state.step_);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g) || !p.same_shape(state.m_[i])) {
            throw ContractError("adam_step: tensor " + std::to_string(i) + " shape mismatch: " +
                                shape_to_string(p.shape()) + " vs " + shape_to_string(g.shape()));
        }
        Tensor& m = state.m_[i];
        Tensor& v = state.v_[i];
        for (std::size_t j = 0; j < p.numel(); ++j) {
            const double gj = g.at(j);
            m.at(j) = cfg.beta1 * m.at(j) + (1.0 - cfg.beta1) * gj;
            v.at(j) = cfg.beta2 * v.at(j) + (1.0 - cfg.beta2) * gj * gj;
            const double m_hat = m.at(j) / bias1;
            const double v_hat = v.at(j) / bias2;
            p.at(j) -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
        p.ensure_finite("adam_step");
    }
}

void clip_global_norm(std::vector<Tensor*>& grads, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("clip_global_norm requires max_norm > 0");
    double sq = 0.0;
    for (const Tensor* g : grads) {
        for (std::size_t j = 0; j < g->numel(); ++j) sq += g->at(j) * g->at(j);
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (Tensor* g : grads) {
        for (std::size_t j = 0; j < g->numel(); ++j) g->at(j) *= scale;
    }
}

}  // namespace flowdetect
