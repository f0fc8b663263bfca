// SPDX-License-Identifier: Apache-2.0
//
// Adam (decoupled weight decay) and plain SGD over flat parameter spans,
// plus a cosine learning-rate schedule.

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "deltanet/tensor.hpp"

namespace deltanet {

template <class T>
struct AdamConfig {
    T lr = T(1e-3);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T eps = T(1e-8);
    T weight_decay = T(0);
};

// One Adam update with bias correction. `step_number` starts at 1. Weight
// decay is applied directly to the parameters, outside the moment estimates.
template <class T>
void adam_step(std::span<T> params, std::span<const T> grads, std::span<T> m, std::span<T> v,
               std::uint64_t step_number, const AdamConfig<T>& cfg, T lr_scale = T(1)) {
    require(params.size() == grads.size() && params.size() == m.size() &&
                params.size() == v.size(),
            "adam_step: size mismatch");
    const T lr = cfg.lr * lr_scale;
    const T bc1 = T(1) - std::pow(cfg.beta1, static_cast<T>(step_number));
    const T bc2 = T(1) - std::pow(cfg.beta2, static_cast<T>(step_number));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T g = grads[i];
        m[i] = cfg.beta1 * m[i] + (T(1) - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (T(1) - cfg.beta2) * g * g;
        const T m_hat = m[i] / bc1;
        const T v_hat = v[i] / bc2;
        params[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * params[i]);
    }
}

// p' = p - lr * (g + decay * p)
template <class T>
void sgd_step(std::span<T> params, std::span<const T> grads, T lr, T decay) {
    require(params.size() == grads.size(), "sgd_step: size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        params[i] -= lr * (grads[i] + decay * params[i]);
}

inline double cosine_lr_scale(std::size_t epoch, std::size_t total_epochs, double min_scale = 0.0) {
    if (total_epochs <= 1) return 1.0;
    const double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    return min_scale + (1.0 - min_scale) * 0.5 * (1.0 + std::cos(3.14159265358979323846 * t));
}

// Optimizer over a list of parameter tensors; first/second moments are kept
// per tensor in registration order.
template <class T>
class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamConfig<T> cfg) : cfg_(cfg) {}

    void step(const std::vector<std::span<T>>& params,
              const std::vector<std::span<const T>>& grads, T lr_scale = T(1)) {
        require(params.size() == grads.size(), "AdamOptimizer::step: tensor count mismatch");
        if (m_.empty()) {
            for (const auto& p : params) {
                m_.emplace_back(p.size(), T(0));
                v_.emplace_back(p.size(), T(0));
            }
        }
        require(m_.size() == params.size(), "AdamOptimizer::step: tensor count changed");
        ++step_;
        for (std::size_t k = 0; k < params.size(); ++k)
            adam_step<T>(params[k], grads[k], std::span<T>(m_[k]), std::span<T>(v_[k]), step_,
                         cfg_, lr_scale);
    }

    std::uint64_t step_count() const { return step_; }
    const std::vector<std::vector<T>>& first_moments() const { return m_; }
    const std::vector<std::vector<T>>& second_moments() const { return v_; }
    void restore(std::uint64_t step, std::vector<std::vector<T>> m, std::vector<std::vector<T>> v) {
        step_ = step;
        m_ = std::move(m);
        v_ = std::move(v);
    }

private:
    AdamConfig<T> cfg_;
    std::uint64_t step_ = 0;
    std::vector<std::vector<T>> m_, v_;
};

}  // namespace deltanet
