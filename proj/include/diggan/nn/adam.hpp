#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "diggan/nn/tensor.hpp"

namespace diggan::nn {

struct AdamOptions {
    double learning_rate = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adaptive-moment optimizer over a fixed parameter list. Moments are kept
// in double regardless of the parameter precision.
template <class T>
class Adam {
public:
    Adam() = default;
    Adam(std::vector<Parameter<T>*> params, AdamOptions opts) : params_(std::move(params)), opts_(opts) {
        for (auto* p : params_) {
            m_.emplace_back(p->size(), 0.0);
            v_.emplace_back(p->size(), 0.0);
        }
    }

    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        const double lr = opts_.learning_rate * std::sqrt(bc2) / bc1;
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& p = *params_[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double g = p.grad[i];
                m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
                v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
                p.value[i] = static_cast<T>(p.value[i] - lr * m[i] / (std::sqrt(v[i]) + opts_.epsilon));
            }
        }
    }

    void zero_grad() {
        for (auto* p : params_) p->zero_grad();
    }

    std::int64_t steps() const { return t_; }
    void set_steps(std::int64_t t) { t_ = t; }
    std::vector<std::vector<double>>& first_moments() { return m_; }
    std::vector<std::vector<double>>& second_moments() { return v_; }
    const std::vector<Parameter<T>*>& parameters() const { return params_; }
    AdamOptions& options() { return opts_; }

private:
    std::vector<Parameter<T>*> params_;
    AdamOptions opts_;
    std::vector<std::vector<double>> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace diggan::nn
