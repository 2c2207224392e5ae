#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vlrl/tensor.hpp"

namespace vlrl {

/// Adaptive moment estimation over a fixed parameter list. Moments live
/// here, outside the tensors, so checkpoints stay parameter-only.
template <class Real>
class Adam {
public:
    explicit Adam(std::vector<Tensor<Real>> params, Real lr, Real beta1 = Real(0.9),
                  Real beta2 = Real(0.999), Real eps = Real(1e-8))
        : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].data().size(), Real(0));
            v_[i].assign(params_[i].data().size(), Real(0));
        }
    }

    void step() {
        ++t_;
        const double b1t = 1.0 - std::pow(static_cast<double>(beta1_), static_cast<double>(t_));
        const double b2t = 1.0 - std::pow(static_cast<double>(beta2_), static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& p = params_[i];
            if (!p.has_grad()) {
                throw ContractError("optimizer step: parameter " + std::to_string(i) +
                                    " has no gradient");
            }
            auto pd = p.mutable_data();
            const auto g = p.grad();
            for (std::size_t j = 0; j < pd.size(); ++j) {
                m_[i][j] = beta1_ * m_[i][j] + (Real(1) - beta1_) * g[j];
                v_[i][j] = beta2_ * v_[i][j] + (Real(1) - beta2_) * g[j] * g[j];
                const Real mhat = m_[i][j] / static_cast<Real>(b1t);
                const Real vhat = v_[i][j] / static_cast<Real>(b2t);
                pd[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    void zero_grad() {
        for (auto& p : params_) {
            p.impl().ensure_grad();
            p.zero_grad();
        }
    }

    std::int64_t step_count() const { return t_; }
    Real lr() const { return lr_; }
    const std::vector<Tensor<Real>>& params() const { return params_; }

private:
    std::vector<Tensor<Real>> params_;
    std::vector<std::vector<Real>> m_, v_;
    std::int64_t t_ = 0;
    Real lr_, beta1_, beta2_, eps_;
};

}  // namespace vlrl
