#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vlrl/nets.hpp"
#include "vlrl/replay.hpp"

namespace vlrl {

/// Per-update loss record. The total is what the optimizer minimizes;
/// the parts are kept for the additivity invariant and the metrics stream.
struct LossBreakdown {
    double rl = 0.0;
    double pred = 0.0;
    double cyc = 0.0;
    double total = 0.0;
    std::int64_t step = 0;
};

enum class ActMode { train, eval };

/// Linear decay 1.0 -> 0.05 over the first 20% of training, then flat.
inline double epsilon_at(std::int64_t step, std::int64_t total_steps) {
    const double horizon = std::max<double>(1.0, 0.2 * static_cast<double>(total_steps));
    const double frac = std::min(1.0, static_cast<double>(step) / horizon);
    return 1.0 + frac * (0.05 - 1.0);
}

template <class Real>
std::vector<Real> to_real(const std::vector<double>& v) {
    return {v.begin(), v.end()};
}

template <class Real>
Tensor<Real> obs_tensor(const std::vector<std::vector<double>>& rows) {
    std::vector<Real> flat;
    flat.reserve(rows.size() * rows.front().size());
    for (const auto& r : rows) {
        for (auto v : r) flat.push_back(static_cast<Real>(v));
    }
    return Tensor<Real>::from(std::move(flat),
                              {static_cast<std::int64_t>(rows.size()),
                               static_cast<std::int64_t>(rows.front().size())});
}

/// Double-Q discrete head: online/target value networks over the shared
/// latent, epsilon-greedy behavior, n-step TD targets with the action
/// chosen by the online network and valued by the target network.
template <class Real>
struct QHead {
    Mlp<Real> online;
    Mlp<Real> target;
    Real gamma = Real(0.99);

    QHead() = default;

    QHead(Rng& rng, std::int64_t d_z, std::int64_t n_actions,
          const std::vector<std::int64_t>& hidden) {
        online = Mlp<Real>(rng, d_z, hidden, n_actions);
        target = online.clone_frozen();
    }

    std::int64_t n_actions() const { return online.out_dim(); }

    std::int64_t act(const Tensor<Real>& z, ActMode mode, Rng& rng, double eps) const {
        if (mode == ActMode::train && rng.u01() < eps) {
            return rng.randint(n_actions());
        }
        NoGradGuard ng;
        return argmax_rows(online.forward(z))[0];
    }

    /// Mean squared n-step TD error. Gradient reaches the encoder and the
    /// online Q network only.
    Tensor<Real> loss(const RepresentationStack<Real>& stack, const RlBatch& batch) const {
        const auto b = static_cast<std::int64_t>(batch.obs.size());
        auto z = stack.encode(obs_tensor<Real>(batch.obs), Branch::online);
        auto q_sa = row_select(online.forward(z), batch.action_d);

        std::vector<Real> y(static_cast<std::size_t>(b));
        {
            NoGradGuard ng;
            auto zn = stack.encode(obs_tensor<Real>(batch.next_obs), Branch::target);
            auto q_next_online = online.forward(zn);
            auto best = argmax_rows(q_next_online);
            auto q_next_target = row_select(target.forward(zn), best);
            for (std::int64_t i = 0; i < b; ++i) {
                y[static_cast<std::size_t>(i)] =
                    static_cast<Real>(batch.reward_n[static_cast<std::size_t>(i)]) +
                    static_cast<Real>(batch.bootstrap[static_cast<std::size_t>(i)]) *
                        q_next_target.at(i);
            }
        }
        auto y_t = Tensor<Real>::from(std::move(y), {b});
        return mean(square(sub(q_sa, y_t)));
    }

    void ema_update_targets(Real tau) {
        std::vector<Tensor<Real>> o, t;
        online.params(o);
        target.params(t);
        ema_update(o, t, tau);
    }

    std::vector<Tensor<Real>> trainable_params() const {
        std::vector<Tensor<Real>> out;
        online.params(out);
        return out;
    }

    void named_params(std::vector<std::pair<std::string, Tensor<Real>>>& out) const {
        online.named_params("q_online", out);
        target.named_params("q_target", out);
    }
};

/// Simplified soft actor-critic: tanh-squashed diagonal Gaussian actor and
/// twin critics with EMA targets. The entropy weight is fixed.
template <class Real>
struct SacHead {
    Mlp<Real> actor;  // d_z -> [mean | log_std]
    Mlp<Real> critic1, critic2;
    Mlp<Real> target_critic1, target_critic2;
    Real gamma = Real(0.99);
    Real alpha = Real(0.1);
    std::int64_t d_a = 0;

    static constexpr Real kLogStdMin = Real(-10);
    static constexpr Real kLogStdMax = Real(2);
    static constexpr Real kSquashEps = Real(1e-6);

    SacHead() = default;

    SacHead(Rng& rng, std::int64_t d_z, std::int64_t d_a_,
            const std::vector<std::int64_t>& hidden)
        : d_a(d_a_) {
        actor = Mlp<Real>(rng, d_z, hidden, 2 * d_a);
        critic1 = Mlp<Real>(rng, d_z + d_a, hidden, 1);
        critic2 = Mlp<Real>(rng, d_z + d_a, hidden, 1);
        target_critic1 = critic1.clone_frozen();
        target_critic2 = critic2.clone_frozen();
    }

    std::vector<double> act(const Tensor<Real>& z, ActMode mode, Rng& rng) const {
        NoGradGuard ng;
        auto out = actor.forward(z);
        std::vector<double> a(static_cast<std::size_t>(d_a));
        for (std::int64_t i = 0; i < d_a; ++i) {
            const double mean_i = static_cast<double>(out.at(0, i));
            if (mode == ActMode::eval) {
                a[static_cast<std::size_t>(i)] = std::tanh(mean_i);
            } else {
                const double ls = std::clamp(static_cast<double>(out.at(0, d_a + i)),
                                             static_cast<double>(kLogStdMin),
                                             static_cast<double>(kLogStdMax));
                a[static_cast<std::size_t>(i)] = std::tanh(mean_i + std::exp(ls) * rng.normal());
            }
        }
        return a;
    }

    struct Losses {
        Tensor<Real> critic;
        Tensor<Real> actor;
    };

    /// Critic loss carries the encoder gradient; the actor loss sees a
    /// detached latent and detached critic parameters, so one joint
    /// backward pass routes gradients exactly as separate SAC updates
    /// would.
    Losses losses(const RepresentationStack<Real>& stack, const RlBatch& batch, Rng& rng) const {
        const auto b = static_cast<std::int64_t>(batch.obs.size());
        auto z = stack.encode(obs_tensor<Real>(batch.obs), Branch::online);
        auto a = action_batch(batch);

        std::vector<Real> y(static_cast<std::size_t>(b));
        {
            NoGradGuard ng;
            auto zn = stack.encode(obs_tensor<Real>(batch.next_obs), Branch::target);
            auto pol = sample_policy(zn, rng);
            auto q1 = target_critic1.forward(concat_cols(zn, pol.action));
            auto q2 = target_critic2.forward(concat_cols(zn, pol.action));
            for (std::int64_t i = 0; i < b; ++i) {
                const Real qmin = std::min(q1.at(i, 0), q2.at(i, 0));
                y[static_cast<std::size_t>(i)] =
                    static_cast<Real>(batch.reward_n[static_cast<std::size_t>(i)]) +
                    static_cast<Real>(batch.bootstrap[static_cast<std::size_t>(i)]) *
                        (qmin - alpha * pol.log_prob.at(i));
            }
        }
        auto y_t = Tensor<Real>::from(std::move(y), {b});
        auto za = concat_cols(z, a);
        auto c1 = slice_to_vec(critic1.forward(za));
        auto c2 = slice_to_vec(critic2.forward(za));
        auto critic_loss = add(mean(square(sub(c1, y_t))), mean(square(sub(c2, y_t))));

        auto zd = z.detach();
        auto pol = sample_policy(zd, rng);
        auto zda = concat_cols(zd, pol.action);
        auto q1 = slice_to_vec(critic1.forward(zda, /*detach_params=*/true));
        auto q2 = slice_to_vec(critic2.forward(zda, /*detach_params=*/true));
        auto actor_loss = mean(sub(scale(pol.log_prob, alpha), minimum(q1, q2)));
        return {critic_loss, actor_loss};
    }

    void ema_update_targets(Real tau) {
        std::vector<Tensor<Real>> o, t;
        critic1.params(o);
        critic2.params(o);
        target_critic1.params(t);
        target_critic2.params(t);
        ema_update(o, t, tau);
    }

    std::vector<Tensor<Real>> trainable_params() const {
        std::vector<Tensor<Real>> out;
        actor.params(out);
        critic1.params(out);
        critic2.params(out);
        return out;
    }

    void named_params(std::vector<std::pair<std::string, Tensor<Real>>>& out) const {
        actor.named_params("actor", out);
        critic1.named_params("critic1", out);
        critic2.named_params("critic2", out);
        target_critic1.named_params("target_critic1", out);
        target_critic2.named_params("target_critic2", out);
    }

    struct PolicySample {
        Tensor<Real> action;    // [b x d_a], tanh-squashed
        Tensor<Real> log_prob;  // [b]
    };

    /// Reparameterized draw with the change-of-variables log-density of
    /// the squashed Gaussian.
    PolicySample sample_policy(const Tensor<Real>& z, Rng& rng) const {
        const auto b = z.shape()[0];
        auto out = actor.forward(z);
        auto mu = slice_cols(out, 0, d_a);
        auto log_std = clamp(slice_cols(out, d_a, 2 * d_a), kLogStdMin, kLogStdMax);
        auto xi = Tensor<Real>::randn(rng, {b, d_a});
        auto u = add(mu, mul(exp(log_std), xi));
        auto action = tanh(u);

        // log N(u; mu, sigma) summed over dims, then the tanh correction.
        auto ratio = mul(sub(u, mu), exp(negate(log_std)));
        const Real log_sqrt_2pi = Real(0.5 * std::log(2.0 * 3.141592653589793238462643383279502884));
        auto gauss = row_sum(add_const(
            add(scale(square(ratio), Real(-0.5)), negate(log_std)), -log_sqrt_2pi));
        auto correction =
            row_sum(log(add_const(negate(square(action)), Real(1) + kSquashEps)));
        auto log_prob = sub(gauss, correction);
        return {action, log_prob};
    }

private:
    Tensor<Real> action_batch(const RlBatch& batch) const {
        std::vector<Real> flat;
        flat.reserve(batch.action_c.size() * static_cast<std::size_t>(d_a));
        for (const auto& a : batch.action_c) {
            if (static_cast<std::int64_t>(a.size()) != d_a) {
                throw ContractError("sac batch action width mismatch");
            }
            for (auto v : a) flat.push_back(static_cast<Real>(v));
        }
        return Tensor<Real>::from(std::move(flat),
                                  {static_cast<std::int64_t>(batch.action_c.size()), d_a});
    }

    static Tensor<Real> slice_to_vec(const Tensor<Real>& col) {
        return row_sum(col);  // [b x 1] -> [b]
    }
};

}  // namespace vlrl
