#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vlrl/tensor.hpp"

namespace vlrl {

namespace detail {

inline std::string dims_suffix(const Shape& s) {
    std::string r;
    for (std::size_t i = 0; i < s.size(); ++i) {
        r += (i ? "x" : ".") + std::to_string(s[i]);
    }
    return r;
}

}  // namespace detail

/// Affine layer, weights [in x out]. Initialization follows the usual
/// uniform fan-in rule.
template <class Real>
struct Linear {
    Tensor<Real> w;
    Tensor<Real> b;

    Linear() = default;

    Linear(Rng& rng, std::int64_t in, std::int64_t out, bool trainable = true) {
        const Real bound = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(in)));
        w = Tensor<Real>::uniform(rng, {in, out}, -bound, bound, trainable);
        b = Tensor<Real>::uniform(rng, {out}, -bound, bound, trainable);
    }

    std::int64_t in_dim() const { return w.shape()[0]; }
    std::int64_t out_dim() const { return w.shape()[1]; }

    /// detach_params computes the same values but routes no gradient into
    /// w and b; gradients still flow through x.
    Tensor<Real> forward(const Tensor<Real>& x, bool detach_params = false) const {
        if (x.rank() != 2 || x.shape()[1] != in_dim()) {
            throw DimError("linear layer expects [n x " + std::to_string(in_dim()) +
                           "], got " + shape_str(x.shape()));
        }
        if (detach_params) {
            return add_row_bias(matmul(x, w.detach()), b.detach());
        }
        return add_row_bias(matmul(x, w), b);
    }

    Linear clone_frozen() const {
        Linear c;
        c.w = w.detach();
        c.b = b.detach();
        return c;
    }

    void params(std::vector<Tensor<Real>>& out) const {
        out.push_back(w);
        out.push_back(b);
    }

    void named_params(const std::string& prefix,
                      std::vector<std::pair<std::string, Tensor<Real>>>& out) const {
        out.emplace_back(prefix + ".w" + detail::dims_suffix(w.shape()), w);
        out.emplace_back(prefix + ".b" + detail::dims_suffix(b.shape()), b);
    }
};

/// Relu perceptron with a linear output layer. An empty hidden list gives a
/// single affine map, which the tests use to force exact linear dynamics.
template <class Real>
struct Mlp {
    std::vector<Linear<Real>> layers;

    Mlp() = default;

    Mlp(Rng& rng, std::int64_t in, const std::vector<std::int64_t>& hidden, std::int64_t out,
        bool trainable = true) {
        std::int64_t prev = in;
        for (auto h : hidden) {
            layers.emplace_back(rng, prev, h, trainable);
            prev = h;
        }
        layers.emplace_back(rng, prev, out, trainable);
    }

    std::int64_t in_dim() const { return layers.front().in_dim(); }
    std::int64_t out_dim() const { return layers.back().out_dim(); }

    Tensor<Real> forward(const Tensor<Real>& x, bool detach_params = false) const {
        auto h = x;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            h = layers[i].forward(h, detach_params);
            if (i + 1 < layers.size()) h = relu(h);
        }
        return h;
    }

    Mlp clone_frozen() const {
        Mlp c;
        for (const auto& l : layers) c.layers.push_back(l.clone_frozen());
        return c;
    }

    void params(std::vector<Tensor<Real>>& out) const {
        for (const auto& l : layers) l.params(out);
    }

    void named_params(const std::string& prefix,
                      std::vector<std::pair<std::string, Tensor<Real>>>& out) const {
        for (std::size_t i = 0; i < layers.size(); ++i) {
            out.emplace_back(prefix + ".l" + std::to_string(i) + ".w" +
                                 detail::dims_suffix(layers[i].w.shape()),
                             layers[i].w);
            out.emplace_back(prefix + ".l" + std::to_string(i) + ".b" +
                                 detail::dims_suffix(layers[i].b.shape()),
                             layers[i].b);
        }
    }
};

/// θ_target ← τ·θ_target + (1−τ)·θ_online, elementwise over aligned lists.
template <class Real>
void ema_update(const std::vector<Tensor<Real>>& online, std::vector<Tensor<Real>>& target,
                std::type_identity_t<Real> tau) {
    if (tau < Real(0) || tau > Real(1)) {
        throw ContractError("ema_update: tau must lie in [0,1]");
    }
    if (online.size() != target.size()) {
        throw ContractError("ema_update: parameter lists differ in length, " +
                            std::to_string(online.size()) + " vs " +
                            std::to_string(target.size()));
    }
    for (std::size_t i = 0; i < online.size(); ++i) {
        if (online[i].shape() != target[i].shape()) {
            throw ContractError("ema_update: parameter " + std::to_string(i) +
                                " shape mismatch " + shape_str(online[i].shape()) + " vs " +
                                shape_str(target[i].shape()));
        }
        auto t = target[i].mutable_data();
        const auto o = online[i].data();
        for (std::size_t j = 0; j < t.size(); ++j) {
            t[j] = tau * t[j] + (Real(1) - tau) * o[j];
        }
    }
}

/// One-hot action rows for a discrete action set.
template <class Real>
Tensor<Real> one_hot_rows(const std::vector<std::int64_t>& actions, std::int64_t n) {
    std::vector<Real> data(actions.size() * static_cast<std::size_t>(n), Real(0));
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i] < 0 || actions[i] >= n) {
            throw ContractError("one_hot_rows: action " + std::to_string(actions[i]) +
                                " outside [0, " + std::to_string(n) + ")");
        }
        data[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(actions[i])] = Real(1);
    }
    return Tensor<Real>::from(std::move(data),
                              {static_cast<std::int64_t>(actions.size()), n});
}

/// Continuous action rows; entries must already lie in [-1, 1].
/// Source rows may be a wider float type than the tensor being built.
template <class Real, class Src = Real>
Tensor<Real> action_rows(const std::vector<std::vector<Src>>& actions) {
    std::vector<std::vector<Real>> rows;
    rows.reserve(actions.size());
    for (const auto& a : actions) {
        std::vector<Real> row;
        row.reserve(a.size());
        for (auto v : a) {
            if (v < Src(-1) || v > Src(1)) {
                throw ContractError("continuous action component outside [-1, 1]");
            }
            row.push_back(static_cast<Real>(v));
        }
        rows.push_back(std::move(row));
    }
    return Tensor<Real>::from_rows(rows);
}

enum class Branch { online, target };

struct NetSizes {
    std::int64_t d_obs = 0;
    std::int64_t d_a = 0;
    std::int64_t d_z = 32;
    std::int64_t d_p = 16;
    std::vector<std::int64_t> encoder_hidden{64, 64};
};

/// Encoder, projection metric space, and the forward/backward dynamics
/// models, with the momentum target branch over encoder and projector.
template <class Real>
struct RepresentationStack {
    NetSizes sizes;
    Mlp<Real> encoder;
    Linear<Real> projector;   // g
    Linear<Real> predictor;   // q, online branch only
    Mlp<Real> dm;             // h, residual on z
    Mlp<Real> bdm;            // b, same architecture as h
    Mlp<Real> target_encoder;
    Linear<Real> target_projector;

    RepresentationStack() = default;

    RepresentationStack(Rng& rng, NetSizes s) : sizes(std::move(s)) {
        const auto dz = sizes.d_z;
        encoder = Mlp<Real>(rng, sizes.d_obs, sizes.encoder_hidden, dz);
        projector = Linear<Real>(rng, dz, sizes.d_p);
        predictor = Linear<Real>(rng, sizes.d_p, sizes.d_p);
        const std::vector<std::int64_t> dyn_hidden{2 * dz};
        dm = Mlp<Real>(rng, dz + sizes.d_a, dyn_hidden, dz);
        bdm = Mlp<Real>(rng, dz + sizes.d_a, dyn_hidden, dz);
        target_encoder = encoder.clone_frozen();
        target_projector = projector.clone_frozen();
    }

    Tensor<Real> encode(const Tensor<Real>& obs, Branch branch) const {
        if (obs.rank() != 2 || obs.shape()[1] != sizes.d_obs) {
            throw DimError("encode expects [n x " + std::to_string(sizes.d_obs) + "], got " +
                           shape_str(obs.shape()));
        }
        ++Diagnostics::encoder_forward_count();
        if (branch == Branch::target) {
            NoGradGuard ng;
            return target_encoder.forward(obs);
        }
        return encoder.forward(obs);
    }

    /// One forward dynamics transition: h(z, a) = z + net(z, a).
    Tensor<Real> dm_step(const Tensor<Real>& z, const Tensor<Real>& a,
                         bool detach_params = false) const {
        return add(z, dm.forward(concat_latent_action(z, a), detach_params));
    }

    /// One backward dynamics transition: b(z, a) = z + net(z, a).
    Tensor<Real> bdm_step(const Tensor<Real>& z, const Tensor<Real>& a,
                          bool detach_params = false) const {
        return add(z, bdm.forward(concat_latent_action(z, a), detach_params));
    }

    /// q(g(z)) on the online branch.
    Tensor<Real> project_predict(const Tensor<Real>& z) const {
        return predictor.forward(projector.forward(z));
    }

    /// g̃(z) with the whole target path stop-gradient.
    Tensor<Real> project_target(const Tensor<Real>& z) const {
        NoGradGuard ng;
        return target_projector.forward(z);
    }

    /// Row-wise 2 − 2·cos between q(g(z_pred)) and g̃(z_ref); gradient flows
    /// only through the z_pred path.
    Tensor<Real> distance_projection(const Tensor<Real>& z_pred, const Tensor<Real>& z_ref) const {
        auto p = project_predict(z_pred);
        auto t = project_target(z_ref);
        return add_const(scale(cosine_rows(p, t), Real(-2)), Real(2));
    }

    /// Row-wise 2 − 2·cos directly on latents; z_ref side stop-gradient.
    Tensor<Real> distance_latent(const Tensor<Real>& z_pred, const Tensor<Real>& z_ref) const {
        return add_const(scale(cosine_rows(z_pred, z_ref.detach()), Real(-2)), Real(2));
    }

    void ema_update_targets(Real tau) {
        std::vector<Tensor<Real>> online, target;
        encoder.params(online);
        projector.params(online);
        target_encoder.params(target);
        target_projector.params(target);
        ema_update(online, target, tau);
    }

    std::vector<Tensor<Real>> trainable_params() const {
        std::vector<Tensor<Real>> out;
        encoder.params(out);
        projector.params(out);
        predictor.params(out);
        dm.params(out);
        bdm.params(out);
        return out;
    }

    void named_params(std::vector<std::pair<std::string, Tensor<Real>>>& out) const {
        encoder.named_params("encoder", out);
        projector.named_params("projector", out);
        predictor.named_params("predictor", out);
        dm.named_params("dm", out);
        bdm.named_params("bdm", out);
        target_encoder.named_params("target_encoder", out);
        target_projector.named_params("target_projector", out);
    }

private:
    Tensor<Real> concat_latent_action(const Tensor<Real>& z, const Tensor<Real>& a) const {
        if (z.rank() != 2 || z.shape()[1] != sizes.d_z) {
            throw DimError("dynamics expects z of [n x " + std::to_string(sizes.d_z) +
                           "], got " + shape_str(z.shape()));
        }
        if (a.rank() != 2 || a.shape()[1] != sizes.d_a) {
            throw DimError("dynamics expects action rows of [n x " + std::to_string(sizes.d_a) +
                           "], got " + shape_str(a.shape()));
        }
        return concat_cols(z, a);
    }
};

}  // namespace vlrl
