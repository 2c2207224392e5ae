#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vlrl/agents.hpp"
#include "vlrl/nets.hpp"
#include "vlrl/replay.hpp"

namespace vlrl {

struct ActionSpace {
    bool discrete = true;
    std::int64_t n = 0;  // discrete action count
    std::int64_t d = 0;  // continuous action dims

    static ActionSpace make_discrete(std::int64_t n) {
        if (n < 1) throw ConfigError("discrete action space needs n >= 1");
        ActionSpace s;
        s.discrete = true;
        s.n = n;
        return s;
    }
    static ActionSpace make_continuous(std::int64_t d) {
        if (d < 1) throw ConfigError("continuous action space needs d >= 1");
        ActionSpace s;
        s.discrete = false;
        s.d = d;
        return s;
    }
    std::int64_t encoded_dim() const { return discrete ? n : d; }
};

enum class CycleMetric { projection, latent };

struct AuxConfig {
    std::int64_t k = 9;
    std::int64_t m = 10;
    double lambda_pred = 1.0;
    double lambda_cyc = 1.0;
    CycleMetric metric = CycleMetric::projection;
    bool nd_mode = false;

    bool pred_active() const { return k > 0 && lambda_pred > 0; }
    bool cyc_active() const { return k > 0 && lambda_cyc > 0; }
    bool active() const { return pred_active() || cyc_active(); }
};

/// Horizon and trajectory-count defaults differ by action space kind.
inline AuxConfig default_aux(const ActionSpace& space) {
    AuxConfig cfg;
    if (space.discrete) {
        cfg.k = 9;
        cfg.m = 2 * space.n;
    } else {
        cfg.k = 6;
        cfg.m = 10;
    }
    return cfg;
}

/// M imagined action sequences of length K for one state.
struct VirtualActionSet {
    std::vector<std::vector<std::int64_t>> discrete;            // [M][K]
    std::vector<std::vector<std::vector<double>>> continuous;   // [M][K][d_a]
    std::uint64_t seed = 0;

    std::int64_t m() const {
        return static_cast<std::int64_t>(discrete.empty() ? continuous.size()
                                                          : discrete.size());
    }
    std::int64_t k() const {
        if (!discrete.empty()) return static_cast<std::int64_t>(discrete.front().size());
        if (!continuous.empty()) return static_cast<std::int64_t>(continuous.front().size());
        return 0;
    }
};

inline VirtualActionSet sample_virtual_actions(const ActionSpace& space, std::int64_t m,
                                               std::int64_t k, Rng& rng) {
    if (m < 1) throw ContractError("virtual action set needs m >= 1");
    if (k < 1) throw ContractError("virtual action set needs k >= 1");
    VirtualActionSet out;
    if (space.discrete) {
        out.discrete.resize(static_cast<std::size_t>(m));
        for (auto& seq : out.discrete) {
            seq.resize(static_cast<std::size_t>(k));
            for (auto& a : seq) a = rng.randint(space.n);
        }
    } else {
        out.continuous.resize(static_cast<std::size_t>(m));
        for (auto& seq : out.continuous) {
            seq.resize(static_cast<std::size_t>(k));
            for (auto& a : seq) {
                a.resize(static_cast<std::size_t>(space.d));
                for (auto& c : a) c = rng.uniform(-1.0, 1.0);
            }
        }
    }
    return out;
}

/// Iterated forward dynamics from z_t under the given encoded actions.
/// Returns the K successor latents; the chain stays on the tape.
template <class Real>
std::vector<Tensor<Real>> forward_unroll(const RepresentationStack<Real>& stack,
                                         const Tensor<Real>& z_t,
                                         const std::vector<Tensor<Real>>& actions,
                                         bool detach_dm = false) {
    std::vector<Tensor<Real>> out;
    out.reserve(actions.size());
    Tensor<Real> z = z_t;
    for (const auto& a : actions) {
        z = stack.dm_step(z, a, detach_dm);
        out.push_back(z);
    }
    return out;
}

/// Iterated backward dynamics from the final forward latent, consuming the
/// forward action sequence in reverse. Returns the reconstructed z'_t.
template <class Real>
Tensor<Real> backward_unroll(const RepresentationStack<Real>& stack, const Tensor<Real>& z_last,
                             const std::vector<Tensor<Real>>& actions) {
    Tensor<Real> z = z_last;
    for (auto it = actions.rbegin(); it != actions.rend(); ++it) {
        z = stack.bdm_step(z, *it);
    }
    return z;
}

/// One sampled segment as training tensors: K+1 observation batches and the
/// K real action batches between them.
template <class Real>
struct SegmentTensors {
    std::vector<Tensor<Real>> obs;      // K+1 of [B x d_obs]
    std::vector<Tensor<Real>> actions;  // K of [B x enc]
};

template <class Real>
SegmentTensors<Real> gather_segment(const ReplayBuffer& buf, const SegmentBatch& seg,
                                    const ActionSpace& space) {
    SegmentTensors<Real> out;
    const auto b = static_cast<std::int64_t>(seg.starts.size());
    if (b == 0) throw ContractError("empty segment batch");
    for (std::int64_t i = 0; i <= seg.k; ++i) {
        std::vector<std::vector<double>> rows;
        rows.reserve(static_cast<std::size_t>(b));
        for (auto g : seg.starts) rows.push_back(buf.at_global(g + i).obs);
        out.obs.push_back(obs_tensor<Real>(rows));
    }
    for (std::int64_t i = 0; i < seg.k; ++i) {
        if (space.discrete) {
            std::vector<std::int64_t> acts;
            acts.reserve(static_cast<std::size_t>(b));
            for (auto g : seg.starts) acts.push_back(buf.at_global(g + i).action_d);
            out.actions.push_back(one_hot_rows<Real>(acts, space.n));
        } else {
            std::vector<std::vector<double>> acts;
            acts.reserve(static_cast<std::size_t>(b));
            for (auto g : seg.starts) acts.push_back(buf.at_global(g + i).action_c);
            out.actions.push_back(action_rows<Real>(acts));
        }
    }
    return out;
}

/// Latent prediction loss: unroll the forward model over the real actions
/// and compare each step against the target encoding of the observed
/// future, in projection space. Mean over the batch, sum over steps.
template <class Real>
Tensor<Real> prediction_loss(const RepresentationStack<Real>& stack,
                             const SegmentTensors<Real>& seg, const Tensor<Real>& z_t) {
    if (seg.obs.size() != seg.actions.size() + 1) {
        throw ContractError("segment needs K+1 observations for K actions");
    }
    const auto k = static_cast<std::int64_t>(seg.actions.size());
    auto rollout = forward_unroll(stack, z_t, seg.actions);
    Tensor<Real> total = Tensor<Real>::scalar(Real(0));
    for (std::int64_t i = 0; i < k; ++i) {
        auto z_ref = stack.encode(seg.obs[static_cast<std::size_t>(i + 1)], Branch::target);
        auto d = stack.distance_projection(rollout[static_cast<std::size_t>(i)], z_ref);
        total = add(total, mean(d));
    }
    return total;
}

template <class Real>
Tensor<Real> prediction_loss(const RepresentationStack<Real>& stack,
                             const SegmentTensors<Real>& seg) {
    return prediction_loss(stack, seg, stack.encode(seg.obs.front(), Branch::online));
}

/// Mirror image of prediction_loss for training the backward model on real
/// data alone: seed at the online encoding of the segment's last
/// observation, walk the real actions back, and score each reconstruction
/// against the target encoding of the earlier observation.
template <class Real>
Tensor<Real> backward_prediction_loss(const RepresentationStack<Real>& stack,
                                      const SegmentTensors<Real>& seg) {
    if (seg.obs.size() != seg.actions.size() + 1) {
        throw ContractError("segment needs K+1 observations for K actions");
    }
    const auto k = static_cast<std::int64_t>(seg.actions.size());
    if (k < 1) throw ContractError("backward prediction needs k >= 1");
    auto z = stack.encode(seg.obs.back(), Branch::online);
    Tensor<Real> total = Tensor<Real>::scalar(Real(0));
    for (std::int64_t i = k - 1; i >= 0; --i) {
        z = stack.bdm_step(z, seg.actions[static_cast<std::size_t>(i)]);
        auto z_ref = stack.encode(seg.obs[static_cast<std::size_t>(i)], Branch::target);
        total = add(total, mean(stack.distance_projection(z, z_ref)));
    }
    return total;
}

/// Encode one virtual step's actions across the batch: row b takes sequence
/// m, step k from batch element b's own action set.
template <class Real>
std::vector<std::vector<Tensor<Real>>> virtual_action_tensors(
    const std::vector<VirtualActionSet>& sets, const ActionSpace& space) {
    if (sets.empty()) throw ContractError("no virtual action sets");
    const auto m = sets.front().m();
    const auto k = sets.front().k();
    for (const auto& s : sets) {
        if (s.m() != m || s.k() != k) {
            throw ContractError("virtual action sets disagree on M or K");
        }
    }
    std::vector<std::vector<Tensor<Real>>> out(static_cast<std::size_t>(m));
    for (std::int64_t mi = 0; mi < m; ++mi) {
        for (std::int64_t ki = 0; ki < k; ++ki) {
            if (space.discrete) {
                std::vector<std::int64_t> acts;
                acts.reserve(sets.size());
                for (const auto& s : sets) {
                    acts.push_back(s.discrete[static_cast<std::size_t>(mi)]
                                             [static_cast<std::size_t>(ki)]);
                }
                out[static_cast<std::size_t>(mi)].push_back(one_hot_rows<Real>(acts, space.n));
            } else {
                std::vector<std::vector<double>> acts;
                acts.reserve(sets.size());
                for (const auto& s : sets) {
                    acts.push_back(s.continuous[static_cast<std::size_t>(mi)]
                                               [static_cast<std::size_t>(ki)]);
                }
                out[static_cast<std::size_t>(mi)].push_back(action_rows<Real>(acts));
            }
        }
    }
    return out;
}

/// Cycle consistency: imagine K steps forward under each virtual action
/// sequence, walk back with the backward model, and penalize the distance
/// between the reconstruction and the starting latent. Touches no
/// observation other than the one behind z_t. In nd mode the forward
/// model's parameters are cut out of this loss's gradient; its inputs, the
/// encoder, and the backward model still receive gradient.
///
/// The M trajectories run as one stacked batch of M*B rows (block m holds
/// sequence m, matching tile_rows' block order) so the dynamics nets see M
/// large calls instead of M*K small ones. Every block has the same B rows,
/// so the mean over the stacked rows equals the average of per-sequence
/// batch means. Virtual actions are sampled constants; the stacking copies
/// their values, so tensors carrying gradient are rejected.
template <class Real>
Tensor<Real> cycle_loss(const RepresentationStack<Real>& stack, const Tensor<Real>& z_t,
                        const std::vector<std::vector<Tensor<Real>>>& action_tensors,
                        const AuxConfig& cfg) {
    if (action_tensors.empty()) throw ContractError("cycle loss needs at least one sequence");
    const auto m = static_cast<std::int64_t>(action_tensors.size());
    const auto k = static_cast<std::int64_t>(action_tensors.front().size());
    if (k < 1) throw ContractError("cycle loss needs k >= 1");
    if (z_t.rank() != 2) throw DimError("cycle loss expects a rank-2 latent batch");
    const auto b = z_t.shape()[0];
    const auto enc = action_tensors.front().front().shape()[1];
    for (const auto& seq : action_tensors) {
        if (static_cast<std::int64_t>(seq.size()) != k) {
            throw ContractError("cycle loss: sequences disagree on K");
        }
        for (const auto& a : seq) {
            if (a.rank() != 2 || a.shape()[0] != b || a.shape()[1] != enc) {
                throw DimError("cycle loss: action tensor shape mismatch");
            }
            if (a.requires_grad()) {
                throw ContractError("cycle loss treats virtual actions as constants");
            }
        }
    }
    std::vector<Tensor<Real>> stacked;
    stacked.reserve(static_cast<std::size_t>(k));
    for (std::int64_t ki = 0; ki < k; ++ki) {
        std::vector<Real> buf(static_cast<std::size_t>(m * b * enc));
        for (std::int64_t mi = 0; mi < m; ++mi) {
            auto src = action_tensors[static_cast<std::size_t>(mi)][static_cast<std::size_t>(ki)]
                           .data();
            std::copy(src.begin(), src.end(), buf.begin() + mi * b * enc);
        }
        stacked.push_back(Tensor<Real>::from(std::move(buf), {m * b, enc}));
    }
    auto zs = tile_rows(z_t, m);
    auto rollout = forward_unroll(stack, zs, stacked, cfg.nd_mode);
    auto back = backward_unroll(stack, rollout.back(), stacked);
    auto d = cfg.metric == CycleMetric::projection ? stack.distance_projection(back, zs)
                                                   : stack.distance_latent(back, zs);
    return mean(d);
}

/// Final objective assembly; the breakdown records detached values.
template <class Real>
std::pair<Tensor<Real>, LossBreakdown> total_loss(const Tensor<Real>& l_rl,
                                                  const Tensor<Real>& l_pred,
                                                  const Tensor<Real>& l_cyc,
                                                  const AuxConfig& cfg, std::int64_t step) {
    auto total = add(l_rl, add(scale(l_pred, static_cast<Real>(cfg.lambda_pred)),
                               scale(l_cyc, static_cast<Real>(cfg.lambda_cyc))));
    LossBreakdown lb;
    lb.rl = static_cast<double>(l_rl.item());
    lb.pred = static_cast<double>(l_pred.item());
    lb.cyc = static_cast<double>(l_cyc.item());
    lb.total = static_cast<double>(total.item());
    lb.step = step;
    return {total, lb};
}

}  // namespace vlrl
