#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vlrl/agents.hpp"
#include "vlrl/grad_check.hpp"
#include "vlrl/nets.hpp"
#include "vlrl/tensor.hpp"
#include "vlrl/virtual_loop.hpp"

namespace vlrl {

/// One row of the finite-difference verification table: an op or composite
/// loss, checked over a number of random instances.
struct SuiteEntry {
    std::string name;
    int instances = 0;
    double max_rel_err = 0.0;
    std::int64_t excluded = 0;  // kink coordinates skipped by the checker
    bool pass = false;
    double seconds = 0.0;
};

namespace detail_suite {

using D = Tensor<double>;
using Fn = std::function<D(const D&)>;

/// Run one grad_check and fold its result into the entry.
inline void fold(SuiteEntry& e, const Fn& f, const D& x, double tol) {
    auto rep = grad_check<double>(f, x, tol);
    if (rep.max_rel_err > e.max_rel_err) e.max_rel_err = rep.max_rel_err;
    e.excluded += static_cast<std::int64_t>(rep.excluded.size());
}

inline D randu_shifted(Rng& rng, const Shape& s, double lo, double hi) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    std::vector<double> data(static_cast<std::size_t>(n));
    for (auto& v : data) v = rng.uniform(lo, hi);
    return D::from(std::move(data), s);
}

}  // namespace detail_suite

/// Finite-difference verification of every differentiable tensor op plus the
/// composite losses (Q-learning, soft actor-critic, latent prediction, cycle
/// consistency), each over `instances` random draws in 64-bit precision.
inline std::vector<SuiteEntry> run_gradcheck_suite(int instances = 100, double tol = 1e-4,
                                                   std::uint64_t seed = 0) {
    using detail_suite::fold;
    using detail_suite::randu_shifted;
    using D = Tensor<double>;
    using Fn = detail_suite::Fn;

    std::vector<SuiteEntry> out;
    Rng rng(derive_seed(seed, "gradcheck"));

    auto run = [&](const std::string& name,
                   const std::function<void(SuiteEntry&, Rng&)>& one_instance) {
        SuiteEntry e;
        e.name = name;
        e.instances = instances;
        const auto t0 = std::chrono::steady_clock::now();
        for (int i = 0; i < instances; ++i) one_instance(e, rng);
        e.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        e.pass = e.max_rel_err <= tol;
        out.push_back(e);
    };

    const Shape mat{3, 4};

    // --- elementwise and structural ops ---
    run("matmul", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, {3, 4});
        auto b = D::randn(r, {4, 2});
        fold(e, [&](const D& x) { return sum(matmul(x, b)); }, a, tol);
        fold(e, [&](const D& x) { return sum(matmul(a, x)); }, b, tol);
    });
    run("add", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, mat);
        auto b = D::randn(r, mat);
        fold(e, [&](const D& x) { return sum(mul(add(x, b), b)); }, a, tol);
        fold(e, [&](const D& x) { return sum(mul(add(a, x), a)); }, b, tol);
    });
    run("sub", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, mat);
        auto b = D::randn(r, mat);
        fold(e, [&](const D& x) { return sum(square(sub(x, b))); }, a, tol);
        fold(e, [&](const D& x) { return sum(square(sub(a, x))); }, b, tol);
    });
    run("mul", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, mat);
        auto b = D::randn(r, mat);
        fold(e, [&](const D& x) { return sum(mul(x, b)); }, a, tol);
        fold(e, [&](const D& x) { return sum(mul(a, x)); }, b, tol);
    });
    run("negate", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(mul(negate(x), x)); }, D::randn(r, mat), tol);
    });
    run("scale", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(square(scale(x, -1.7))); }, D::randn(r, mat),
             tol);
    });
    run("add_const", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(square(add_const(x, 0.4))); }, D::randn(r, mat),
             tol);
    });
    run("relu", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(relu(x)); }, D::randn(r, mat), tol);
    });
    run("tanh", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(tanh(x)); }, D::randn(r, mat), tol);
    });
    run("exp", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(exp(x)); }, D::randn(r, mat), tol);
    });
    run("log", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(log(x)); }, randu_shifted(r, mat, 0.2, 2.2),
             tol);
    });
    run("clamp", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(square(clamp(x, -0.5, 0.5))); },
             D::randn(r, mat), tol);
    });
    run("square", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(square(x)); }, D::randn(r, mat), tol);
    });
    run("minimum", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, mat);
        auto b = D::randn(r, mat);
        fold(e, [&](const D& x) { return sum(minimum(x, b)); }, a, tol);
        fold(e, [&](const D& x) { return sum(minimum(a, x)); }, b, tol);
    });
    run("add_row_bias", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, mat);
        auto b = D::randn(r, {4});
        fold(e, [&](const D& x) { return sum(square(add_row_bias(x, b))); }, a, tol);
        fold(e, [&](const D& x) { return sum(square(add_row_bias(a, x))); }, b, tol);
    });
    run("concat_cols", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, {3, 2});
        auto b = D::randn(r, {3, 3});
        fold(e, [&](const D& x) { return sum(square(concat_cols(x, b))); }, a, tol);
        fold(e, [&](const D& x) { return sum(square(concat_cols(a, x))); }, b, tol);
    });
    run("slice_cols", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(square(slice_cols(x, 1, 3))); },
             D::randn(r, mat), tol);
    });
    run("row_select", [&](SuiteEntry& e, Rng& r) {
        std::vector<std::int64_t> idx{2, 0, 3};
        fold(e, [&](const D& x) { return sum(square(row_select(x, idx))); },
             D::randn(r, mat), tol);
    });
    run("tile_rows", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(square(tile_rows(x, 3))); }, D::randn(r, {1, 4}),
             tol);
    });
    run("sum", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(mul(x, x)); }, D::randn(r, mat), tol);
    });
    run("mean", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return mean(square(x)); }, D::randn(r, mat), tol);
    });
    run("row_sum", [&](SuiteEntry& e, Rng& r) {
        fold(e, [](const D& x) { return sum(square(row_sum(x))); }, D::randn(r, mat), tol);
    });
    run("cosine_similarity", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, {5});
        auto b = D::randn(r, {5});
        fold(e, [&](const D& x) { return cosine_similarity(x, b); }, a, tol);
        fold(e, [&](const D& x) { return cosine_similarity(a, x); }, b, tol);
    });
    run("cosine_rows", [&](SuiteEntry& e, Rng& r) {
        auto a = D::randn(r, {3, 5});
        auto b = D::randn(r, {3, 5});
        fold(e, [&](const D& x) { return sum(cosine_rows(x, b)); }, a, tol);
        fold(e, [&](const D& x) { return sum(cosine_rows(a, x)); }, b, tol);
    });

    // --- composite losses, checked against selected parameter tensors ---
    NetSizes sizes;
    sizes.d_obs = 6;
    sizes.d_a = 3;
    sizes.d_z = 4;
    sizes.d_p = 3;
    sizes.encoder_hidden = {8};
    const auto space_d = ActionSpace::make_discrete(3);
    const auto space_c = ActionSpace::make_continuous(2);

    auto make_rl_batch = [&](Rng& r, bool discrete) {
        RlBatch b;
        for (int i = 0; i < 4; ++i) {
            std::vector<double> o(6), no(6);
            for (auto& v : o) v = r.normal();
            for (auto& v : no) v = r.normal();
            b.obs.push_back(o);
            b.next_obs.push_back(no);
            if (discrete) {
                b.action_d.push_back(r.randint(3));
            } else {
                b.action_c.push_back({r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0)});
            }
            b.reward_n.push_back(r.normal());
            b.bootstrap.push_back(i % 2 == 0 ? 1.0 : 0.0);
        }
        return b;
    };

    auto make_segment = [&](Rng& r, int k, bool discrete) {
        SegmentTensors<double> seg;
        for (int i = 0; i <= k; ++i) seg.obs.push_back(D::randn(r, {4, 6}));
        for (int i = 0; i < k; ++i) {
            if (discrete) {
                std::vector<std::int64_t> acts;
                for (int bi = 0; bi < 4; ++bi) acts.push_back(r.randint(3));
                seg.actions.push_back(one_hot_rows<double>(acts, 3));
            } else {
                seg.actions.push_back(randu_shifted(r, {4, 2}, -1.0, 1.0));
            }
        }
        return seg;
    };

    // Rotates the checked tensor through a list of (injector) slots so all
    // parts of each loss graph get covered across the instance budget.
    run("q_loss", [&](SuiteEntry& e, Rng& r) {
        const std::uint64_t net_seed = r.next_u64();
        auto batch = make_rl_batch(r, true);
        auto rebuild = [&] {
            Rng nr(net_seed);
            auto stack = RepresentationStack<double>(nr, sizes);
            auto head = QHead<double>(nr, 4, 3, {5});
            return std::pair{std::move(stack), std::move(head)};
        };
        auto check_slot = [&](auto&& inject, const D& init) {
            Fn f = [&](const D& x) {
                auto [stack, head] = rebuild();
                inject(stack, head, x);
                return head.loss(stack, batch);
            };
            fold(e, f, init, tol);
        };
        auto [s0, h0] = rebuild();
        switch (static_cast<int>(r.randint(3))) {
            case 0:
                check_slot([](auto& st, auto&, const D& x) { st.encoder.layers[0].w = x; },
                           s0.encoder.layers[0].w);
                break;
            case 1:
                check_slot([](auto&, auto& h, const D& x) { h.online.layers[0].w = x; },
                           h0.online.layers[0].w);
                break;
            default:
                check_slot([](auto&, auto& h, const D& x) { h.online.layers[1].b = x; },
                           h0.online.layers[1].b);
                break;
        }
    });

    run("sac_losses", [&](SuiteEntry& e, Rng& r) {
        const std::uint64_t net_seed = r.next_u64();
        const std::uint64_t noise_seed = r.next_u64();
        auto batch = make_rl_batch(r, false);
        auto rebuild = [&] {
            Rng nr(net_seed);
            auto stack = RepresentationStack<double>(nr, NetSizes{6, 2, 4, 3, {8}});
            auto head = SacHead<double>(nr, 4, 2, {5});
            return std::pair{std::move(stack), std::move(head)};
        };
        auto check_slot = [&](auto&& inject, const D& init, bool actor) {
            Fn f = [&](const D& x) {
                auto [stack, head] = rebuild();
                inject(stack, head, x);
                Rng noise(noise_seed);
                auto losses = head.losses(stack, batch, noise);
                return actor ? losses.actor : losses.critic;
            };
            fold(e, f, init, tol);
        };
        auto [s0, h0] = rebuild();
        switch (static_cast<int>(r.randint(4))) {
            case 0:
                check_slot([](auto&, auto& h, const D& x) { h.critic1.layers[0].w = x; },
                           h0.critic1.layers[0].w, false);
                break;
            case 1:
                check_slot([](auto& st, auto&, const D& x) { st.encoder.layers[0].w = x; },
                           s0.encoder.layers[0].w, false);
                break;
            case 2:
                check_slot([](auto&, auto& h, const D& x) { h.actor.layers[0].w = x; },
                           h0.actor.layers[0].w, true);
                break;
            default:
                check_slot([](auto&, auto& h, const D& x) { h.actor.layers[1].b = x; },
                           h0.actor.layers[1].b, true);
                break;
        }
    });

    run("prediction_loss", [&](SuiteEntry& e, Rng& r) {
        const std::uint64_t net_seed = r.next_u64();
        auto seg = make_segment(r, 3, true);
        auto rebuild = [&] {
            Rng nr(net_seed);
            return RepresentationStack<double>(nr, sizes);
        };
        auto check_slot = [&](auto&& inject, const D& init) {
            Fn f = [&](const D& x) {
                auto stack = rebuild();
                inject(stack, x);
                return prediction_loss(stack, seg);
            };
            fold(e, f, init, tol);
        };
        auto s0 = rebuild();
        switch (static_cast<int>(r.randint(3))) {
            case 0:
                check_slot([](auto& st, const D& x) { st.encoder.layers[0].w = x; },
                           s0.encoder.layers[0].w);
                break;
            case 1:
                check_slot([](auto& st, const D& x) { st.dm.layers[0].w = x; },
                           s0.dm.layers[0].w);
                break;
            default:
                check_slot([](auto& st, const D& x) { st.projector.w = x; },
                           s0.projector.w);
                break;
        }
    });

    run("cycle_loss", [&](SuiteEntry& e, Rng& r) {
        const std::uint64_t net_seed = r.next_u64();
        const bool discrete = r.randint(2) == 0;
        const auto& space = discrete ? space_d : space_c;
        NetSizes sz = sizes;
        sz.d_a = space.encoded_dim();
        std::vector<VirtualActionSet> sets;
        for (int b = 0; b < 3; ++b) sets.push_back(sample_virtual_actions(space, 2, 3, r));
        auto tensors = virtual_action_tensors<double>(sets, space);
        auto obs = D::randn(r, {3, 6});
        AuxConfig aux;
        aux.k = 3;
        aux.m = 2;
        auto rebuild = [&] {
            Rng nr(net_seed);
            return RepresentationStack<double>(nr, sz);
        };
        auto check_slot = [&](auto&& inject, const D& init) {
            Fn f = [&](const D& x) {
                auto stack = rebuild();
                inject(stack, x);
                auto z = stack.encode(obs, Branch::online);
                return cycle_loss(stack, z, tensors, aux);
            };
            fold(e, f, init, tol);
        };
        auto s0 = rebuild();
        switch (static_cast<int>(r.randint(3))) {
            case 0:
                check_slot([](auto& st, const D& x) { st.bdm.layers[0].w = x; },
                           s0.bdm.layers[0].w);
                break;
            case 1:
                check_slot([](auto& st, const D& x) { st.dm.layers[0].w = x; },
                           s0.dm.layers[0].w);
                break;
            default: {
                // The reference side of the cycle distance is stop-gradient,
                // so the finite-difference probe for encoder parameters must
                // hold the reference at its base-point value; otherwise FD
                // measures a total derivative the training gradient excludes.
                D z_ref;
                {
                    NoGradGuard ng;
                    z_ref = s0.encode(obs, Branch::online);
                }
                Fn f = [&](const D& x) {
                    auto stack = rebuild();
                    stack.encoder.layers[0].w = x;
                    auto z = stack.encode(obs, Branch::online);
                    D acc = D::scalar(0.0);
                    for (const auto& seq : tensors) {
                        auto rollout = forward_unroll(stack, z, seq, aux.nd_mode);
                        auto back = backward_unroll(stack, rollout.back(), seq);
                        acc = add(acc, mean(stack.distance_projection(back, z_ref)));
                    }
                    return scale(acc, 1.0 / static_cast<double>(tensors.size()));
                };
                fold(e, f, s0.encoder.layers[0].w, tol);
                break;
            }
        }
    });

    return out;
}

inline bool suite_pass(const std::vector<SuiteEntry>& entries) {
    for (const auto& e : entries) {
        if (!e.pass) return false;
    }
    return !entries.empty();
}

}  // namespace vlrl
