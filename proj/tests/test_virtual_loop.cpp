#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "vlrl/virtual_loop.hpp"

using D = vlrl::Tensor<double>;
using Stack = vlrl::RepresentationStack<double>;

namespace {

std::vector<double> ident(std::int64_t n) {
    std::vector<double> w(static_cast<std::size_t>(n * n), 0.0);
    for (std::int64_t i = 0; i < n; ++i) w[static_cast<std::size_t>(i * n + i)] = 1.0;
    return w;
}

vlrl::Mlp<double> affine_only(std::vector<double> w, std::vector<double> b, std::int64_t in,
                              std::int64_t out) {
    vlrl::Rng rng(0);
    vlrl::Mlp<double> m(rng, in, {}, out);
    m.layers[0].w = D::from(std::move(w), {in, out}, true);
    m.layers[0].b = D::from(std::move(b), {out}, true);
    return m;
}

void zero_net(vlrl::Mlp<double>& m) {
    for (auto& l : m.layers) {
        for (auto& v : l.w.mutable_data()) v = 0;
        for (auto& v : l.b.mutable_data()) v = 0;
    }
}

// Residual net computing z_block^T z + a_block^T a with blocks given as
// [d_z x d_z] and [enc x d_z] row-major input-by-output weights.
vlrl::Mlp<double> selector_net(const std::vector<double>& z_block,
                               const std::vector<double>& a_block, std::int64_t d_z,
                               std::int64_t enc) {
    std::vector<double> w;
    w.insert(w.end(), z_block.begin(), z_block.end());
    w.insert(w.end(), a_block.begin(), a_block.end());
    return affine_only(std::move(w), std::vector<double>(static_cast<std::size_t>(d_z), 0.0),
                       d_z + enc, d_z);
}

Stack rand_stack(std::uint64_t seed, std::int64_t d_obs, std::int64_t enc, std::int64_t d_z,
                 std::int64_t d_p, std::vector<std::int64_t> hidden) {
    vlrl::NetSizes s;
    s.d_obs = d_obs;
    s.d_a = enc;
    s.d_z = d_z;
    s.d_p = d_p;
    s.encoder_hidden = std::move(hidden);
    vlrl::Rng rng(seed);
    return Stack(rng, s);
}

// Stack whose encoder, projectors, and predictor are all identity maps and
// whose dynamics nets start at zero (identity residual steps).
Stack plain_stack(std::int64_t d, std::int64_t enc) {
    auto st = rand_stack(3, d, enc, d, d, {});
    st.encoder = affine_only(ident(d), std::vector<double>(static_cast<std::size_t>(d), 0.0), d, d);
    st.target_encoder = st.encoder.clone_frozen();
    st.projector.w = D::from(ident(d), {d, d}, true);
    st.projector.b = D::zeros({d}, true);
    st.predictor.w = D::from(ident(d), {d, d}, true);
    st.predictor.b = D::zeros({d}, true);
    st.target_projector = st.projector.clone_frozen();
    zero_net(st.dm);
    zero_net(st.bdm);
    return st;
}

std::vector<D> const_actions(std::int64_t k, std::int64_t enc, double v) {
    std::vector<D> out;
    for (std::int64_t i = 0; i < k; ++i) {
        out.push_back(D::from(std::vector<double>(static_cast<std::size_t>(enc), v),
                              {1, enc}));
    }
    return out;
}

}  // namespace

TEST_CASE("forward unroll length tracks the action count") {
    auto st = plain_stack(2, 1);
    auto z = D::from({1.0, -0.5}, {1, 2});
    CHECK(vlrl::forward_unroll(st, z, {}).empty());

    auto out = vlrl::forward_unroll(st, z, const_actions(4, 1, 0.25));
    REQUIRE(out.size() == 4);
    for (const auto& zi : out) {
        CHECK(zi.at(0, 0) == 1.0);
        CHECK(zi.at(0, 1) == -0.5);
    }
}

TEST_CASE("doubling dynamics produce powers of two") {
    auto st = plain_stack(2, 1);
    st.dm = selector_net(ident(2), {0.0, 0.0}, 2, 1);  // h(z, a) = 2z
    auto z = D::from({1.0, 0.0}, {1, 2});
    auto out = vlrl::forward_unroll(st, z, const_actions(3, 1, 0.0));
    REQUIRE(out.size() == 3);
    CHECK(out[0].at(0, 0) == 2.0);
    CHECK(out[1].at(0, 0) == 4.0);
    CHECK(out[2].at(0, 0) == 8.0);
    CHECK(out[0].at(0, 1) == 0.0);
    CHECK(out[2].at(0, 1) == 0.0);
}

TEST_CASE("prediction loss vanishes when the rollout explains the future") {
    auto st = plain_stack(2, 1);
    vlrl::SegmentTensors<double> seg;
    for (int i = 0; i < 4; ++i) seg.obs.push_back(D::from({0.6, -0.8}, {1, 2}));
    seg.actions = const_actions(3, 1, 0.5);
    auto loss = vlrl::prediction_loss(st, seg);
    CHECK(loss.item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("orthogonal prediction terms each contribute the midpoint distance") {
    auto st = plain_stack(2, 1);
    vlrl::SegmentTensors<double> seg;
    seg.obs.push_back(D::from({1.0, 0.0}, {1, 2}));
    for (int i = 0; i < 9; ++i) seg.obs.push_back(D::from({0.0, 1.0}, {1, 2}));
    seg.actions = const_actions(9, 1, 0.0);
    auto loss = vlrl::prediction_loss(st, seg);
    CHECK(loss.item() == doctest::Approx(18.0).epsilon(1e-12));
}

TEST_CASE("prediction loss equals the sum of per-step distances") {
    auto st = rand_stack(11, 3, 2, 4, 2, {5});
    vlrl::Rng rng(12);
    vlrl::SegmentTensors<double> seg;
    for (int i = 0; i < 3; ++i) seg.obs.push_back(D::randn(rng, {1, 3}));
    for (int i = 0; i < 2; ++i) seg.actions.push_back(D::uniform(rng, {1, 2}, -1.0, 1.0));
    auto loss = vlrl::prediction_loss(st, seg);

    vlrl::NoGradGuard ng;
    auto z0 = st.encode(seg.obs[0], vlrl::Branch::online);
    auto z1 = st.dm_step(z0, seg.actions[0]);
    auto z2 = st.dm_step(z1, seg.actions[1]);
    const double d1 =
        st.distance_projection(z1, st.encode(seg.obs[1], vlrl::Branch::target)).at(0);
    const double d2 =
        st.distance_projection(z2, st.encode(seg.obs[2], vlrl::Branch::target)).at(0);
    CHECK(loss.item() == doctest::Approx(d1 + d2).epsilon(1e-13));
}

TEST_CASE("prediction loss averages over the batch") {
    auto st = rand_stack(13, 3, 2, 4, 2, {5});
    vlrl::Rng rng(14);
    std::vector<std::vector<double>> obs_rows(3);
    vlrl::SegmentTensors<double> full;
    std::vector<vlrl::SegmentTensors<double>> single(3);
    for (int t = 0; t < 3; ++t) {
        auto o = D::randn(rng, {3, 3});
        full.obs.push_back(o);
        for (int r = 0; r < 3; ++r) {
            std::vector<double> row{o.at(r, 0), o.at(r, 1), o.at(r, 2)};
            single[static_cast<std::size_t>(r)].obs.push_back(
                D::from(std::move(row), {1, 3}));
        }
    }
    for (int t = 0; t < 2; ++t) {
        auto a = D::uniform(rng, {3, 2}, -1.0, 1.0);
        full.actions.push_back(a);
        for (int r = 0; r < 3; ++r) {
            single[static_cast<std::size_t>(r)].actions.push_back(
                D::from({a.at(r, 0), a.at(r, 1)}, {1, 2}));
        }
    }
    const double batched = vlrl::prediction_loss(st, full).item();
    double avg = 0;
    for (auto& s : single) avg += vlrl::prediction_loss(st, s).item();
    avg /= 3;
    CHECK(batched == doctest::Approx(avg).epsilon(1e-12));
}

TEST_CASE("virtual action sampling respects the space") {
    vlrl::Rng rng(21);
    auto one = vlrl::sample_virtual_actions(vlrl::ActionSpace::make_discrete(1), 4, 3, rng);
    REQUIRE(one.m() == 4);
    REQUIRE(one.k() == 3);
    for (const auto& seq : one.discrete) {
        for (auto a : seq) CHECK(a == 0);
    }

    auto grid = vlrl::default_aux(vlrl::ActionSpace::make_discrete(5));
    CHECK(grid.m == 10);
    CHECK(grid.k == 9);
    auto cont = vlrl::default_aux(vlrl::ActionSpace::make_continuous(2));
    CHECK(cont.m == 10);
    CHECK(cont.k == 6);

    vlrl::Rng ra(5), rb(5);
    auto sa = vlrl::sample_virtual_actions(vlrl::ActionSpace::make_discrete(5), 10, 9, ra);
    auto sb = vlrl::sample_virtual_actions(vlrl::ActionSpace::make_discrete(5), 10, 9, rb);
    CHECK(sa.discrete == sb.discrete);
}

TEST_CASE("discrete virtual draws are uniform to three sigma") {
    vlrl::Rng rng(31);
    auto set = vlrl::sample_virtual_actions(vlrl::ActionSpace::make_discrete(5), 1000, 100, rng);
    std::vector<std::int64_t> counts(5, 0);
    for (const auto& seq : set.discrete) {
        for (auto a : seq) {
            REQUIRE(a >= 0);
            REQUIRE(a < 5);
            ++counts[static_cast<std::size_t>(a)];
        }
    }
    const double n = 100000.0, p = 0.2;
    const double sigma = std::sqrt(n * p * (1 - p));
    for (auto c : counts) {
        CHECK(std::abs(static_cast<double>(c) - n * p) < 3 * sigma);
    }
}

TEST_CASE("continuous virtual draws stay inside the unit box") {
    vlrl::Rng rng(32);
    auto set = vlrl::sample_virtual_actions(vlrl::ActionSpace::make_continuous(2), 100, 10, rng);
    double mean = 0;
    std::int64_t count = 0;
    for (const auto& seq : set.continuous) {
        REQUIRE(seq.size() == 10);
        for (const auto& a : seq) {
            REQUIRE(a.size() == 2);
            for (auto c : a) {
                CHECK(c >= -1.0);
                CHECK(c <= 1.0);
                mean += c;
                ++count;
            }
        }
    }
    CHECK(count == 2000);
    CHECK(std::abs(mean / static_cast<double>(count)) < 0.05);
}

TEST_CASE("identity backward model returns the rollout endpoint") {
    auto st = plain_stack(2, 1);
    st.dm = selector_net(ident(2), {0.0, 0.0}, 2, 1);  // forward doubles z
    auto z = D::from({1.0, -2.0}, {1, 2});
    auto actions = const_actions(3, 1, 0.7);
    auto rollout = vlrl::forward_unroll(st, z, actions);
    auto back = vlrl::backward_unroll(st, rollout.back(), actions);
    CHECK(back.at(0, 0) == rollout.back().at(0, 0));
    CHECK(back.at(0, 1) == rollout.back().at(0, 1));
}

TEST_CASE("an exact inverse pair closes the cycle") {
    const std::vector<double> b_row{0.3, -0.2};  // [enc=1 x d_z=2]
    std::vector<double> neg_b{-0.3, 0.2};
    auto st = plain_stack(2, 1);
    std::vector<double> zeros4(4, 0.0);
    st.dm = selector_net(zeros4, b_row, 2, 1);   // h(z, a) = z + Ba
    st.bdm = selector_net(zeros4, neg_b, 2, 1);  // b(z, a) = z - Ba
    vlrl::Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        auto z = D::randn(rng, {1, 2});
        std::vector<D> actions;
        for (int k = 0; k < 5; ++k) actions.push_back(D::uniform(rng, {1, 1}, -1.0, 1.0));
        auto rollout = vlrl::forward_unroll(st, z, actions);
        auto back = vlrl::backward_unroll(st, rollout.back(), actions);
        CHECK(back.at(0, 0) == doctest::Approx(z.at(0, 0)).epsilon(1e-12));
        CHECK(back.at(0, 1) == doctest::Approx(z.at(0, 1)).epsilon(1e-12));
    }
}

TEST_CASE("backward unroll walks the actions in reverse") {
    // h(z, a) = 2z + Ba and its true inverse b(z, a) = z/2 - Ba/2. The
    // inverse only reconstructs the start if actions come back newest
    // first, so this doubles as the order contract.
    const std::vector<double> b_row{0.3, -0.2};
    std::vector<double> half_neg{-0.15, 0.1};
    std::vector<double> neg_half_z{-0.5, 0.0, 0.0, -0.5};
    auto st = plain_stack(2, 1);
    st.dm = selector_net(ident(2), b_row, 2, 1);
    st.bdm = selector_net(neg_half_z, half_neg, 2, 1);

    auto z0 = D::from({0.5, -1.0}, {1, 2});
    std::vector<D> actions{D::from({0.4}, {1, 1}), D::from({-0.8}, {1, 1})};
    auto rollout = vlrl::forward_unroll(st, z0, actions);
    REQUIRE(rollout.size() == 2);
    CHECK(rollout[0].at(0, 0) == doctest::Approx(1.12).epsilon(1e-14));
    CHECK(rollout[0].at(0, 1) == doctest::Approx(-2.08).epsilon(1e-14));
    CHECK(rollout[1].at(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(rollout[1].at(0, 1) == doctest::Approx(-4.0).epsilon(1e-14));

    auto back = vlrl::backward_unroll(st, rollout.back(), actions);
    CHECK(back.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(back.at(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));

    // Consuming the actions forward-first lands somewhere else entirely.
    auto wrong = st.bdm_step(st.bdm_step(rollout.back(), actions[0]), actions[1]);
    CHECK(wrong.at(0, 0) == doctest::Approx(0.59).epsilon(1e-12));
    CHECK(wrong.at(0, 1) == doctest::Approx(-1.06).epsilon(1e-12));
}

TEST_CASE("cycle loss is near zero for an invertible world model") {
    const std::vector<double> b_row{0.3, -0.2};
    std::vector<double> neg_b{-0.3, 0.2};
    auto st = plain_stack(2, 1);
    std::vector<double> zeros4(4, 0.0);
    st.dm = selector_net(zeros4, b_row, 2, 1);
    st.bdm = selector_net(zeros4, neg_b, 2, 1);

    vlrl::AuxConfig cfg;
    cfg.metric = vlrl::CycleMetric::latent;
    vlrl::Rng rng(51);
    auto space = vlrl::ActionSpace::make_continuous(1);
    std::vector<vlrl::VirtualActionSet> sets{vlrl::sample_virtual_actions(space, 4, 3, rng)};
    auto tensors = vlrl::virtual_action_tensors<double>(sets, space);
    auto z = D::from({0.7, -0.3}, {1, 2});
    auto loss = vlrl::cycle_loss(st, z, tensors, cfg);
    CHECK(std::abs(loss.item()) < 1e-10);
}

TEST_CASE("a sign-flipping backward model hits the antiparallel bound") {
    auto st = plain_stack(2, 1);
    std::vector<double> neg_two_z{-2.0, 0.0, 0.0, -2.0};
    st.bdm = selector_net(neg_two_z, {0.0, 0.0}, 2, 1);  // b(z, a) = -z

    vlrl::AuxConfig cfg;
    cfg.metric = vlrl::CycleMetric::latent;
    vlrl::VirtualActionSet vas;
    vas.continuous = {{{0.2}}};  // one sequence, one step
    auto tensors =
        vlrl::virtual_action_tensors<double>({vas}, vlrl::ActionSpace::make_continuous(1));
    auto z = D::from({1.0, 2.0}, {1, 2});
    auto loss = vlrl::cycle_loss(st, z, tensors, cfg);
    CHECK(loss.item() == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("cycle loss equals the mean of per-trajectory distances") {
    auto st = rand_stack(61, 3, 2, 4, 2, {5});
    vlrl::Rng rng(62);
    auto space = vlrl::ActionSpace::make_continuous(2);
    std::vector<vlrl::VirtualActionSet> sets{vlrl::sample_virtual_actions(space, 3, 2, rng)};
    auto tensors = vlrl::virtual_action_tensors<double>(sets, space);
    auto z = D::randn(rng, {1, 4});

    vlrl::AuxConfig cfg;
    auto loss = vlrl::cycle_loss(st, z, tensors, cfg);

    vlrl::NoGradGuard ng;
    double want = 0;
    for (int m = 0; m < 3; ++m) {
        auto zc = z;
        for (int k = 0; k < 2; ++k) zc = st.dm_step(zc, tensors[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)]);
        for (int k = 1; k >= 0; --k) zc = st.bdm_step(zc, tensors[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)]);
        want += st.distance_projection(zc, z).at(0);
    }
    want /= 3;
    CHECK(loss.item() == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("nd mode changes gradients but not values") {
    auto run = [&](bool nd) {
        vlrl::Tape<double>::current().clear();
        auto st = rand_stack(71, 3, 2, 4, 2, {5});
        vlrl::Rng rng(72);
        auto space = vlrl::ActionSpace::make_continuous(2);
        std::vector<vlrl::VirtualActionSet> sets{
            vlrl::sample_virtual_actions(space, 2, 3, rng)};
        auto tensors = vlrl::virtual_action_tensors<double>(sets, space);
        auto obs = D::randn(rng, {1, 3});
        auto z = st.encode(obs, vlrl::Branch::online);
        vlrl::AuxConfig cfg;
        cfg.nd_mode = nd;
        auto loss = vlrl::cycle_loss(st, z, tensors, cfg);
        const double value = loss.item();
        backward(loss);
        auto grad_mass = [](const vlrl::Mlp<double>& net) {
            std::vector<D> ps;
            net.params(ps);
            double total = 0;
            bool any = false;
            for (const auto& p : ps) {
                if (!p.has_grad()) continue;
                any = true;
                for (auto g : p.grad()) total += std::abs(g);
            }
            return std::pair<bool, double>(any, total);
        };
        auto dm = grad_mass(st.dm);
        auto bdm = grad_mass(st.bdm);
        auto enc = grad_mass(st.encoder);
        vlrl::Tape<double>::current().clear();
        return std::tuple<double, std::pair<bool, double>, std::pair<bool, double>,
                          std::pair<bool, double>>(value, dm, bdm, enc);
    };

    auto [v_off, dm_off, bdm_off, enc_off] = run(false);
    CHECK(dm_off.first);
    CHECK(dm_off.second > 0.0);
    CHECK(bdm_off.second > 0.0);
    CHECK(enc_off.second > 0.0);

    auto [v_on, dm_on, bdm_on, enc_on] = run(true);
    CHECK(v_on == v_off);  // same forward values bit for bit
    CHECK(dm_on.second == 0.0);
    CHECK(bdm_on.second > 0.0);
    CHECK(enc_on.second > 0.0);
}

TEST_CASE("cycle loss touches no observation besides the start") {
    auto st = rand_stack(81, 3, 2, 4, 2, {5});
    vlrl::Rng rng(82);
    auto space = vlrl::ActionSpace::make_continuous(2);
    std::vector<vlrl::VirtualActionSet> sets{vlrl::sample_virtual_actions(space, 3, 2, rng)};
    auto tensors = vlrl::virtual_action_tensors<double>(sets, space);
    auto obs = D::randn(rng, {1, 3});
    auto z = st.encode(obs, vlrl::Branch::online);

    vlrl::Diagnostics::reset();
    vlrl::AuxConfig cfg;
    auto loss = vlrl::cycle_loss(st, z, tensors, cfg);
    CHECK(loss.item() >= 0.0);
    CHECK(vlrl::Diagnostics::encoder_forward_count() == 0);
}

TEST_CASE("aux losses respect their analytic ranges") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto st = rand_stack(seed, 3, 2, 4, 2, {5});
        vlrl::Rng rng(seed + 100);
        const std::int64_t k = 3;
        vlrl::SegmentTensors<double> seg;
        for (std::int64_t i = 0; i <= k; ++i) seg.obs.push_back(D::randn(rng, {2, 3}));
        for (std::int64_t i = 0; i < k; ++i) {
            seg.actions.push_back(D::uniform(rng, {2, 2}, -1.0, 1.0));
        }
        auto lp = vlrl::prediction_loss(st, seg).item();
        CHECK(lp >= 0.0);
        CHECK(lp <= 4.0 * static_cast<double>(k) + 1e-12);  // each term is 2 - 2cos

        auto space = vlrl::ActionSpace::make_continuous(2);
        std::vector<vlrl::VirtualActionSet> sets{
            vlrl::sample_virtual_actions(space, 4, k, rng),
            vlrl::sample_virtual_actions(space, 4, k, rng)};
        auto tensors = vlrl::virtual_action_tensors<double>(sets, space);
        auto z = st.encode(seg.obs[0], vlrl::Branch::online);
        for (auto metric : {vlrl::CycleMetric::projection, vlrl::CycleMetric::latent}) {
            vlrl::AuxConfig cfg;
            cfg.metric = metric;
            auto lc = vlrl::cycle_loss(st, z, tensors, cfg).item();
            CHECK(lc >= 0.0);
            CHECK(lc <= 4.0 + 1e-12);
        }
    }
}

TEST_CASE("backward prediction loss vanishes when the inverse explains the past") {
    const std::vector<double> b_row{0.3, -0.2};
    std::vector<double> neg_b{-0.3, 0.2};
    auto st = plain_stack(2, 1);
    std::vector<double> zeros4(4, 0.0);
    st.dm = selector_net(zeros4, b_row, 2, 1);
    st.bdm = selector_net(zeros4, neg_b, 2, 1);

    // Observations that really followed h(z, a) = z + Ba.
    vlrl::Rng rng(55);
    std::vector<double> o{0.4, -0.9};
    vlrl::SegmentTensors<double> seg;
    seg.obs.push_back(D::from({o[0], o[1]}, {1, 2}));
    for (int k = 0; k < 3; ++k) {
        const double a = rng.uniform(-1, 1);
        seg.actions.push_back(D::from({a}, {1, 1}));
        o[0] += 0.3 * a;
        o[1] += -0.2 * a;
        seg.obs.push_back(D::from({o[0], o[1]}, {1, 2}));
    }
    auto loss = vlrl::backward_prediction_loss(st, seg);
    CHECK(std::abs(loss.item()) < 1e-10);

    // A mismatched inverse leaves a positive residual.
    st.bdm = selector_net(zeros4, {0.1, 0.1}, 2, 1);
    auto off = vlrl::backward_prediction_loss(st, seg);
    CHECK(off.item() > 1e-4);
}

TEST_CASE("backward prediction loss sums reversed per-step distances") {
    auto st = rand_stack(63, 3, 2, 4, 2, {5});
    vlrl::Rng rng(64);
    vlrl::SegmentTensors<double> seg;
    for (int i = 0; i < 3; ++i) seg.obs.push_back(D::randn(rng, {1, 3}));
    for (int i = 0; i < 2; ++i) seg.actions.push_back(D::uniform(rng, {1, 2}, -1.0, 1.0));
    auto loss = vlrl::backward_prediction_loss(st, seg);

    vlrl::NoGradGuard ng;
    auto z = st.encode(seg.obs[2], vlrl::Branch::online);
    auto z1 = st.bdm_step(z, seg.actions[1]);
    const double d1 =
        st.distance_projection(z1, st.encode(seg.obs[1], vlrl::Branch::target)).at(0);
    auto z0 = st.bdm_step(z1, seg.actions[0]);
    const double d0 =
        st.distance_projection(z0, st.encode(seg.obs[0], vlrl::Branch::target)).at(0);
    CHECK(loss.item() == doctest::Approx(d1 + d0).epsilon(1e-13));
}

TEST_CASE("segment gathering reproduces pushed transitions") {
    vlrl::ReplayBuffer buf(16);
    for (int i = 0; i < 5; ++i) {
        vlrl::Transition t;
        t.obs = {static_cast<double>(i), static_cast<double>(i) + 0.5};
        t.action_d = i % 3;
        t.reward = 0.1 * i;
        t.terminal = (i == 4);
        t.episode_id = 0;
        t.step_idx = i;
        buf.push(t);
    }
    vlrl::SegmentBatch seg;
    seg.k = 2;
    seg.starts = {1, 2};
    auto out = vlrl::gather_segment<double>(buf, seg, vlrl::ActionSpace::make_discrete(3));
    REQUIRE(out.obs.size() == 3);
    REQUIRE(out.actions.size() == 2);
    CHECK(out.obs[0].at(0, 0) == 1.0);
    CHECK(out.obs[0].at(1, 0) == 2.0);
    CHECK(out.obs[2].at(0, 1) == 3.5);
    // action at start 1, step 0 is 1 % 3 = 1 -> one-hot column 1
    CHECK(out.actions[0].at(0, 1) == 1.0);
    CHECK(out.actions[0].at(0, 0) == 0.0);
    // action at start 2, step 1 is 3 % 3 = 0
    CHECK(out.actions[1].at(1, 0) == 1.0);
}

TEST_CASE("total objective combines the parts linearly") {
    auto rl = D::scalar(0.5);
    auto pred = D::scalar(0.2);
    auto cyc = D::scalar(0.3);

    vlrl::AuxConfig unit;
    auto [total, lb] = vlrl::total_loss(rl, pred, cyc, unit, 7);
    CHECK(total.item() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lb.rl == 0.5);
    CHECK(lb.pred == 0.2);
    CHECK(lb.cyc == 0.3);
    CHECK(lb.total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(lb.step == 7);

    vlrl::AuxConfig off;
    off.lambda_pred = 0.0;
    off.lambda_cyc = 0.0;
    auto [total0, lb0] = vlrl::total_loss(rl, pred, cyc, off, 8);
    CHECK(total0.item() == 0.5);
    CHECK(lb0.total == 0.5);

    vlrl::AuxConfig half;
    half.lambda_pred = 0.5;
    half.lambda_cyc = 2.0;
    auto [totalh, lbh] = vlrl::total_loss(rl, pred, cyc, half, 9);
    CHECK(totalh.item() == doctest::Approx(0.5 + 0.1 + 0.6).epsilon(1e-15));
    CHECK(std::abs(lbh.total - (lbh.rl + 0.5 * lbh.pred + 2.0 * lbh.cyc)) <= 1e-12);
}

TEST_CASE("aux activity flags sort the variants") {
    vlrl::AuxConfig full;
    CHECK(full.active());
    CHECK(full.pred_active());
    CHECK(full.cyc_active());

    vlrl::AuxConfig k0;
    k0.k = 0;
    CHECK_FALSE(k0.active());

    vlrl::AuxConfig lam0;
    lam0.lambda_pred = 0.0;
    lam0.lambda_cyc = 0.0;
    CHECK_FALSE(lam0.active());

    vlrl::AuxConfig pred_only;
    pred_only.lambda_cyc = 0.0;
    CHECK(pred_only.active());
    CHECK(pred_only.pred_active());
    CHECK_FALSE(pred_only.cyc_active());
}

TEST_CASE("malformed virtual inputs are rejected") {
    vlrl::Rng rng(91);
    auto space = vlrl::ActionSpace::make_discrete(4);
    CHECK_THROWS_AS(vlrl::sample_virtual_actions(space, 0, 3, rng), vlrl::ContractError);
    CHECK_THROWS_AS(vlrl::sample_virtual_actions(space, 3, 0, rng), vlrl::ContractError);

    auto a = vlrl::sample_virtual_actions(space, 2, 3, rng);
    auto b = vlrl::sample_virtual_actions(space, 2, 4, rng);
    CHECK_THROWS_AS(vlrl::virtual_action_tensors<double>({a, b}, space), vlrl::ContractError);
    CHECK_THROWS_AS(vlrl::virtual_action_tensors<double>({}, space), vlrl::ContractError);

    auto st = plain_stack(2, 1);
    vlrl::SegmentTensors<double> bad;
    bad.obs.push_back(D::from({0.0, 0.0}, {1, 2}));
    bad.obs.push_back(D::from({0.0, 0.0}, {1, 2}));
    bad.actions = const_actions(3, 1, 0.0);
    CHECK_THROWS_AS(vlrl::prediction_loss(st, bad), vlrl::ContractError);

    vlrl::AuxConfig cfg;
    CHECK_THROWS_AS(vlrl::cycle_loss(st, D::from({1.0, 0.0}, {1, 2}), {}, cfg),
                    vlrl::ContractError);
}
