#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <vector>

#include "support/oracles.hpp"
#include "vlrl/replay.hpp"

using vlrl::ReplayBuffer;
using vlrl::Transition;

namespace {

Transition make_t(std::int64_t ep, std::int64_t step, double reward, bool terminal,
                  double obs_tag) {
    Transition t;
    t.obs = {obs_tag, obs_tag + 0.5};
    t.action_d = step % 5;
    t.reward = reward;
    t.terminal = terminal;
    t.episode_id = ep;
    t.step_idx = step;
    return t;
}

// Independent record of everything pushed, for exhaustive validity checks.
struct PushLog {
    std::vector<Transition> all;
    std::int64_t capacity;

    void push(ReplayBuffer& buf, Transition t) {
        all.push_back(t);
        buf.push(std::move(t));
    }

    bool segment_ok(std::int64_t g, std::int64_t k) const {
        const auto total = static_cast<std::int64_t>(all.size());
        const auto oldest = total - std::min(total, capacity);
        if (g < oldest || g + k >= total) return false;
        for (std::int64_t i = 0; i <= k; ++i) {
            const auto& t = all[static_cast<std::size_t>(g + i)];
            if (t.episode_id != all[static_cast<std::size_t>(g)].episode_id) return false;
            if (t.step_idx != all[static_cast<std::size_t>(g)].step_idx + i) return false;
            if (i < k && t.terminal) return false;
        }
        return true;
    }
};

// 50 episodes with assorted lengths, some terminal and some truncated.
void fill_episodes(ReplayBuffer& buf, PushLog& log, int episodes, std::uint64_t seed) {
    vlrl::Rng rng(seed);
    for (int e = 0; e < episodes; ++e) {
        const auto len = 3 + rng.randint(15);
        const bool ends_terminal = rng.bernoulli(0.6);
        for (std::int64_t s = 0; s < len; ++s) {
            const bool term = ends_terminal && s == len - 1;
            log.push(buf, make_t(e, s, rng.uniform(-1, 1), term, static_cast<double>(e * 1000 + s)));
        }
    }
}

}  // namespace

TEST_CASE("push one transition and sample it back as a degenerate segment") {
    ReplayBuffer buf(16);
    buf.push(make_t(0, 0, 0.5, true, 7.0));
    CHECK(buf.size() == 1);

    vlrl::Rng rng(1);
    auto seg = buf.sample_segments(1, 0, rng);
    REQUIRE(seg.has_value());
    CHECK(seg->starts == std::vector<std::int64_t>{0});
    CHECK(buf.at_global(0).obs[0] == 7.0);

    auto rl = buf.sample_rl_batch(1, 1, 0.99, rng);
    REQUIRE(rl.has_value());
    CHECK(rl->reward_n[0] == 0.5);
    CHECK(rl->bootstrap[0] == 0.0);
}

TEST_CASE("ring semantics: capacity+1 pushes evict the oldest") {
    ReplayBuffer buf(4);
    for (int i = 0; i < 5; ++i) buf.push(make_t(0, i, 0.0, false, static_cast<double>(i)));
    CHECK(buf.size() == 4);
    CHECK(buf.oldest_global() == 1);
    CHECK_THROWS_AS(buf.at_global(0), vlrl::ContractError);
    CHECK(buf.at_global(1).obs[0] == 1.0);
    CHECK(buf.at_global(4).obs[0] == 4.0);
}

TEST_CASE("single 3-step episode with K=2 has exactly one valid segment") {
    ReplayBuffer buf(16);
    for (int s = 0; s < 3; ++s) buf.push(make_t(0, s, -0.01, s == 2, static_cast<double>(s)));
    vlrl::Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        auto seg = buf.sample_segments(4, 2, rng);
        REQUIRE(seg.has_value());
        for (auto g : seg->starts) CHECK(g == 0);
    }
}

TEST_CASE("K=0 segments are single observations") {
    ReplayBuffer buf(8);
    for (int s = 0; s < 5; ++s) buf.push(make_t(0, s, 0.0, false, static_cast<double>(s)));
    vlrl::Rng rng(3);
    auto seg = buf.sample_segments(8, 0, rng);
    REQUIRE(seg.has_value());
    CHECK(seg->k == 0);
    for (auto g : seg->starts) {
        CHECK(g >= 0);
        CHECK(g <= 4);
    }
}

TEST_CASE("segments from many interleaved episodes never cross episode ids") {
    ReplayBuffer buf(512);
    PushLog log{{}, 512};
    fill_episodes(buf, log, 50, 11);
    REQUIRE(log.all.size() >= 400);

    vlrl::Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        auto seg = buf.sample_segments(16, 6, rng);
        REQUIRE(seg.has_value());
        for (auto g : seg->starts) {
            CHECK(log.segment_ok(g, 6));
            // Spot-check that the buffer really holds what the log says.
            CHECK(buf.at_global(g).obs == log.all[static_cast<std::size_t>(g)].obs);
        }
    }
}

TEST_CASE("segments respect eviction when the ring wraps") {
    ReplayBuffer buf(32);
    PushLog log{{}, 32};
    fill_episodes(buf, log, 12, 13);  // overflows a 32-slot ring
    vlrl::Rng rng(5);
    auto seg = buf.sample_segments(32, 3, rng);
    REQUIRE(seg.has_value());
    for (auto g : seg->starts) {
        CHECK(g >= buf.oldest_global());
        CHECK(log.segment_ok(g, 3));
    }
}

TEST_CASE("rl batch with n_step=1 returns plain transitions") {
    ReplayBuffer buf(16);
    for (int s = 0; s < 4; ++s) buf.push(make_t(0, s, 0.1 * (s + 1), s == 3, static_cast<double>(s)));
    vlrl::Rng rng(6);
    auto rl = buf.sample_rl_batch(8, 1, 0.99, rng);
    REQUIRE(rl.has_value());
    for (std::size_t i = 0; i < rl->obs.size(); ++i) {
        const auto g = static_cast<std::int64_t>(rl->obs[i][0]);
        CHECK(rl->reward_n[i] == doctest::Approx(0.1 * (g + 1)));
        if (g == 3) {
            CHECK(rl->bootstrap[i] == 0.0);
        } else {
            CHECK(rl->bootstrap[i] == doctest::Approx(0.99));
            CHECK(rl->next_obs[i][0] == static_cast<double>(g + 1));
        }
    }
}

TEST_CASE("n_step=3 discounted sums and bootstrap flags") {
    const double gam = 0.99;
    ReplayBuffer buf(16);
    const double rew[5] = {0.1, -0.2, 0.3, -0.4, 1.0};
    for (int s = 0; s < 5; ++s) buf.push(make_t(0, s, rew[s], s == 4, static_cast<double>(s)));

    // Hand-computed expectations per start index.
    struct Want {
        double r;
        double boot;
        double next_tag;
    };
    const Want want[5] = {
        {rew[0] + gam * rew[1] + gam * gam * rew[2], gam * gam * gam, 3.0},
        {rew[1] + gam * rew[2] + gam * gam * rew[3], gam * gam * gam, 4.0},
        {rew[2] + gam * rew[3] + gam * gam * rew[4], 0.0, 4.0},
        {rew[3] + gam * rew[4], 0.0, 4.0},
        {rew[4], 0.0, 4.0},
    };

    vlrl::Rng rng(7);
    bool seen[5] = {};
    for (int trial = 0; trial < 50; ++trial) {
        auto rl = buf.sample_rl_batch(8, 3, gam, rng);
        REQUIRE(rl.has_value());
        for (std::size_t i = 0; i < rl->obs.size(); ++i) {
            const auto s = static_cast<int>(rl->obs[i][0]);
            REQUIRE(s >= 0);
            REQUIRE(s < 5);
            seen[s] = true;
            CHECK(rl->reward_n[i] == doctest::Approx(want[s].r).epsilon(1e-12));
            CHECK(rl->bootstrap[i] == doctest::Approx(want[s].boot).epsilon(1e-12));
            CHECK(rl->next_obs[i][0] == want[s].next_tag);
        }
    }
    for (int s = 0; s < 5; ++s) CHECK(seen[s]);
}

TEST_CASE("terminal reward is always inside some sampled window") {
    // A window starting at the terminal transition itself must surface it.
    ReplayBuffer buf(16);
    for (int s = 0; s < 3; ++s) buf.push(make_t(0, s, s == 2 ? 0.99 : -0.01, s == 2,
                                                static_cast<double>(s)));
    vlrl::Rng rng(8);
    bool saw_terminal_window = false;
    for (int trial = 0; trial < 30; ++trial) {
        auto rl = buf.sample_rl_batch(4, 3, 0.99, rng);
        REQUIRE(rl.has_value());
        for (std::size_t i = 0; i < rl->obs.size(); ++i) {
            if (rl->obs[i][0] == 2.0) {
                saw_terminal_window = true;
                CHECK(rl->reward_n[i] == doctest::Approx(0.99));
                CHECK(rl->bootstrap[i] == 0.0);
            }
        }
    }
    CHECK(saw_terminal_window);
}

TEST_CASE("joint-mode rl windows built from segment starts") {
    ReplayBuffer buf(64);
    for (int s = 0; s < 10; ++s) buf.push(make_t(0, s, 1.0, s == 9, static_cast<double>(s)));
    vlrl::Rng rng(9);
    auto seg = buf.sample_segments(16, 4, rng);
    REQUIRE(seg.has_value());
    auto rl = buf.rl_batch_from_starts(seg->starts, 3, 0.5);
    for (std::size_t i = 0; i < rl.obs.size(); ++i) {
        CHECK(rl.reward_n[i] == doctest::Approx(1.0 + 0.5 + 0.25).epsilon(1e-12));
        CHECK(rl.bootstrap[i] == doctest::Approx(0.125).epsilon(1e-12));
    }
}

TEST_CASE("segment sampling is uniform over valid starts") {
    ReplayBuffer buf(64);
    for (int s = 0; s < 12; ++s) buf.push(make_t(0, s, 0.0, false, static_cast<double>(s)));
    // K=2 gives valid starts 0..9.
    vlrl::Rng rng(10);
    std::vector<std::int64_t> counts(10, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        auto seg = buf.sample_segments(5, 2, rng);
        REQUIRE(seg.has_value());
        for (auto g : seg->starts) ++counts[static_cast<std::size_t>(g)];
    }
    // 5000 draws over 10 bins; 1% critical value for 9 dof.
    CHECK(oracle::chi_square_uniform(counts) < 21.666);
}

TEST_CASE("sampling with the same seed stream reproduces the batch") {
    ReplayBuffer buf(128);
    PushLog log{{}, 128};
    fill_episodes(buf, log, 10, 21);
    vlrl::Rng r1(42), r2(42);
    auto a = buf.sample_segments(16, 4, r1);
    auto b = buf.sample_segments(16, 4, r2);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    CHECK(a->starts == b->starts);

    auto ra = buf.sample_rl_batch(16, 3, 0.99, r1);
    auto rb = buf.sample_rl_batch(16, 3, 0.99, r2);
    REQUIRE(ra.has_value());
    CHECK(ra->reward_n == rb->reward_n);
    CHECK(ra->obs == rb->obs);
}

TEST_CASE("not-enough-data is an explicit signal, not an error") {
    ReplayBuffer buf(16);
    vlrl::Rng rng(11);
    CHECK(!buf.sample_segments(4, 2, rng).has_value());
    CHECK(!buf.sample_rl_batch(4, 1, 0.99, rng).has_value());

    // Two-step episodes can never host a K=5 segment.
    for (int e = 0; e < 4; ++e) {
        buf.push(make_t(e, 0, 0.0, false, 0.0));
        buf.push(make_t(e, 1, 0.0, true, 1.0));
    }
    CHECK(!buf.sample_segments(4, 5, rng).has_value());
    CHECK(buf.sample_segments(4, 1, rng).has_value());

    // A single non-terminal transition has no bootstrap observation.
    ReplayBuffer buf2(8);
    buf2.push(make_t(0, 0, 0.0, false, 0.0));
    CHECK(!buf2.sample_rl_batch(1, 1, 0.99, rng).has_value());
}

TEST_CASE("dump and load roundtrip the live window") {
    ReplayBuffer buf(64);
    PushLog log{{}, 64};
    fill_episodes(buf, log, 6, 33);
    const std::string path = "/tmp/vlrl_replay_dump.bin";
    buf.dump(path);
    auto loaded = ReplayBuffer::load(path, 64);
    REQUIRE(loaded.size() == buf.size());
    for (std::int64_t g = buf.oldest_global(); g <= buf.newest_global(); ++g) {
        const auto rel = g - buf.oldest_global();
        CHECK(loaded.at_global(rel).obs == buf.at_global(g).obs);
        CHECK(loaded.at_global(rel).reward == buf.at_global(g).reward);
        CHECK(loaded.at_global(rel).terminal == buf.at_global(g).terminal);
        CHECK(loaded.at_global(rel).episode_id == buf.at_global(g).episode_id);
    }
    std::remove(path.c_str());
}

TEST_CASE("configuration and argument contracts") {
    CHECK_THROWS_AS(ReplayBuffer{0}, vlrl::ConfigError);
    ReplayBuffer buf(4);
    buf.push(make_t(0, 0, 0.0, true, 0.0));
    vlrl::Rng rng(12);
    CHECK_THROWS_AS(buf.sample_segments(1, -1, rng), vlrl::ContractError);
    CHECK_THROWS_AS(buf.sample_rl_batch(1, 0, 0.99, rng), vlrl::ContractError);
}
