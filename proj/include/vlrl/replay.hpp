#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vlrl/checkpoint.hpp"
#include "vlrl/common.hpp"

namespace vlrl {

/// One stored step. Exactly one of action_d / action_c is meaningful,
/// depending on the environment's action space.
struct Transition {
    std::vector<double> obs;
    std::int64_t action_d = -1;
    std::vector<double> action_c;
    double reward = 0.0;
    bool terminal = false;
    std::int64_t episode_id = 0;
    std::int64_t step_idx = 0;
};

/// Batch of segment starts, addressed by global push index. A segment
/// covers transitions g..g+k: k+1 observations, and actions/rewards from
/// the first k transitions. A terminal may only sit on the last transition,
/// which episode contiguity already guarantees for the interior.
struct SegmentBatch {
    std::int64_t k = 0;
    std::vector<std::int64_t> starts;
};

/// Column-major n-step batch for the RL losses. When a terminal fell
/// inside the window, reward_n already includes everything up to it and
/// bootstrap is 0 (next_obs is then a placeholder).
struct RlBatch {
    std::vector<std::vector<double>> obs;
    std::vector<std::int64_t> action_d;
    std::vector<std::vector<double>> action_c;
    std::vector<double> reward_n;
    std::vector<std::vector<double>> next_obs;
    std::vector<double> bootstrap;
};

/// Flat ring buffer over transitions with sequence-aware samplers.
/// Episodes occupy contiguous global indices, which makes window validity
/// checkable from the endpoints.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::int64_t capacity) : capacity_(capacity) {
        if (capacity < 1) throw ConfigError("replay capacity must be >= 1");
        ring_.resize(static_cast<std::size_t>(capacity));
    }

    std::int64_t capacity() const { return capacity_; }
    std::int64_t size() const { return std::min(next_global_, capacity_); }
    std::int64_t oldest_global() const { return next_global_ - size(); }
    std::int64_t newest_global() const { return next_global_ - 1; }

    void push(Transition t) {
        ring_[slot(next_global_)] = std::move(t);
        ++next_global_;
    }

    const Transition& at_global(std::int64_t g) const {
        if (g < oldest_global() || g > newest_global()) {
            throw ContractError("replay index " + std::to_string(g) + " outside the live window");
        }
        return ring_[slot(g)];
    }

    /// True when transitions g..g+len-1 form one contiguous in-episode run
    /// with no terminal before the last position.
    bool valid_window(std::int64_t g, std::int64_t len) const {
        if (len < 1 || g < oldest_global() || g + len - 1 > newest_global()) return false;
        const auto& first = ring_[slot(g)];
        const auto& last = ring_[slot(g + len - 1)];
        if (first.episode_id != last.episode_id) return false;
        if (last.step_idx - first.step_idx != len - 1) return false;
        for (std::int64_t i = 0; i + 1 < len; ++i) {
            if (ring_[slot(g + i)].terminal) return false;
        }
        return true;
    }

    /// Uniform sample of valid starts for length-(k+1) segments, or nothing
    /// when the buffer holds no valid window.
    std::optional<SegmentBatch> sample_segments(std::int64_t batch, std::int64_t k, Rng& rng) {
        if (k < 0) throw ContractError("segment length k must be >= 0");
        auto starts = sample_starts(batch, k + 1, rng);
        if (!starts) return std::nullopt;
        return SegmentBatch{k, std::move(*starts)};
    }

    /// Uniform n-step RL batch. A window may end early at a terminal; the
    /// discounted reward sum then includes the terminal reward and the
    /// bootstrap weight is zero.
    std::optional<RlBatch> sample_rl_batch(std::int64_t batch, std::int64_t n_step, double gamma,
                                           Rng& rng) {
        if (n_step < 1) throw ContractError("n_step must be >= 1");
        const std::int64_t lo = oldest_global(), hi = newest_global();
        if (hi < lo) return std::nullopt;

        auto is_valid = [&](std::int64_t g) { return rl_window_len(g, n_step) > 0; };
        std::vector<std::int64_t> starts;
        starts.reserve(static_cast<std::size_t>(batch));
        const std::int64_t span = hi - lo + 1;
        for (std::int64_t b = 0; b < batch; ++b) {
            bool found = false;
            for (int attempt = 0; attempt < 256; ++attempt) {
                const std::int64_t g = lo + rng.randint(span);
                if (is_valid(g)) {
                    starts.push_back(g);
                    found = true;
                    break;
                }
            }
            if (!found) {
                std::vector<std::int64_t> all;
                for (std::int64_t g = lo; g <= hi; ++g) {
                    if (is_valid(g)) all.push_back(g);
                }
                if (all.empty()) return std::nullopt;
                starts.push_back(all[static_cast<std::size_t>(
                    rng.randint(static_cast<std::int64_t>(all.size())))]);
            }
        }
        return build_rl_batch(starts, n_step, gamma);
    }

    /// RL windows anchored at given segment starts (joint sampling mode).
    /// Window length is capped at the segment length, inside which no
    /// early terminal can occur.
    RlBatch rl_batch_from_starts(const std::vector<std::int64_t>& starts, std::int64_t n_step,
                                 double gamma) const {
        return build_rl_batch(starts, n_step, gamma);
    }

    void dump(const std::string& path) const {
        const auto n = size();
        if (n == 0) throw ContractError("refusing to dump an empty replay buffer");
        const auto d_obs = static_cast<std::int64_t>(at_global(oldest_global()).obs.size());
        std::vector<double> obs, act_c, reward, term, episode, stepix, act_d;
        std::int64_t d_a = 0;
        for (std::int64_t g = oldest_global(); g <= newest_global(); ++g) {
            const auto& t = at_global(g);
            obs.insert(obs.end(), t.obs.begin(), t.obs.end());
            d_a = std::max<std::int64_t>(d_a, static_cast<std::int64_t>(t.action_c.size()));
            reward.push_back(t.reward);
            term.push_back(t.terminal ? 1.0 : 0.0);
            episode.push_back(static_cast<double>(t.episode_id));
            stepix.push_back(static_cast<double>(t.step_idx));
            act_d.push_back(static_cast<double>(t.action_d));
        }
        using T = Tensor<double>;
        std::vector<std::pair<std::string, T>> out;
        out.emplace_back("obs", T::from(std::move(obs), {n, d_obs}));
        out.emplace_back("action_d", T::from(std::move(act_d), {n}));
        if (d_a > 0) {
            for (std::int64_t g = oldest_global(); g <= newest_global(); ++g) {
                const auto& t = at_global(g);
                act_c.insert(act_c.end(), t.action_c.begin(), t.action_c.end());
            }
            out.emplace_back("action_c", T::from(std::move(act_c), {n, d_a}));
        }
        out.emplace_back("reward", T::from(std::move(reward), {n}));
        out.emplace_back("terminal", T::from(std::move(term), {n}));
        out.emplace_back("episode_id", T::from(std::move(episode), {n}));
        out.emplace_back("step_idx", T::from(std::move(stepix), {n}));
        save_checkpoint(path, out);
    }

    static ReplayBuffer load(const std::string& path, std::int64_t capacity) {
        auto tensors = load_checkpoint<double>(path);
        auto find = [&](const std::string& name) -> const Tensor<double>* {
            for (const auto& [n, t] : tensors) {
                if (n == name) return &t;
            }
            return nullptr;
        };
        const auto* obs = find("obs");
        if (!obs) throw IoError("replay dump misses the obs tensor");
        const auto n = obs->shape()[0];
        const auto d_obs = obs->shape()[1];
        const auto* act_c = find("action_c");

        ReplayBuffer buf(capacity);
        for (std::int64_t i = 0; i < n; ++i) {
            Transition t;
            t.obs.resize(static_cast<std::size_t>(d_obs));
            for (std::int64_t j = 0; j < d_obs; ++j) t.obs[static_cast<std::size_t>(j)] = obs->at(i, j);
            t.action_d = static_cast<std::int64_t>(find("action_d")->at(i));
            if (act_c) {
                const auto d_a = act_c->shape()[1];
                t.action_c.resize(static_cast<std::size_t>(d_a));
                for (std::int64_t j = 0; j < d_a; ++j) {
                    t.action_c[static_cast<std::size_t>(j)] = act_c->at(i, j);
                }
            }
            t.reward = find("reward")->at(i);
            t.terminal = find("terminal")->at(i) != 0.0;
            t.episode_id = static_cast<std::int64_t>(find("episode_id")->at(i));
            t.step_idx = static_cast<std::int64_t>(find("step_idx")->at(i));
            buf.push(std::move(t));
        }
        return buf;
    }

private:
    std::size_t slot(std::int64_t g) const { return static_cast<std::size_t>(g % capacity_); }

    /// Length j of the usable RL window at g: j = n_step when the full
    /// window plus bootstrap observation is available, j <= n_step when a
    /// terminal cuts it short, 0 when the start is unusable.
    std::int64_t rl_window_len(std::int64_t g, std::int64_t n_step) const {
        if (g < oldest_global() || g > newest_global()) return 0;
        const auto ep = ring_[slot(g)].episode_id;
        for (std::int64_t i = 0; i < n_step; ++i) {
            const std::int64_t gi = g + i;
            if (gi > newest_global() || ring_[slot(gi)].episode_id != ep) return 0;
            if (ring_[slot(gi)].terminal) return i + 1;  // ends inside, no bootstrap
        }
        const std::int64_t gn = g + n_step;
        if (gn > newest_global() || ring_[slot(gn)].episode_id != ep) return 0;
        return n_step;
    }

    RlBatch build_rl_batch(const std::vector<std::int64_t>& starts, std::int64_t n_step,
                           double gamma) const {
        RlBatch out;
        for (const auto g : starts) {
            const std::int64_t j = rl_window_len(g, n_step);
            if (j == 0) throw ContractError("rl batch built from an invalid start");
            const auto& first = ring_[slot(g)];
            out.obs.push_back(first.obs);
            out.action_d.push_back(first.action_d);
            out.action_c.push_back(first.action_c);
            double r = 0.0, disc = 1.0;
            for (std::int64_t i = 0; i < j; ++i) {
                r += disc * ring_[slot(g + i)].reward;
                disc *= gamma;
            }
            out.reward_n.push_back(r);
            const bool ended = ring_[slot(g + j - 1)].terminal;
            if (ended) {
                out.next_obs.push_back(ring_[slot(g + j - 1)].obs);
                out.bootstrap.push_back(0.0);
            } else {
                out.next_obs.push_back(ring_[slot(g + j)].obs);
                out.bootstrap.push_back(disc);  // gamma^j
            }
        }
        return out;
    }

    std::optional<std::vector<std::int64_t>> sample_starts(std::int64_t batch, std::int64_t len,
                                                           Rng& rng) {
        const std::int64_t lo = oldest_global(), hi = newest_global();
        if (hi - lo + 1 < len) return std::nullopt;
        const std::int64_t span = hi - lo - len + 2;
        std::vector<std::int64_t> starts;
        starts.reserve(static_cast<std::size_t>(batch));
        for (std::int64_t b = 0; b < batch; ++b) {
            bool found = false;
            for (int attempt = 0; attempt < 256; ++attempt) {
                const std::int64_t g = lo + rng.randint(span);
                if (valid_window(g, len)) {
                    starts.push_back(g);
                    found = true;
                    break;
                }
            }
            if (!found) {
                std::vector<std::int64_t> all;
                for (std::int64_t g = lo; g + len - 1 <= hi; ++g) {
                    if (valid_window(g, len)) all.push_back(g);
                }
                if (all.empty()) return std::nullopt;
                starts.push_back(all[static_cast<std::size_t>(
                    rng.randint(static_cast<std::int64_t>(all.size())))]);
            }
        }
        return starts;
    }

    std::int64_t capacity_;
    std::vector<Transition> ring_;
    std::int64_t next_global_ = 0;
};

}  // namespace vlrl
