#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "vlrl/common.hpp"

namespace vlrl {

struct StepResult {
    std::vector<double> obs;
    double reward = 0.0;
    bool terminal = false;   // true task termination (bootstrapping stops)
    bool truncated = false;  // episode cut at the length limit
};

/// Deterministic N×N maze with one-hot plane observations. Actions:
/// 0 up, 1 right, 2 down, 3 left, 4 noop. Moving into a wall or the
/// boundary leaves the agent in place. Every step costs the penalty; the
/// step that lands on the goal additionally collects the goal reward and
/// ends the episode.
class GridWorld {
public:
    using Cell = std::pair<std::int64_t, std::int64_t>;  // (row, col)

    struct Config {
        std::int64_t n = 8;
        Cell start{0, 0};
        Cell goal{7, 7};
        std::vector<Cell> walls;
        double step_penalty = -0.01;
        double goal_reward = 1.0;
        std::int64_t max_len = 100;
        bool random_start = false;
    };

    static Config default_config() {
        Config c;
        c.walls = {{1, 3}, {2, 3}, {3, 3}, {4, 3}, {5, 3}};
        return c;
    }

    explicit GridWorld(Config cfg = default_config()) : cfg_(std::move(cfg)), rng_(0) {
        if (cfg_.n < 2) throw ConfigError("gridworld needs n >= 2");
        wall_grid_.assign(static_cast<std::size_t>(cfg_.n * cfg_.n), false);
        for (const auto& w : cfg_.walls) {
            if (!inside(w)) throw ConfigError("wall cell outside the grid");
            wall_grid_[flat(w)] = true;
        }
        if (!inside(cfg_.start) || !inside(cfg_.goal)) {
            throw ConfigError("start/goal outside the grid");
        }
        if (wall_grid_[flat(cfg_.start)] || wall_grid_[flat(cfg_.goal)]) {
            throw ConfigError("start/goal may not sit on a wall");
        }
        if (cfg_.start == cfg_.goal) throw ConfigError("start equals goal");
        agent_ = cfg_.start;
    }

    std::int64_t obs_dim() const { return 3 * cfg_.n * cfg_.n; }
    std::int64_t n_actions() const { return 5; }
    const Config& config() const { return cfg_; }
    Cell agent_pos() const { return agent_; }

    std::vector<double> reset(std::uint64_t seed) {
        rng_ = Rng(seed);
        if (cfg_.random_start) {
            while (true) {
                Cell c{rng_.randint(cfg_.n), rng_.randint(cfg_.n)};
                if (!wall_grid_[flat(c)] && c != cfg_.goal) {
                    agent_ = c;
                    break;
                }
            }
        } else {
            agent_ = cfg_.start;
        }
        steps_ = 0;
        done_ = false;
        return observe();
    }

    StepResult step(std::int64_t action) {
        if (done_) throw ContractError("step after episode end");
        if (action < 0 || action >= n_actions()) {
            throw ContractError("gridworld action " + std::to_string(action) +
                                " outside [0, 5)");
        }
        static constexpr std::int64_t dr[5] = {-1, 0, 1, 0, 0};
        static constexpr std::int64_t dc[5] = {0, 1, 0, -1, 0};
        Cell next{agent_.first + dr[action], agent_.second + dc[action]};
        if (inside(next) && !wall_grid_[flat(next)]) agent_ = next;
        ++steps_;

        StepResult r;
        r.reward = cfg_.step_penalty;
        if (agent_ == cfg_.goal) {
            r.reward += cfg_.goal_reward;
            r.terminal = true;
        } else if (steps_ >= cfg_.max_len) {
            r.truncated = true;
        }
        done_ = r.terminal || r.truncated;
        r.obs = observe();
        return r;
    }

    std::string render() const {
        std::string out;
        for (std::int64_t r = 0; r < cfg_.n; ++r) {
            for (std::int64_t c = 0; c < cfg_.n; ++c) {
                Cell cell{r, c};
                if (cell == agent_) {
                    out += 'A';
                } else if (cell == cfg_.goal) {
                    out += 'G';
                } else if (wall_grid_[flat(cell)]) {
                    out += '#';
                } else {
                    out += '.';
                }
            }
            out += '\n';
        }
        return out;
    }

private:
    bool inside(const Cell& c) const {
        return c.first >= 0 && c.first < cfg_.n && c.second >= 0 && c.second < cfg_.n;
    }

    std::size_t flat(const Cell& c) const {
        return static_cast<std::size_t>(c.first * cfg_.n + c.second);
    }

    std::vector<double> observe() const {
        const auto plane = static_cast<std::size_t>(cfg_.n * cfg_.n);
        std::vector<double> obs(3 * plane, 0.0);
        obs[flat(agent_)] = 1.0;
        obs[plane + flat(cfg_.goal)] = 1.0;
        for (std::size_t i = 0; i < plane; ++i) {
            if (wall_grid_[i]) obs[2 * plane + i] = 1.0;
        }
        return obs;
    }

    Config cfg_;
    Rng rng_;
    std::vector<bool> wall_grid_;
    Cell agent_{0, 0};
    std::int64_t steps_ = 0;
    bool done_ = false;
};

/// Exact optimal undiscounted episode return via shortest-path search, or
/// nothing when the goal cannot be reached within the episode limit.
inline std::optional<double> optimal_return(const GridWorld::Config& cfg,
                                            std::optional<GridWorld::Cell> from = std::nullopt) {
    const auto n = cfg.n;
    std::vector<bool> wall(static_cast<std::size_t>(n * n), false);
    for (const auto& w : cfg.walls) wall[static_cast<std::size_t>(w.first * n + w.second)] = true;
    const auto start = from.value_or(cfg.start);

    std::vector<std::int64_t> dist(static_cast<std::size_t>(n * n), -1);
    std::queue<GridWorld::Cell> q;
    dist[static_cast<std::size_t>(start.first * n + start.second)] = 0;
    q.push(start);
    while (!q.empty()) {
        auto [r, c] = q.front();
        q.pop();
        if (GridWorld::Cell{r, c} == cfg.goal) break;
        const std::int64_t d = dist[static_cast<std::size_t>(r * n + c)];
        static constexpr std::int64_t dr[4] = {-1, 0, 1, 0};
        static constexpr std::int64_t dc[4] = {0, 1, 0, -1};
        for (int k = 0; k < 4; ++k) {
            const std::int64_t nr = r + dr[k], nc = c + dc[k];
            if (nr < 0 || nr >= n || nc < 0 || nc >= n) continue;
            const auto fi = static_cast<std::size_t>(nr * n + nc);
            if (wall[fi] || dist[fi] >= 0) continue;
            dist[fi] = d + 1;
            q.push({nr, nc});
        }
    }
    const auto goal_d = dist[static_cast<std::size_t>(cfg.goal.first * n + cfg.goal.second)];
    if (goal_d < 0 || goal_d > cfg.max_len) return std::nullopt;
    return cfg.goal_reward + static_cast<double>(goal_d) * cfg.step_penalty;
}

/// Damped point mass on the unit box, pushed by a bounded force toward
/// staying at the origin. Observation is (p, v); reward is −‖p‖ after the
/// transition. Episodes run a fixed number of steps.
class PointMass {
public:
    struct Config {
        double dt = 0.05;
        double damping = 0.1;
        double v_max = 1.0;
        std::int64_t max_len = 200;
    };

    static Config default_config() {
        Config c;
        return c;
    }

    explicit PointMass(Config cfg = default_config()) : cfg_(cfg), rng_(0) {}

    std::int64_t obs_dim() const { return 4; }
    std::int64_t action_dim() const { return 2; }
    const Config& config() const { return cfg_; }

    std::vector<double> reset(std::uint64_t seed) {
        rng_ = Rng(seed);
        px_ = rng_.uniform(-1.0, 1.0);
        py_ = rng_.uniform(-1.0, 1.0);
        vx_ = 0.0;
        vy_ = 0.0;
        steps_ = 0;
        done_ = false;
        return observe();
    }

    StepResult step(const std::vector<double>& action) {
        if (done_) throw ContractError("step after episode end");
        if (action.size() != 2) {
            throw ContractError("point-mass action needs 2 components, got " +
                                std::to_string(action.size()));
        }
        for (auto a : action) {
            if (a < -1.0 || a > 1.0 || !std::isfinite(a)) {
                throw ContractError("point-mass action component outside [-1, 1]");
            }
        }
        integrate(px_, vx_, action[0]);
        integrate(py_, vy_, action[1]);
        ++steps_;

        StepResult r;
        r.reward = -std::sqrt(px_ * px_ + py_ * py_);
        r.truncated = steps_ >= cfg_.max_len;
        done_ = r.truncated;
        r.obs = observe();
        return r;
    }

private:
    void integrate(double& p, double& v, double a) {
        v = (1.0 - cfg_.damping) * v + cfg_.dt * a;
        v = std::clamp(v, -cfg_.v_max, cfg_.v_max);
        p += cfg_.dt * v;
        if (p < -1.0) {
            p = -1.0;
            v = 0.0;  // contact with the box wall kills the velocity
        } else if (p > 1.0) {
            p = 1.0;
            v = 0.0;
        }
    }

    std::vector<double> observe() const { return {px_, py_, vx_, vy_}; }

    Config cfg_;
    Rng rng_;
    double px_ = 0.0, py_ = 0.0, vx_ = 0.0, vy_ = 0.0;
    std::int64_t steps_ = 0;
    bool done_ = false;
};

}  // namespace vlrl
