#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vlrl/agents.hpp"
#include "vlrl/checkpoint.hpp"
#include "vlrl/detail/gemm.hpp"
#include "vlrl/envs.hpp"
#include "vlrl/nets.hpp"
#include "vlrl/optim.hpp"
#include "vlrl/replay.hpp"
#include "vlrl/virtual_loop.hpp"

namespace vlrl {

struct RunConfig {
    std::string env = "gridworld";  // gridworld | pointmass
    std::string agent = "q";        // q | sac
    std::string variant = "playvirtual";
    // playvirtual | playvirtual-nd | baseline | baseline+bdm | wopred
    std::int64_t total_steps = 50000;
    std::int64_t warmup_steps = 1000;
    std::int64_t updates_per_step = 1;
    std::int64_t batch_size = 64;
    std::uint64_t seed = 0;
    AuxConfig aux;
    bool aux_overridden = false;  // CLI set k/m explicitly; variant keeps them
    double lr = 3e-4;
    double tau = 0.99;
    double gamma = 0.99;
    std::int64_t n_step = 3;
    std::int64_t eval_every = 2500;
    std::int64_t eval_episodes = 20;
    std::int64_t buffer_capacity = 0;  // 0 -> total_steps
    NetSizes sizes;                    // d_obs/d_a filled from the env
    std::string out_dir;               // empty -> no files written

    bool bdm_real = false;  // baseline+bdm: backward loss on real segments

    /// Resolve env-dependent defaults and the variant shorthand.
    void finalize() {
        const bool discrete = env == "gridworld";
        auto space = discrete ? ActionSpace::make_discrete(5) : ActionSpace::make_continuous(2);
        if (!aux_overridden) {
            const auto def = default_aux(space);
            aux.k = def.k;
            aux.m = def.m;
        }
        if (variant == "playvirtual") {
            aux.nd_mode = false;
        } else if (variant == "playvirtual-nd") {
            aux.nd_mode = true;
        } else if (variant == "baseline") {
            aux.lambda_cyc = 0.0;
        } else if (variant == "baseline+bdm") {
            bdm_real = true;  // cyc slot carries the real-segment backward loss
        } else if (variant == "wopred") {
            aux.k = 0;
        }
        if (agent == "sac") n_step = 1;
        if (buffer_capacity == 0) buffer_capacity = total_steps;
    }

    void validate() const {
        if (env != "gridworld" && env != "pointmass") {
            throw ConfigError("unknown env: " + env);
        }
        if (agent != "q" && agent != "sac") throw ConfigError("unknown agent: " + agent);
        if ((env == "gridworld") != (agent == "q")) {
            throw ConfigError("env/agent pairing must be gridworld+q or pointmass+sac");
        }
        if (variant != "playvirtual" && variant != "playvirtual-nd" && variant != "baseline" &&
            variant != "baseline+bdm" && variant != "wopred") {
            throw ConfigError("unknown variant: " + variant);
        }
        if (total_steps < 1 || warmup_steps < 0 || warmup_steps > total_steps) {
            throw ConfigError("step counts out of range");
        }
        if (updates_per_step < 1 || batch_size < 1 || eval_every < 1 || eval_episodes < 1) {
            throw ConfigError("counts must be positive");
        }
        if (aux.k < 0 || aux.m < 1) throw ConfigError("aux k must be >= 0 and m >= 1");
        if (lr <= 0 || tau < 0 || tau > 1 || gamma <= 0 || gamma >= 1 || n_step < 1) {
            throw ConfigError("optimizer/return parameters out of range");
        }
    }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
    j = nlohmann::json{{"env", c.env},
                       {"agent", c.agent},
                       {"variant", c.variant},
                       {"total_steps", c.total_steps},
                       {"warmup_steps", c.warmup_steps},
                       {"updates_per_step", c.updates_per_step},
                       {"batch_size", c.batch_size},
                       {"seed", c.seed},
                       {"k", c.aux.k},
                       {"m", c.aux.m},
                       {"lambda_pred", c.aux.lambda_pred},
                       {"lambda_cyc", c.aux.lambda_cyc},
                       {"metric", c.aux.metric == CycleMetric::projection ? "projection" : "latent"},
                       {"nd_mode", c.aux.nd_mode},
                       {"lr", c.lr},
                       {"tau", c.tau},
                       {"gamma", c.gamma},
                       {"n_step", c.n_step},
                       {"eval_every", c.eval_every},
                       {"eval_episodes", c.eval_episodes},
                       {"buffer_capacity", c.buffer_capacity},
                       {"bdm_real", c.bdm_real},
                       {"d_z", c.sizes.d_z},
                       {"d_p", c.sizes.d_p},
                       {"encoder_hidden", c.sizes.encoder_hidden}};
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
    j.at("env").get_to(c.env);
    j.at("agent").get_to(c.agent);
    j.at("variant").get_to(c.variant);
    j.at("total_steps").get_to(c.total_steps);
    j.at("warmup_steps").get_to(c.warmup_steps);
    j.at("updates_per_step").get_to(c.updates_per_step);
    j.at("batch_size").get_to(c.batch_size);
    j.at("seed").get_to(c.seed);
    j.at("k").get_to(c.aux.k);
    j.at("m").get_to(c.aux.m);
    j.at("lambda_pred").get_to(c.aux.lambda_pred);
    j.at("lambda_cyc").get_to(c.aux.lambda_cyc);
    c.aux.metric =
        j.at("metric") == "projection" ? CycleMetric::projection : CycleMetric::latent;
    j.at("nd_mode").get_to(c.aux.nd_mode);
    j.at("lr").get_to(c.lr);
    j.at("tau").get_to(c.tau);
    j.at("gamma").get_to(c.gamma);
    j.at("n_step").get_to(c.n_step);
    j.at("eval_every").get_to(c.eval_every);
    j.at("eval_episodes").get_to(c.eval_episodes);
    j.at("buffer_capacity").get_to(c.buffer_capacity);
    j.at("bdm_real").get_to(c.bdm_real);
    j.at("d_z").get_to(c.sizes.d_z);
    j.at("d_p").get_to(c.sizes.d_p);
    j.at("encoder_hidden").get_to(c.sizes.encoder_hidden);
    c.aux_overridden = true;
}

struct EvalPoint {
    std::int64_t step = 0;
    double mean = 0;
    double stddev = 0;
    double exploration = 0;  // epsilon for q, alpha for sac
    double wall_s = 0;
};

struct TrainResult {
    RunConfig config;
    std::vector<LossBreakdown> updates;
    std::vector<EvalPoint> evals;
    double final_mean = 0;
    double final_std = 0;
    double aulc = 0;  // mean of eval means
    double wall_s = 0;
    std::optional<double> optimal;  // BFS oracle where defined
};

namespace detail_harness {

struct EnvBox {
    std::optional<GridWorld> grid;
    std::optional<PointMass> pm;

    static EnvBox make(const std::string& name) {
        EnvBox e;
        if (name == "gridworld") {
            e.grid.emplace(GridWorld::default_config());
        } else {
            e.pm.emplace(PointMass::default_config());
        }
        return e;
    }
    bool discrete() const { return grid.has_value(); }
    std::int64_t obs_dim() const { return discrete() ? grid->obs_dim() : pm->obs_dim(); }
    std::vector<double> reset(std::uint64_t s) {
        return discrete() ? grid->reset(s) : pm->reset(s);
    }
};

inline double population_std(const std::vector<double>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double acc = 0;
    for (auto x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

template <class Real>
Tensor<Real> single_obs(const std::vector<double>& obs) {
    std::vector<Real> row(obs.begin(), obs.end());
    return Tensor<Real>::from(std::move(row), {1, static_cast<std::int64_t>(obs.size())});
}

}  // namespace detail_harness

/// Greedy/deterministic rollouts with no training side effects.
template <class Real>
std::pair<double, double> evaluate(const RepresentationStack<Real>& stack,
                                   const QHead<Real>* qhead, const SacHead<Real>* sachead,
                                   const std::string& env_name, std::int64_t episodes,
                                   std::uint64_t seed) {
    if (episodes < 1) throw ConfigError("evaluation needs at least one episode");
    NoGradGuard ng;
    auto env = detail_harness::EnvBox::make(env_name);
    Rng unused(0);
    std::vector<double> returns;
    for (std::int64_t ep = 0; ep < episodes; ++ep) {
        auto obs = env.reset(derive_seed(seed, "eval-episode", ep));
        double ret = 0;
        while (true) {
            auto z = stack.encode(detail_harness::single_obs<Real>(obs), Branch::online);
            StepResult res;
            if (env.discrete()) {
                res = env.grid->step(qhead->act(z, ActMode::eval, unused, 0.0));
            } else {
                res = env.pm->step(sachead->act(z, ActMode::eval, unused));
            }
            ret += res.reward;
            obs = res.obs;
            if (res.terminal || res.truncated) break;
        }
        returns.push_back(ret);
    }
    double mean = 0;
    for (auto r : returns) mean += r;
    mean /= static_cast<double>(returns.size());
    return {mean, detail_harness::population_std(returns, mean)};
}

/// The collect -> store -> sample -> loss -> step -> ema loop.
template <class Real>
TrainResult train(RunConfig cfg) {
    cfg.finalize();
    cfg.validate();
    detail::init_blas_single_thread();
    const auto t_start = std::chrono::steady_clock::now();
    auto wall_now = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    };

    auto env = detail_harness::EnvBox::make(cfg.env);
    const bool discrete = env.discrete();
    const auto space = discrete ? ActionSpace::make_discrete(env.grid->n_actions())
                                : ActionSpace::make_continuous(env.pm->action_dim());
    cfg.sizes.d_obs = env.obs_dim();
    cfg.sizes.d_a = space.encoded_dim();

    Rng rng_init(derive_seed(cfg.seed, "init"));
    RepresentationStack<Real> stack(rng_init, cfg.sizes);
    std::optional<QHead<Real>> qhead;
    std::optional<SacHead<Real>> sachead;
    std::vector<Tensor<Real>> params = stack.trainable_params();
    if (cfg.agent == "q") {
        qhead.emplace(rng_init, cfg.sizes.d_z, space.n, std::vector<std::int64_t>{64});
        auto hp = qhead->trainable_params();
        params.insert(params.end(), hp.begin(), hp.end());
    } else {
        sachead.emplace(rng_init, cfg.sizes.d_z, space.d, std::vector<std::int64_t>{64, 64});
        auto hp = sachead->trainable_params();
        params.insert(params.end(), hp.begin(), hp.end());
    }
    Adam<Real> opt(params, static_cast<Real>(cfg.lr));

    ReplayBuffer buffer(cfg.buffer_capacity);
    Rng rng_act(derive_seed(cfg.seed, discrete ? "eps" : "sac-noise"));
    Rng rng_replay(derive_seed(cfg.seed, "replay"));
    Rng rng_virtual(derive_seed(cfg.seed, "virtual-actions"));

    TrainResult result;
    std::optional<std::ofstream> metrics;
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream cf(cfg.out_dir + "/config.json");
        cf << nlohmann::json(cfg).dump(2) << "\n";
        metrics.emplace(cfg.out_dir + "/metrics.jsonl");
    }

    std::int64_t episode = 0, ep_step = 0;
    auto obs = env.reset(derive_seed(cfg.seed, "env", episode));
    const double alpha = sachead ? static_cast<double>(sachead->alpha) : 0.0;

    auto run_eval = [&](std::int64_t step, double expl) {
        auto [mean, sd] = discrete ? evaluate<Real>(stack, &*qhead, nullptr, cfg.env,
                                                    cfg.eval_episodes,
                                                    derive_seed(cfg.seed, "eval", step))
                                   : evaluate<Real>(stack, nullptr, &*sachead, cfg.env,
                                                    cfg.eval_episodes,
                                                    derive_seed(cfg.seed, "eval", step));
        EvalPoint pt{step, mean, sd, expl, wall_now()};
        result.evals.push_back(pt);
        if (metrics) {
            nlohmann::json j{{"kind", "eval"},   {"step", pt.step},
                             {"mean", pt.mean},  {"stddev", pt.stddev},
                             {"expl", pt.exploration}, {"wall", pt.wall_s}};
            *metrics << j.dump() << "\n";
        }
    };

    for (std::int64_t s = 1; s <= cfg.total_steps; ++s) {
        const double eps = epsilon_at(s - 1, cfg.total_steps);
        Transition tr;
        tr.obs = obs;
        tr.episode_id = episode;
        tr.step_idx = ep_step;
        StepResult res;
        {
            NoGradGuard ng;
            if (discrete) {
                auto z = stack.encode(detail_harness::single_obs<Real>(obs), Branch::online);
                tr.action_d = qhead->act(z, ActMode::train, rng_act, eps);
                res = env.grid->step(tr.action_d);
            } else if (s <= cfg.warmup_steps) {
                tr.action_c = {rng_act.uniform(-1, 1), rng_act.uniform(-1, 1)};
                res = env.pm->step(tr.action_c);
            } else {
                auto z = stack.encode(detail_harness::single_obs<Real>(obs), Branch::online);
                tr.action_c = sachead->act(z, ActMode::train, rng_act);
                res = env.pm->step(tr.action_c);
            }
        }
        tr.reward = res.reward;
        tr.terminal = res.terminal;
        buffer.push(tr);
        obs = res.obs;
        if (res.terminal || res.truncated) {
            ++episode;
            ep_step = 0;
            obs = env.reset(derive_seed(cfg.seed, "env", episode));
        } else {
            ++ep_step;
        }

        if (s > cfg.warmup_steps) {
            for (std::int64_t u = 0; u < cfg.updates_per_step; ++u) {
                Tape<Real>::current().clear();
                auto batch =
                    buffer.sample_rl_batch(cfg.batch_size, cfg.n_step, cfg.gamma, rng_replay);
                if (!batch) continue;
                opt.zero_grad();
                Tensor<Real> l_rl = Tensor<Real>::scalar(Real(0));
                if (discrete) {
                    l_rl = qhead->loss(stack, *batch);
                } else {
                    auto losses = sachead->losses(stack, *batch, rng_act);
                    l_rl = add(losses.critic, losses.actor);
                }
                Tensor<Real> l_pred = Tensor<Real>::scalar(Real(0));
                Tensor<Real> l_cyc = Tensor<Real>::scalar(Real(0));
                if (cfg.aux.active()) {
                    auto seg = buffer.sample_segments(cfg.batch_size, cfg.aux.k, rng_replay);
                    if (seg) {
                        auto st = gather_segment<Real>(buffer, *seg, space);
                        auto z0 = stack.encode(st.obs.front(), Branch::online);
                        if (cfg.aux.pred_active()) l_pred = prediction_loss(stack, st, z0);
                        if (cfg.aux.cyc_active()) {
                            if (cfg.bdm_real) {
                                l_cyc = backward_prediction_loss(stack, st);
                            } else {
                                std::vector<VirtualActionSet> sets;
                                sets.reserve(seg->starts.size());
                                for (std::size_t i = 0; i < seg->starts.size(); ++i) {
                                    sets.push_back(sample_virtual_actions(space, cfg.aux.m,
                                                                          cfg.aux.k,
                                                                          rng_virtual));
                                }
                                auto acts = virtual_action_tensors<Real>(sets, space);
                                l_cyc = cycle_loss(stack, z0, acts, cfg.aux);
                            }
                        }
                    }
                }
                auto [total, lb] = total_loss(l_rl, l_pred, l_cyc, cfg.aux, s);
                backward(total);
                opt.step();
                Tape<Real>::current().clear();
                stack.ema_update_targets(static_cast<Real>(cfg.tau));
                if (qhead) qhead->ema_update_targets(static_cast<Real>(cfg.tau));
                if (sachead) sachead->ema_update_targets(static_cast<Real>(cfg.tau));
                result.updates.push_back(lb);
                if (metrics) {
                    nlohmann::json j{{"kind", "update"}, {"step", lb.step},
                                     {"rl", lb.rl},      {"pred", lb.pred},
                                     {"cyc", lb.cyc},    {"total", lb.total},
                                     {"expl", discrete ? eps : alpha}};
                    *metrics << j.dump() << "\n";
                }
            }
        }

        if (s % cfg.eval_every == 0 || s == cfg.total_steps) {
            run_eval(s, discrete ? eps : alpha);
        }
    }

    result.final_mean = result.evals.back().mean;
    result.final_std = result.evals.back().stddev;
    double aulc = 0;
    for (const auto& e : result.evals) aulc += e.mean;
    result.aulc = aulc / static_cast<double>(result.evals.size());
    result.wall_s = wall_now();
    if (discrete) result.optimal = optimal_return(GridWorld::default_config());
    result.config = cfg;

    if (!cfg.out_dir.empty()) {
        metrics->flush();
        std::vector<std::pair<std::string, Tensor<Real>>> named;
        stack.named_params(named);
        if (qhead) qhead->named_params(named);
        if (sachead) sachead->named_params(named);
        save_checkpoint(cfg.out_dir + "/checkpoint.bin", named);

        const std::string summary = cfg.out_dir + "/summary.csv";
        const bool fresh = !std::filesystem::exists(summary);
        std::ofstream sf(summary, std::ios::app);
        if (fresh) {
            sf << "env,agent,variant,k,m,lambda_pred,lambda_cyc,metric,nd,seed,steps,"
                  "final_mean,final_std,aulc,optimal,final_norm,wall_s\n";
        }
        const double opt_ret = result.optimal.value_or(std::nan(""));
        sf << cfg.env << ',' << cfg.agent << ',' << cfg.variant << ',' << cfg.aux.k << ','
           << cfg.aux.m << ',' << cfg.aux.lambda_pred << ',' << cfg.aux.lambda_cyc << ','
           << (cfg.aux.metric == CycleMetric::projection ? "projection" : "latent") << ','
           << (cfg.aux.nd_mode ? 1 : 0) << ',' << cfg.seed << ',' << cfg.total_steps << ','
           << result.final_mean << ',' << result.final_std << ',' << result.aulc << ','
           << opt_ret << ',' << result.final_mean / opt_ret << ',' << result.wall_s << "\n";
    }
    return result;
}

/// Rebuild nets from a run directory and load the stored parameters.
template <class Real>
struct RestoredAgent {
    RunConfig config;
    RepresentationStack<Real> stack;
    std::optional<QHead<Real>> qhead;
    std::optional<SacHead<Real>> sachead;
};

template <class Real>
RestoredAgent<Real> restore(const std::string& run_dir) {
    std::ifstream cf(run_dir + "/config.json");
    if (!cf) throw IoError("missing config.json in " + run_dir);
    nlohmann::json j;
    cf >> j;
    RunConfig cfg = j.get<RunConfig>();

    auto env = detail_harness::EnvBox::make(cfg.env);
    const auto space = env.discrete() ? ActionSpace::make_discrete(env.grid->n_actions())
                                      : ActionSpace::make_continuous(env.pm->action_dim());
    cfg.sizes.d_obs = env.obs_dim();
    cfg.sizes.d_a = space.encoded_dim();

    Rng rng(derive_seed(cfg.seed, "init"));
    RestoredAgent<Real> out{cfg, RepresentationStack<Real>(rng, cfg.sizes), std::nullopt,
                            std::nullopt};
    std::vector<std::pair<std::string, Tensor<Real>>> named;
    out.stack.named_params(named);
    if (cfg.agent == "q") {
        out.qhead.emplace(rng, cfg.sizes.d_z, space.n, std::vector<std::int64_t>{64});
        out.qhead->named_params(named);
    } else {
        out.sachead.emplace(rng, cfg.sizes.d_z, space.d, std::vector<std::int64_t>{64, 64});
        out.sachead->named_params(named);
    }

    auto loaded = load_checkpoint<Real>(run_dir + "/checkpoint.bin");
    if (loaded.size() != named.size()) {
        throw IoError("checkpoint/config mismatch: expected " + std::to_string(named.size()) +
                      " tensors, found " + std::to_string(loaded.size()));
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
        if (loaded[i].first != named[i].first ||
            loaded[i].second.shape() != named[i].second.shape()) {
            throw IoError("checkpoint/config mismatch at tensor " + loaded[i].first);
        }
        auto dst = named[i].second.mutable_data();
        auto src = loaded[i].second.data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

template <class Real>
std::pair<double, double> evaluate_run_dir(const std::string& run_dir, std::int64_t episodes,
                                           std::uint64_t seed) {
    auto agent = restore<Real>(run_dir);
    return evaluate<Real>(agent.stack, agent.qhead ? &*agent.qhead : nullptr,
                          agent.sachead ? &*agent.sachead : nullptr, agent.config.env,
                          episodes, seed);
}

inline Precision active_precision() { return precision_from_env(); }

inline TrainResult train_dispatch(const RunConfig& cfg) {
    return active_precision() == Precision::f32 ? train<float>(cfg) : train<double>(cfg);
}

inline std::pair<double, double> evaluate_run_dir_dispatch(const std::string& run_dir,
                                                           std::int64_t episodes,
                                                           std::uint64_t seed) {
    return active_precision() == Precision::f32 ? evaluate_run_dir<float>(run_dir, episodes, seed)
                                                : evaluate_run_dir<double>(run_dir, episodes, seed);
}

// ---------------------------------------------------------------------------
// Ablation runner
// ---------------------------------------------------------------------------

struct AblationSetting {
    std::string label;
    RunConfig config;
};

inline std::vector<AblationSetting> build_sweep(const RunConfig& base, const std::string& sweep) {
    std::vector<AblationSetting> out;
    auto with = [&](const std::string& label, auto&& tweak) {
        RunConfig c = base;
        tweak(c);
        out.push_back({label, std::move(c)});
    };
    if (sweep == "k") {
        for (std::int64_t k : {0, 3, 6, 9, 12}) {
            with("k" + std::to_string(k), [&](RunConfig& c) {
                c.aux.k = k;
                c.aux_overridden = true;
            });
        }
    } else if (sweep == "m") {
        for (std::int64_t m : {1, 2, 5, 10, 20}) {
            with("m" + std::to_string(m), [&](RunConfig& c) {
                c.aux.m = m;
                c.aux_overridden = true;
            });
        }
    } else if (sweep == "variant") {
        for (const char* v :
             {"baseline", "baseline+bdm", "playvirtual", "playvirtual-nd", "wopred"}) {
            with(v, [&](RunConfig& c) { c.variant = v; });
        }
    } else if (sweep == "metric") {
        for (auto metric : {CycleMetric::projection, CycleMetric::latent}) {
            with(metric == CycleMetric::projection ? "projection" : "latent",
                 [&](RunConfig& c) { c.aux.metric = metric; });
        }
    } else {
        throw ConfigError("unknown sweep: " + sweep);
    }
    return out;
}

inline double median_of(std::vector<double> xs) {
    if (xs.empty()) throw ContractError("median of empty set");
    std::sort(xs.begin(), xs.end());
    const auto n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// One train() per (setting, seed); per-run rows plus a median table.
inline void run_ablation(const RunConfig& base, const std::string& sweep,
                         const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
    if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
    std::filesystem::create_directories(out_dir);
    std::ofstream runs(out_dir + "/runs.csv");
    runs << "setting,seed,final_mean,aulc,wall_s\n";
    std::ofstream table(out_dir + "/table.csv");
    table << "setting,median_final,median_aulc,seeds\n";
    for (const auto& setting : build_sweep(base, sweep)) {
        std::vector<double> finals, aulcs;
        for (auto seed : seeds) {
            RunConfig c = setting.config;
            c.seed = seed;
            c.out_dir = out_dir + "/" + sweep + "_" + setting.label + "_s" +
                        std::to_string(seed);
            auto r = train_dispatch(c);
            runs << setting.label << ',' << seed << ',' << r.final_mean << ',' << r.aulc << ','
                 << r.wall_s << "\n";
            runs.flush();
            finals.push_back(r.final_mean);
            aulcs.push_back(r.aulc);
        }
        table << setting.label << ',' << median_of(finals) << ',' << median_of(aulcs) << ','
              << seeds.size() << "\n";
        table.flush();
    }
}

}  // namespace vlrl
