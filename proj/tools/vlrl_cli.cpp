// Command-line front end: train a run, evaluate a stored run directory,
// launch an ablation sweep, or verify the autodiff engine.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlrl/gradcheck_suite.hpp"
#include "vlrl/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Latent-dynamics RL testbed with virtual-trajectory augmentation"};
    app.require_subcommand(1);

    // --- train ---
    vlrl::RunConfig cfg;
    std::string metric = "projection";
    bool nd = false;
    auto* train = app.add_subcommand("train", "Train one run");
    train->add_option("--env", cfg.env, "gridworld | pointmass")->required();
    train->add_option("--agent", cfg.agent, "q | sac")->required();
    train->add_option("--steps", cfg.total_steps, "environment steps");
    train->add_option("--warmup", cfg.warmup_steps, "steps before updates");
    train->add_option("--batch", cfg.batch_size, "batch size");
    train->add_option("--variant", cfg.variant,
                      "baseline | baseline+bdm | playvirtual | playvirtual-nd | wopred");
    auto* opt_k = train->add_option("--k", cfg.aux.k, "virtual horizon");
    auto* opt_m = train->add_option("--m", cfg.aux.m, "virtual trajectories per state");
    auto* opt_lp = train->add_option("--lambda-pred", cfg.aux.lambda_pred);
    auto* opt_lc = train->add_option("--lambda-cyc", cfg.aux.lambda_cyc);
    auto* opt_metric = train->add_option("--metric", metric, "projection | latent");
    train->add_flag("--nd", nd, "cycle loss does not update the forward model");
    train->add_option("--seed", cfg.seed);
    train->add_option("--lr", cfg.lr);
    train->add_option("--eval-every", cfg.eval_every);
    train->add_option("--eval-episodes", cfg.eval_episodes);
    train->add_option("--out", cfg.out_dir, "run directory for metrics/checkpoint");

    // --- eval ---
    std::string ckpt_dir;
    std::int64_t episodes = 20;
    std::uint64_t eval_seed = 0;
    auto* ev = app.add_subcommand("eval", "Evaluate a stored run directory");
    ev->add_option("--ckpt", ckpt_dir, "run directory containing checkpoint + config")
        ->required();
    ev->add_option("--episodes", episodes);
    ev->add_option("--seed", eval_seed);

    // --- ablate ---
    std::string sweep;
    std::int64_t n_seeds = 5;
    std::string ablate_out;
    vlrl::RunConfig ab_base;
    auto* ab = app.add_subcommand("ablate", "Sweep one knob over several seeds");
    ab->add_option("--sweep", sweep, "k | m | variant | metric")->required();
    ab->add_option("--seeds", n_seeds, "number of seeds (0..N-1)");
    ab->add_option("--out", ablate_out, "results directory")->required();
    ab->add_option("--env", ab_base.env, "gridworld | pointmass");
    ab->add_option("--agent", ab_base.agent, "q | sac");
    ab->add_option("--steps", ab_base.total_steps);
    ab->add_option("--warmup", ab_base.warmup_steps);
    ab->add_option("--eval-every", ab_base.eval_every);
    ab->add_option("--eval-episodes", ab_base.eval_episodes);

    // --- gradcheck ---
    int gc_instances = 100;
    double gc_tol = 1e-4;
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference verification suite");
    gc->add_option("--instances", gc_instances);
    gc->add_option("--tol", gc_tol);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            if (*opt_metric) {
                if (metric != "projection" && metric != "latent") {
                    throw vlrl::ConfigError("unknown metric: " + metric);
                }
                cfg.aux.metric = metric == "projection" ? vlrl::CycleMetric::projection
                                                        : vlrl::CycleMetric::latent;
            }
            if (nd) cfg.aux.nd_mode = true;
            if (*opt_k || *opt_m || *opt_lp || *opt_lc) cfg.aux_overridden = true;
            auto result = vlrl::train_dispatch(cfg);
            std::printf("final_mean=%.6f final_std=%.6f aulc=%.6f wall_s=%.1f\n",
                        result.final_mean, result.final_std, result.aulc, result.wall_s);
            if (result.optimal && *result.optimal > 0) {
                std::printf("oracle_normalized=%.4f\n", result.final_mean / *result.optimal);
            }
        } else if (*ev) {
            auto [mean, sd] = vlrl::evaluate_run_dir_dispatch(ckpt_dir, episodes, eval_seed);
            std::printf("mean=%.6f std=%.6f episodes=%lld\n", mean, sd,
                        static_cast<long long>(episodes));
        } else if (*ab) {
            if (n_seeds < 1) throw vlrl::ConfigError("--seeds must be >= 1");
            std::vector<std::uint64_t> seeds;
            for (std::int64_t i = 0; i < n_seeds; ++i) {
                seeds.push_back(static_cast<std::uint64_t>(i));
            }
            ab_base.finalize();
            vlrl::run_ablation(ab_base, sweep, seeds, ablate_out);
            std::printf("wrote %s/runs.csv and %s/table.csv\n", ablate_out.c_str(),
                        ablate_out.c_str());
        } else if (*gc) {
            auto entries = vlrl::run_gradcheck_suite(gc_instances, gc_tol);
            std::printf("%-20s %10s %12s %9s %7s %8s\n", "op", "instances", "max_rel_err",
                        "excluded", "pass", "seconds");
            for (const auto& e : entries) {
                std::printf("%-20s %10d %12.3e %9lld %7s %8.2f\n", e.name.c_str(),
                            e.instances, e.max_rel_err, static_cast<long long>(e.excluded),
                            e.pass ? "yes" : "NO", e.seconds);
            }
            if (!vlrl::suite_pass(entries)) {
                std::fprintf(stderr, "gradcheck FAILED\n");
                return 1;
            }
            std::printf("gradcheck passed\n");
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
