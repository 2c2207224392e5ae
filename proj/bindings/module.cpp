// Python surface for the testbed: the two environments, the training
// entry point, stored-run evaluation, and the gradient verification suite.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "vlrl/envs.hpp"
#include "vlrl/gradcheck_suite.hpp"
#include "vlrl/harness.hpp"

namespace py = pybind11;

namespace {

vlrl::RunConfig config_from_kwargs(const py::dict& d) {
    vlrl::RunConfig cfg;
    for (auto item : d) {
        const auto key = py::cast<std::string>(item.first);
        auto v = py::reinterpret_borrow<py::object>(item.second);
        if (key == "env") cfg.env = py::cast<std::string>(v);
        else if (key == "agent") cfg.agent = py::cast<std::string>(v);
        else if (key == "variant") cfg.variant = py::cast<std::string>(v);
        else if (key == "total_steps") cfg.total_steps = py::cast<std::int64_t>(v);
        else if (key == "warmup_steps") cfg.warmup_steps = py::cast<std::int64_t>(v);
        else if (key == "batch_size") cfg.batch_size = py::cast<std::int64_t>(v);
        else if (key == "seed") cfg.seed = py::cast<std::uint64_t>(v);
        else if (key == "k") { cfg.aux.k = py::cast<std::int64_t>(v); cfg.aux_overridden = true; }
        else if (key == "m") { cfg.aux.m = py::cast<std::int64_t>(v); cfg.aux_overridden = true; }
        else if (key == "lambda_pred") { cfg.aux.lambda_pred = py::cast<double>(v); cfg.aux_overridden = true; }
        else if (key == "lambda_cyc") { cfg.aux.lambda_cyc = py::cast<double>(v); cfg.aux_overridden = true; }
        else if (key == "metric") {
            const auto s = py::cast<std::string>(v);
            if (s != "projection" && s != "latent") throw vlrl::ConfigError("unknown metric: " + s);
            cfg.aux.metric = s == "projection" ? vlrl::CycleMetric::projection
                                               : vlrl::CycleMetric::latent;
        }
        else if (key == "nd") cfg.aux.nd_mode = py::cast<bool>(v);
        else if (key == "lr") cfg.lr = py::cast<double>(v);
        else if (key == "tau") cfg.tau = py::cast<double>(v);
        else if (key == "gamma") cfg.gamma = py::cast<double>(v);
        else if (key == "n_step") cfg.n_step = py::cast<std::int64_t>(v);
        else if (key == "eval_every") cfg.eval_every = py::cast<std::int64_t>(v);
        else if (key == "eval_episodes") cfg.eval_episodes = py::cast<std::int64_t>(v);
        else if (key == "d_z") cfg.sizes.d_z = py::cast<std::int64_t>(v);
        else if (key == "d_p") cfg.sizes.d_p = py::cast<std::int64_t>(v);
        else if (key == "encoder_hidden") cfg.sizes.encoder_hidden = py::cast<std::vector<std::int64_t>>(v);
        else if (key == "out_dir") cfg.out_dir = py::cast<std::string>(v);
        else throw vlrl::ConfigError("unknown config key: " + key);
    }
    return cfg;
}

py::dict result_to_dict(const vlrl::TrainResult& r) {
    py::dict d;
    d["final_mean"] = r.final_mean;
    d["final_std"] = r.final_std;
    d["aulc"] = r.aulc;
    d["wall_s"] = r.wall_s;
    d["n_updates"] = r.updates.size();
    if (r.optimal) d["optimal"] = *r.optimal;
    py::list evals;
    for (const auto& e : r.evals) {
        py::dict ed;
        ed["step"] = e.step;
        ed["mean"] = e.mean;
        ed["stddev"] = e.stddev;
        evals.append(ed);
    }
    d["evals"] = evals;
    py::list losses;
    for (const auto& u : r.updates) {
        py::dict ud;
        ud["step"] = u.step;
        ud["rl"] = u.rl;
        ud["pred"] = u.pred;
        ud["cyc"] = u.cyc;
        ud["total"] = u.total;
        losses.append(ud);
    }
    d["updates"] = losses;
    return d;
}

}  // namespace

PYBIND11_MODULE(_vlrl, m) {
    m.doc() = "Latent-dynamics RL testbed with virtual-trajectory augmentation";

    py::register_exception<vlrl::ConfigError>(m, "ConfigError");
    py::register_exception<vlrl::ContractError>(m, "ContractError");
    py::register_exception<vlrl::IoError>(m, "IoError");

    py::class_<vlrl::StepResult>(m, "StepResult")
        .def_readonly("obs", &vlrl::StepResult::obs)
        .def_readonly("reward", &vlrl::StepResult::reward)
        .def_readonly("terminal", &vlrl::StepResult::terminal)
        .def_readonly("truncated", &vlrl::StepResult::truncated);

    py::class_<vlrl::GridWorld>(m, "GridWorld")
        .def(py::init([] { return vlrl::GridWorld(vlrl::GridWorld::default_config()); }))
        .def("reset", &vlrl::GridWorld::reset, py::arg("seed"))
        .def("step", &vlrl::GridWorld::step, py::arg("action"))
        .def_property_readonly("obs_dim", &vlrl::GridWorld::obs_dim)
        .def_property_readonly("n_actions", &vlrl::GridWorld::n_actions);

    py::class_<vlrl::PointMass>(m, "PointMass")
        .def(py::init([] { return vlrl::PointMass(vlrl::PointMass::default_config()); }))
        .def("reset", &vlrl::PointMass::reset, py::arg("seed"))
        .def("step", &vlrl::PointMass::step, py::arg("action"))
        .def_property_readonly("obs_dim", &vlrl::PointMass::obs_dim)
        .def_property_readonly("action_dim", &vlrl::PointMass::action_dim);

    m.def("optimal_grid_return",
          [] { return vlrl::optimal_return(vlrl::GridWorld::default_config()); },
          "Shortest-path oracle return for the default grid");

    m.def(
        "train",
        [](const py::dict& kwargs) {
            auto cfg = config_from_kwargs(kwargs);
            return result_to_dict(vlrl::train_dispatch(cfg));
        },
        py::arg("config"), "Run one training job from a config dict");

    m.def(
        "evaluate_run",
        [](const std::string& run_dir, std::int64_t episodes, std::uint64_t seed) {
            return vlrl::evaluate_run_dir_dispatch(run_dir, episodes, seed);
        },
        py::arg("run_dir"), py::arg("episodes") = 20, py::arg("seed") = 0,
        "Evaluate a stored run directory; returns (mean, std)");

    m.def(
        "gradcheck",
        [](int instances, double tol) {
            py::list rows;
            for (const auto& e : vlrl::run_gradcheck_suite(instances, tol)) {
                py::dict d;
                d["name"] = e.name;
                d["max_rel_err"] = e.max_rel_err;
                d["excluded"] = e.excluded;
                d["pass"] = e.pass;
                rows.append(d);
            }
            return rows;
        },
        py::arg("instances") = 20, py::arg("tol") = 1e-4,
        "Finite-difference verification of ops and losses");

    m.def("derive_seed", &vlrl::derive_seed, py::arg("root"), py::arg("label"),
          py::arg("index") = 0, "Named deterministic seed stream");
}
