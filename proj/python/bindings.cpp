#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "vsop/checkpoint.hpp"
#include "vsop/config.hpp"
#include "vsop/envs.hpp"
#include "vsop/rollout.hpp"
#include "vsop/tabular.hpp"
#include "vsop/trainer.hpp"
#include "vsop/verify.hpp"

namespace py = pybind11;
using namespace vsop;

namespace {

py::dict row_dict(const MetricsRow& r) {
  py::dict d;
  d["update"] = r.update;
  d["global_step"] = r.global_step;
  d["train_return_mean"] = r.train_return_mean;
  d["eval_return_mean"] = r.eval_return_mean;
  d["eval_return_std"] = r.eval_return_std;
  d["actor_loss"] = r.report.actor_loss;
  d["critic_loss"] = r.report.critic_loss;
  d["entropy"] = r.report.entropy;
  d["clip_fraction"] = r.report.clip_fraction;
  d["policy_gradient_norm"] = r.report.policy_gradient_norm;
  d["learning_rate"] = r.report.learning_rate;
  return d;
}

class PyEnv {
 public:
  PyEnv(const std::string& id, std::uint64_t seed) : env_(envs::make_env(id)), rng_(seed) {}
  std::vector<double> reset() { return env_->reset(rng_); }
  py::tuple step(const std::vector<double>& action) {
    const auto r = env_->step(action, rng_);
    return py::make_tuple(r.observation, r.reward, r.terminated, r.truncated);
  }
  const envs::EnvSpec& spec() const { return env_->spec(); }

 private:
  std::unique_ptr<envs::Env> env_;
  Rng rng_;
};

tabular::TabularMdp make_mdp(std::size_t S, std::size_t A, std::vector<double> transitions, std::vector<double> rewards,
                             double gamma) {
  tabular::TabularMdp m;
  m.num_states = S;
  m.num_actions = A;
  m.transitions = std::move(transitions);
  m.rewards = std::move(rewards);
  m.gamma = gamma;
  m.validate();
  return m;
}

tabular::TabularPolicy make_policy(std::size_t S, std::size_t A, std::vector<double> logits) {
  if (logits.size() != S * A) throw std::invalid_argument("logits must have states * actions entries");
  return {Matrix(S, A, std::move(logits))};
}

}  // namespace

PYBIND11_MODULE(_vsop, m) {
  m.doc() = "Clipped-advantage on-policy RL engine";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def("get", &TrainConfig::get)
      .def("set", &TrainConfig::set)
      .def("validate", &TrainConfig::validate)
      .def("serialize", &TrainConfig::serialize)
      .def_static("parse", &TrainConfig::parse)
      .def_static("keys", &TrainConfig::keys)
      .def("batch_size", &TrainConfig::batch_size)
      .def("num_updates", &TrainConfig::num_updates)
      .def("__eq__", [](const TrainConfig& a, const TrainConfig& b) { return a == b; })
      .def("__repr__", [](const TrainConfig& c) { return "TrainConfig(" + c.algorithm + ", " + c.env_id + ")"; });

  m.def("preset", [](const std::string& name) { return preset(name); });
  m.def("preset_names", &preset_names);
  m.def("load_config", &load_config);

  m.def(
      "train",
      [](const TrainConfig& config, const std::string& out_dir) {
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run(config, {out_dir, false});
        }
        py::dict d;
        d["global_step"] = r.global_step;
        d["best_eval"] = r.best_eval;
        d["final_eval"] = r.final_eval;
        d["reached_target"] = r.reached_target;
        py::list rows;
        for (const auto& row : r.rows) rows.append(row_dict(row));
        d["rows"] = rows;
        return d;
      },
      py::arg("config"), py::arg("out_dir") = "");

  m.def("suite_names", &verify::suite_names);
  m.def(
      "verify",
      [](const std::string& suite, std::uint64_t seed) {
        verify::SuiteOptions o;
        o.seed = seed;
        py::list out;
        for (const auto& r : verify::run_suite(suite, o)) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["worst"] = r.worst;
          d["tolerance"] = r.tolerance;
          d["cases"] = r.cases;
          d["detail"] = r.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("suite") = "all", py::arg("seed") = verify::SuiteOptions{}.seed);

  m.def(
      "gae",
      [](const std::vector<double>& rewards, const std::vector<double>& values, const std::vector<double>& next_values,
         const std::vector<bool>& terminated, const std::vector<bool>& truncated, std::size_t num_steps,
         std::size_t num_envs, double gamma, double lam) {
        const std::vector<char> term(terminated.begin(), terminated.end());
        const std::vector<char> trunc(truncated.begin(), truncated.end());
        auto r = rollout::gae(rewards, values, next_values, term, trunc, num_steps, num_envs, gamma, lam);
        return py::make_tuple(r.advantages, r.returns);
      },
      py::arg("rewards"), py::arg("values"), py::arg("next_values"), py::arg("terminated"), py::arg("truncated"),
      py::arg("num_steps"), py::arg("num_envs"), py::arg("gamma"), py::arg("lam"));

  m.def(
      "check_theorem",
      [](std::size_t S, std::size_t A, std::vector<double> transitions, std::vector<double> rewards, double gamma,
         std::vector<double> logits) {
        const auto r = tabular::check_theorem1(make_mdp(S, A, std::move(transitions), std::move(rewards), gamma),
                                               make_policy(S, A, std::move(logits)));
        py::dict d;
        d["holds"] = r.holds;
        d["max_violation"] = r.max_violation;
        d["max_reward_bound_violation"] = r.max_reward_bound_violation;
        d["max_value_bound_violation"] = r.max_value_bound_violation;
        return d;
      },
      py::arg("states"), py::arg("actions"), py::arg("transitions"), py::arg("rewards"), py::arg("gamma"),
      py::arg("logits"));

  m.def(
      "policy_values",
      [](std::size_t S, std::size_t A, std::vector<double> transitions, std::vector<double> rewards, double gamma,
         std::vector<double> logits) {
        return tabular::policy_eval(make_mdp(S, A, std::move(transitions), std::move(rewards), gamma),
                                    make_policy(S, A, std::move(logits)))
            .v;
      },
      py::arg("states"), py::arg("actions"), py::arg("transitions"), py::arg("rewards"), py::arg("gamma"),
      py::arg("logits"));

  m.def("read_checkpoint", [](const std::string& path) {
    py::dict d;
    for (const auto& b : checkpoint::read_file(path)) d[py::str(b.name)] = py::make_tuple(b.rows, b.cols, b.data);
    return d;
  });

  py::class_<PyEnv>(m, "Env")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("id"), py::arg("seed") = 0)
      .def("reset", &PyEnv::reset)
      .def("step", &PyEnv::step)
      .def_property_readonly("obs_dim", [](const PyEnv& e) { return e.spec().obs_dim; })
      .def_property_readonly("discrete", [](const PyEnv& e) { return e.spec().action.discrete; })
      .def_property_readonly("num_actions", [](const PyEnv& e) { return e.spec().action.n; })
      .def_property_readonly("max_episode_steps", [](const PyEnv& e) { return e.spec().max_episode_steps; });
}
