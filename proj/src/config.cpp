#include "vsop/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <type_traits>

#include "vsop/nn.hpp"
#include "vsop/optim.hpp"

namespace vsop {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, res.ptr);
  // keep a decimal marker so the value reads back as a float in TOML tools
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

double parse_double(std::string_view text) {
  if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double x = 0.0;
  const char* begin = text.data();
  if (!text.empty() && text.front() == '+') ++begin;
  const auto res = std::from_chars(begin, text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("not a number: '" + std::string(text) + "'");
  return x;
}

namespace {

template <typename Self, typename F>
void visit_fields(Self& c, F&& f) {
  f("algorithm", c.algorithm);
  f("env_id", c.env_id);
  f("total_timesteps", c.total_timesteps);
  f("num_envs", c.num_envs);
  f("num_steps", c.num_steps);
  f("learning_rate", c.learning_rate);
  f("anneal_lr", c.anneal_lr);
  f("optimizer", c.optimizer);
  f("optim_eps", c.optim_eps);
  f("gamma", c.gamma);
  f("gae_lambda", c.gae_lambda);
  f("num_minibatches", c.num_minibatches);
  f("update_epochs", c.update_epochs);
  f("ent_coef", c.ent_coef);
  f("vf_coef", c.vf_coef);
  f("max_grad_norm", c.max_grad_norm);
  f("dropout", c.dropout);
  f("weight_decay", c.weight_decay);
  f("decay_from_dropout", c.decay_from_dropout);
  f("spectral_actor", c.spectral_actor);
  f("spectral_critic", c.spectral_critic);
  f("thompson_sampling", c.thompson_sampling);
  f("norm_adv", c.norm_adv);
  f("clip_coef", c.clip_coef);
  f("clip_vloss", c.clip_vloss);
  f("dpo_alpha", c.dpo_alpha);
  f("dpo_beta", c.dpo_beta);
  f("hidden_width", c.hidden_width);
  f("hidden_depth", c.hidden_depth);
  f("activation", c.activation);
  f("norm_obs", c.norm_obs);
  f("norm_reward", c.norm_reward);
  f("log_std_init", c.log_std_init);
  f("rmpg_mc_actions", c.rmpg_mc_actions);
  f("seed", c.seed);
  f("eval_interval", c.eval_interval);
  f("eval_episodes", c.eval_episodes);
  f("target_return", c.target_return);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::string to_text(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return '"' + v + '"';
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, double>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

template <typename T>
void from_text(std::string_view key, std::string_view text, T& out) {
  if constexpr (std::is_same_v<T, std::string>) {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = text.substr(1, text.size() - 2);
    out = std::string(text);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1")
      out = true;
    else if (text == "false" || text == "0")
      out = false;
    else
      throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(text) + "'");
  } else if constexpr (std::is_same_v<T, double>) {
    try {
      out = parse_double(text);
    } catch (const ConfigError&) {
      throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
  } else {
    // counts accept integer-valued floats such as 5e5
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec == std::errc() && res.ptr == text.data() + text.size()) {
      out = value;
      return;
    }
    double x = 0.0;
    try {
      x = parse_double(text);
    } catch (const ConfigError&) {
      x = -1.0;
    }
    if (!(x >= 0.0) || x != std::floor(x) || x > 1.8e19)
      throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(text) + "'");
    out = static_cast<T>(x);
  }
}

}  // namespace

void TrainConfig::set(std::string_view key, std::string_view value) {
  bool found = false;
  visit_fields(*this, [&](std::string_view name, auto& field) {
    if (name == key) {
      from_text(key, trim(value), field);
      found = true;
    }
  });
  if (!found) throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string TrainConfig::get(std::string_view key) const {
  std::string out;
  bool found = false;
  visit_fields(*this, [&](std::string_view name, const auto& field) {
    if (name == key) {
      out = to_text(field);
      found = true;
    }
  });
  if (!found) throw ConfigError("unknown config key '" + std::string(key) + "'");
  return out;
}

std::vector<std::string> TrainConfig::keys() {
  std::vector<std::string> out;
  TrainConfig c;
  visit_fields(c, [&](std::string_view name, auto&) { out.emplace_back(name); });
  return out;
}

std::string TrainConfig::serialize() const {
  std::string out;
  visit_fields(*this, [&](std::string_view name, const auto& field) {
    out += name;
    out += " = ";
    out += to_text(field);
    out += '\n';
  });
  return out;
}

void TrainConfig::merge(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    // strip comments outside quotes
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line = line.substr(0, i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

TrainConfig TrainConfig::parse(std::string_view text) {
  TrainConfig c;
  c.merge(text);
  return c;
}

void TrainConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must look like key=value: '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void TrainConfig::validate() const {
  static const char* algos[] = {"vsop", "a2c", "ppo", "dpo", "rmpg", "vsppo"};
  if (std::find(std::begin(algos), std::end(algos), algorithm) == std::end(algos))
    throw ConfigError("unknown algorithm '" + algorithm + "' (expected vsop, a2c, ppo, dpo, rmpg or vsppo)");
  if (num_envs == 0 || num_steps == 0) throw ConfigError("num_envs and num_steps must be positive");
  if (num_minibatches == 0) throw ConfigError("num_minibatches must be positive");
  if (batch_size() % num_minibatches != 0)
    throw ConfigError("num_envs * num_steps = " + std::to_string(batch_size()) + " is not divisible by num_minibatches = " +
                      std::to_string(num_minibatches));
  if (total_timesteps < batch_size())
    throw ConfigError("total_timesteps = " + std::to_string(total_timesteps) + " is smaller than one batch (" +
                      std::to_string(batch_size()) + ")");
  if (update_epochs == 0) throw ConfigError("update_epochs must be positive");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must lie in [0, 1]");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(max_grad_norm > 0.0)) throw ConfigError("max_grad_norm must be positive (inf disables it)");
  if (!(clip_coef > 0.0)) throw ConfigError("clip_coef must be positive");
  if (!(optim_eps > 0.0)) throw ConfigError("optim_eps must be positive");
  if (!(dpo_alpha > 0.0 && dpo_beta > 0.0)) throw ConfigError("dpo_alpha and dpo_beta must be positive");
  if (hidden_width == 0 || hidden_depth == 0) throw ConfigError("hidden_width and hidden_depth must be positive");
  if (eval_interval > 0 && eval_episodes == 0) throw ConfigError("eval_episodes must be positive when evaluating");
  try {
    optim::parse_kind(optimizer);
    nn::parse_activation(activation);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return TrainConfig::parse(ss.str());
}

void save_config(const TrainConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file '" + path + "'");
  out << config.serialize();
}

// ---------------------------------------------------------------- presets

namespace {

TrainConfig classic_base() {
  TrainConfig c;
  c.env_id = "CartPole-v1";
  c.total_timesteps = 500000;
  c.gamma = 0.99;
  c.hidden_width = 64;
  c.hidden_depth = 2;
  c.activation = "tanh";
  c.ent_coef = 0.01;
  c.vf_coef = 0.5;
  c.anneal_lr = true;
  return c;
}

TrainConfig vsop_classic() {
  TrainConfig c = classic_base();
  c.algorithm = "vsop";
  c.learning_rate = 8.5e-4;
  c.num_envs = 16;
  c.num_steps = 64;
  c.gae_lambda = 0.58;
  c.num_minibatches = 16;
  c.update_epochs = 8;
  c.max_grad_norm = 1.9;
  c.optimizer = "adam";
  c.optim_eps = 1e-8;
  c.spectral_critic = true;
  c.thompson_sampling = true;
  c.dropout = 0.0;
  c.norm_obs = true;
  c.norm_reward = true;
  return c;
}

TrainConfig ppo_classic() {
  TrainConfig c = classic_base();
  c.algorithm = "ppo";
  c.learning_rate = 1e-3;
  c.num_envs = 8;
  c.num_steps = 8;
  c.gae_lambda = 0.54;
  c.num_minibatches = 8;
  c.update_epochs = 3;
  c.max_grad_norm = 3.4;
  c.clip_coef = 0.2;
  c.optimizer = "adam";
  c.optim_eps = 1e-5;
  c.norm_adv = true;
  c.clip_vloss = true;
  return c;
}

TrainConfig a3c_classic() {
  TrainConfig c = classic_base();
  c.algorithm = "a2c";
  c.learning_rate = 5.5e-4;
  c.num_envs = 8;
  c.num_steps = 4;
  c.gae_lambda = 0.13;
  c.num_minibatches = 8;
  c.update_epochs = 1;
  c.max_grad_norm = 3.8;
  c.optimizer = "rmsprop";
  c.optim_eps = 3e-6;
  return c;
}

TrainConfig dpo_classic() {
  TrainConfig c = classic_base();
  c.algorithm = "dpo";
  c.learning_rate = 1e-3;
  c.num_envs = 4;
  c.num_steps = 4;
  c.gae_lambda = 1.0;
  c.num_minibatches = 1;
  c.update_epochs = 10;
  c.max_grad_norm = 5.0;
  c.clip_coef = 0.2;
  c.optimizer = "adam";
  c.optim_eps = 1e-5;
  c.norm_adv = true;
  return c;
}

TrainConfig mujoco_base() {
  TrainConfig c;
  c.env_id = "Pendulum-v1";
  c.total_timesteps = 3000000;
  c.num_envs = 1;
  c.num_steps = 2048;
  c.learning_rate = 3e-4;
  c.anneal_lr = true;
  c.optimizer = "adam";
  c.optim_eps = 1e-8;
  c.gamma = 0.99;
  c.gae_lambda = 0.95;
  c.num_minibatches = 32;
  c.update_epochs = 10;
  c.norm_adv = false;
  c.clip_vloss = false;
  c.ent_coef = 0.0;
  c.vf_coef = 0.5;
  c.max_grad_norm = std::numeric_limits<double>::infinity();
  c.norm_obs = true;
  c.norm_reward = true;
  c.hidden_width = 256;
  c.hidden_depth = 2;
  c.activation = "relu";
  c.weight_decay = 2.4e-4;
  c.dropout = 0.02;
  c.spectral_critic = true;
  c.thompson_sampling = true;
  return c;
}

TrainConfig vsop_mujoco() {
  TrainConfig c = mujoco_base();
  c.algorithm = "vsop";
  return c;
}

TrainConfig vsppo_mujoco() {
  TrainConfig c = mujoco_base();
  c.algorithm = "vsppo";
  c.clip_coef = 0.2;
  return c;
}

TrainConfig rmpg_mujoco() {
  TrainConfig c = mujoco_base();
  c.algorithm = "rmpg";
  c.rmpg_mc_actions = 4;
  return c;
}

TrainConfig a3c_mujoco() {
  TrainConfig c = mujoco_base();
  c.algorithm = "a2c";
  c.num_steps = 5;
  c.learning_rate = 7e-4;
  c.optimizer = "rmsprop";
  c.optim_eps = 3e-6;
  c.gae_lambda = 1.0;
  c.num_minibatches = 1;
  c.update_epochs = 1;
  c.max_grad_norm = 0.5;
  c.hidden_width = 64;
  c.activation = "tanh";
  c.weight_decay = 0.0;
  c.dropout = 0.0;
  c.spectral_critic = false;
  c.thompson_sampling = false;
  return c;
}

TrainConfig ppo_mujoco() {
  TrainConfig c = mujoco_base();
  c.algorithm = "ppo";
  c.optim_eps = 1e-5;
  c.norm_adv = true;
  c.clip_coef = 0.2;
  c.clip_vloss = true;
  c.max_grad_norm = 0.5;
  c.hidden_width = 64;
  c.activation = "tanh";
  c.weight_decay = 0.0;
  c.dropout = 0.0;
  c.spectral_critic = false;
  c.thompson_sampling = false;
  return c;
}

struct EnvAlias {
  const char* suffix;
  const char* env_id;
  std::uint64_t timesteps;
};

constexpr EnvAlias kEnvAliases[] = {
    {"cartpole", "CartPole-v1", 500000},
    {"acrobot", "Acrobot-v1", 500000},
    {"mountaincar", "MountainCarContinuous-v0", 1000000},
    {"pendulum", "Pendulum-v1", 500000},
};

const std::map<std::string, std::function<TrainConfig()>, std::less<>>& registry() {
  static const auto table = [] {
    std::map<std::string, std::function<TrainConfig()>, std::less<>> m;
    const std::pair<const char*, TrainConfig (*)()> classic[] = {
        {"vsop", vsop_classic}, {"ppo", ppo_classic}, {"a3c", a3c_classic}, {"dpo", dpo_classic}};
    for (const auto& [name, make] : classic) {
      m[std::string(name) + "-classic"] = make;
      for (const auto& alias : kEnvAliases) {
        const std::string env = alias.env_id;
        const std::uint64_t steps = alias.timesteps;
        m[std::string(name) + "-" + alias.suffix] = [make, env, steps] {
          TrainConfig c = make();
          c.env_id = env;
          c.total_timesteps = steps;
          return c;
        };
      }
    }
    m["vsop-mujoco"] = vsop_mujoco;
    m["vsppo-mujoco"] = vsppo_mujoco;
    m["rmpg-mujoco"] = rmpg_mujoco;
    m["a3c-mujoco"] = a3c_mujoco;
    m["ppo-mujoco"] = ppo_mujoco;
    return m;
  }();
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, make] : registry()) out.push_back(name);
  return out;
}

TrainConfig preset(std::string_view name) {
  const auto& r = registry();
  const auto it = r.find(name);
  if (it == r.end()) {
    std::string known;
    for (const auto& [k, v] : r) known += " " + k;
    throw ConfigError("unknown preset '" + std::string(name) + "'; available:" + known);
  }
  return it->second();
}

}  // namespace vsop
