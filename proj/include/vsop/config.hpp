#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vsop {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  std::string algorithm = "vsop";  // vsop | a2c | ppo | dpo | rmpg | vsppo
  std::string env_id = "CartPole-v1";
  std::uint64_t total_timesteps = 500000;
  std::size_t num_envs = 16;
  std::size_t num_steps = 64;
  double learning_rate = 8.5e-4;
  bool anneal_lr = true;
  std::string optimizer = "adam";  // adam | rmsprop
  double optim_eps = 1e-8;
  double gamma = 0.99;
  double gae_lambda = 0.58;
  std::size_t num_minibatches = 16;
  std::size_t update_epochs = 8;
  double ent_coef = 0.01;
  double vf_coef = 0.5;
  double max_grad_norm = 1.9;  // inf disables clipping
  double dropout = 0.0;
  double weight_decay = 0.0;
  bool decay_from_dropout = false;  // use (1 - p) / (2 |D|) instead of weight_decay
  bool spectral_actor = false;
  bool spectral_critic = false;
  bool thompson_sampling = false;
  bool norm_adv = false;
  double clip_coef = 0.2;
  bool clip_vloss = false;
  double dpo_alpha = 2.0;
  double dpo_beta = 0.6;
  std::size_t hidden_width = 64;
  std::size_t hidden_depth = 2;
  std::string activation = "tanh";
  bool norm_obs = false;
  bool norm_reward = false;
  double log_std_init = 0.0;
  std::size_t rmpg_mc_actions = 0;  // sampled actions per state for continuous RMPG; 0 disables
  std::uint64_t seed = 1;
  std::size_t eval_interval = 10;  // updates between evaluations; 0 disables
  std::size_t eval_episodes = 10;
  double target_return = std::numeric_limits<double>::infinity();  // stop once eval mean reaches it

  std::size_t batch_size() const { return num_envs * num_steps; }
  std::size_t minibatch_size() const { return batch_size() / num_minibatches; }
  std::size_t num_updates() const { return static_cast<std::size_t>(total_timesteps / batch_size()); }

  // Throws ConfigError describing the first violated constraint.
  void validate() const;

  // Sets one field from its text form; unknown keys throw.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static std::vector<std::string> keys();

  // Flat `key = value` text, one line per field in declaration order.
  std::string serialize() const;
  static TrainConfig parse(std::string_view text);
  // Applies `key = value` lines on top of this config.
  void merge(std::string_view text);
  void apply_override(std::string_view assignment);  // "key=value"

  bool operator==(const TrainConfig&) const = default;
};

TrainConfig load_config(const std::string& path);
void save_config(const TrainConfig& config, const std::string& path);

std::vector<std::string> preset_names();
TrainConfig preset(std::string_view name);

// Shortest round-trip text for a double ("inf", "-inf" and "nan" included).
std::string format_double(double x);
double parse_double(std::string_view text);

}  // namespace vsop
