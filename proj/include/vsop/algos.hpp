#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsop/config.hpp"
#include "vsop/distributions.hpp"
#include "vsop/envs.hpp"
#include "vsop/nn.hpp"
#include "vsop/optim.hpp"
#include "vsop/rollout.hpp"
#include "vsop/rng.hpp"

namespace vsop::algos {

enum class Algorithm { vsop, a2c, ppo, dpo, rmpg, vsppo };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a);

class EmptyBufferError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class OffPolicyDataError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct AgentBundle {
  TrainConfig config;
  Algorithm algorithm = Algorithm::vsop;
  envs::EnvSpec spec;
  nn::Mlp actor;                // logits or Gaussian mean
  std::vector<double> log_std;  // continuous action spaces only
  nn::Mlp critic;               // scalar value
  optim::OptimizerState optimizer;
  rollout::RunningMoments obs_moments;
  Rng action_rng;
  Rng dropout_rng;
  Rng shuffle_rng;
  std::uint64_t policy_version = 1;
  std::size_t updates_done = 0;

  bool discrete() const { return spec.action.discrete; }
  // Thompson sampling and fitting masks are active for this algorithm.
  bool uses_thompson() const;
};

AgentBundle make_agent(const TrainConfig& config, const envs::EnvSpec& spec);

struct UpdateReport {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;  // PPO/DPO/VSPPO: ratio outside [1-eps, 1+eps]; others: advantages clipped to zero
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
  double learning_rate = 0.0;
  double decay_coeff = 0.0;
  std::size_t minibatch_steps = 0;
  // Norm of the policy-gradient term alone, accumulated before decay and entropy.
  double policy_gradient_norm = 0.0;
};

// Collection state for one training run.
struct Collector {
  envs::VecEnv envs;
  rollout::RewardScaler reward_scaler;
  Matrix observations;  // normalized observations of the current states
  std::vector<double> completed_returns;
  std::vector<std::size_t> completed_lengths;

  Collector(const TrainConfig& config, AgentBundle& agent);
};

double clip_positive(double h);

// Observation preprocessing; `update` adds x to the running moments first.
std::vector<double> preprocess_obs(AgentBundle& agent, std::span<const double> x, bool update);
std::vector<double> preprocess_obs(const AgentBundle& agent, std::span<const double> x);

// Fills the buffer with num_steps steps from every environment under the
// current policy and assigns bootstrap values from the current critic.
void collect(AgentBundle& agent, Collector& collector, rollout::RolloutBuffer& buffer);

UpdateReport vsop_update(AgentBundle& agent, rollout::RolloutBuffer& buffer);
UpdateReport a2c_update(AgentBundle& agent, rollout::RolloutBuffer& buffer);
UpdateReport ppo_update(AgentBundle& agent, rollout::RolloutBuffer& buffer);  // also VSPPO
UpdateReport dpo_update(AgentBundle& agent, rollout::RolloutBuffer& buffer);
UpdateReport rmpg_update(AgentBundle& agent, rollout::RolloutBuffer& buffer);
UpdateReport update(AgentBundle& agent, rollout::RolloutBuffer& buffer);

struct EvalResult {
  double mean = 0.0;
  double std = 0.0;
  std::vector<double> returns;
};

// Mean-network policy (argmax / Gaussian mean, no dropout), frozen statistics.
EvalResult evaluate(const AgentBundle& agent, const std::string& env_id, std::size_t episodes, Rng& rng);

// ---------------------------------------------------------------- estimator pieces

// PPO clipped surrogate min(rho h, clip(rho, 1-eps, 1+eps) h) and its
// derivative with respect to rho.
double ppo_objective(double rho, double h, double eps);
double ppo_objective_grad(double rho, double h, double eps);

// DPO drift: for h >= 0 relu((rho-1)h - a tanh((rho-1)h/a)); else
// relu(log(rho) h - b tanh(log(rho) h / b)).
double dpo_drift(double rho, double h, double a, double b);
double dpo_drift_grad(double rho, double h, double a, double b);  // d drift / d rho

// All-actions gradient of sum_a pi(a) h_plus(a) with respect to the logits.
std::vector<double> all_actions_logit_grad(std::span<const double> logits, std::span<const double> h_plus);

}  // namespace vsop::algos
